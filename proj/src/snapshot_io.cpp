#include "roughflow/snapshot_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "roughflow/error.hpp"

namespace roughflow {

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xffu);
  out.write(b, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError("binary snapshot: truncated");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return v;
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

}  // namespace

void write_particle_csv(std::ostream& out, double t, std::span<const Vec2> positions,
                        std::span<const double> weights) {
  if (positions.size() != weights.size()) throw InvalidArgument("particle csv: weights size mismatch");
  out << "t,id,x1,x2,weight\n";
  char line[160];
  for (std::size_t i = 0; i < positions.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%zu,%.17g,%.17g,%.17g\n", t, i, positions[i].x, positions[i].y,
                  weights[i]);
    out << line;
  }
}

ParticleSnapshot read_particle_csv(std::istream& in) {
  ParticleSnapshot s;
  std::string line;
  if (!std::getline(in, line) || trim(line) != "t,id,x1,x2,weight")
    throw FormatError("particle csv: expected header t,id,x1,x2,weight");
  std::size_t row = 0;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    double t, x1, x2, w;
    unsigned long long id;
    char tail;
    if (std::sscanf(line.c_str(), "%lf,%llu,%lf,%lf,%lf%c", &t, &id, &x1, &x2, &w, &tail) != 5)
      throw FormatError("particle csv: malformed row " + std::to_string(row + 1));
    if (id != row) throw FormatError("particle csv: ids must be 0..N_p-1 in order");
    if (row == 0) s.t = t;
    else if (t != s.t) throw FormatError("particle csv: mixed snapshot times");
    if (!std::isfinite(x1) || !std::isfinite(x2) || !std::isfinite(w))
      throw FormatError("particle csv: non-finite value in row " + std::to_string(row + 1));
    s.positions.push_back({x1, x2});
    s.weights.push_back(w);
    ++row;
  }
  return s;
}

void write_binary_snapshot(std::ostream& out, const BinarySnapshot& s) {
  if (s.width == 0 || s.records.size() % s.width != 0)
    throw InvalidArgument("binary snapshot: records are not a multiple of the width");
  out.write(kSnapshotMagic, 8);
  put_u64(out, s.count());
  put_f64(out, s.t);
  put_u64(out, s.width);
  for (double v : s.records) put_f64(out, v);
}

BinarySnapshot read_binary_snapshot(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kSnapshotMagic, 8) != 0)
    throw FormatError("binary snapshot: bad magic");
  BinarySnapshot s;
  const std::uint64_t n = get_u64(in);
  s.t = get_f64(in);
  s.width = get_u64(in);
  if (s.width == 0 || s.width > 64) throw FormatError("binary snapshot: bad record width");
  if (n > (std::uint64_t{1} << 32)) throw FormatError("binary snapshot: implausible record count");
  s.records.resize(n * s.width);
  for (double& v : s.records) v = get_f64(in);
  return s;
}

BinarySnapshot particle_snapshot(double t, std::span<const Vec2> positions, std::span<const double> weights) {
  if (positions.size() != weights.size()) throw InvalidArgument("particle snapshot: weights size mismatch");
  BinarySnapshot s;
  s.t = t;
  s.width = 3;
  s.records.reserve(3 * positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    s.records.push_back(positions[i].x);
    s.records.push_back(positions[i].y);
    s.records.push_back(weights[i]);
  }
  return s;
}

ParticleSnapshot to_particles(const BinarySnapshot& s) {
  if (s.width != 3) throw FormatError("binary snapshot: particle records need width 3");
  ParticleSnapshot p;
  p.t = s.t;
  for (std::size_t i = 0; i < s.count(); ++i) {
    p.positions.push_back({s.records[3 * i], s.records[3 * i + 1]});
    p.weights.push_back(s.records[3 * i + 2]);
  }
  return p;
}

BinarySnapshot grid_snapshot(double t, const GridField& f) {
  BinarySnapshot s;
  s.t = t;
  s.width = 1;
  s.records.assign(f.values().begin(), f.values().end());
  return s;
}

GridField to_grid(const BinarySnapshot& s) {
  if (s.width != 1) throw FormatError("binary snapshot: grid records need width 1");
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(s.count()))));
  if (n * n != s.count() || !std::has_single_bit(n))
    throw FormatError("binary snapshot: grid cell count is not a square power of two");
  return GridField(n, s.records);
}

}  // namespace roughflow

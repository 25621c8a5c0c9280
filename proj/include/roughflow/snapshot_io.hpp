#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "roughflow/geometry.hpp"
#include "roughflow/torus_field.hpp"

namespace roughflow {

/// Particle CSV: header `t,id,x1,x2,weight`, one row per particle.
void write_particle_csv(std::ostream& out, double t, std::span<const Vec2> positions,
                        std::span<const double> weights);

struct ParticleSnapshot {
  double t = 0.0;
  std::vector<Vec2> positions;
  std::vector<double> weights;
};

ParticleSnapshot read_particle_csv(std::istream& in);

// Binary snapshot, little-endian:
//   char[8]  magic "RFSNAP01"
//   uint64   N_p   number of records
//   float64  T     snapshot time
//   uint64   M     float64 values per record
//   float64  records[N_p * M]
// Particles use M = 3 (x1, x2, weight) with the id implied by order.
// Grid fields use M = 1 with N_p = N² cells in row-major (i, j) order.
inline constexpr char kSnapshotMagic[8] = {'R', 'F', 'S', 'N', 'A', 'P', '0', '1'};

struct BinarySnapshot {
  double t = 0.0;
  std::uint64_t width = 0;  ///< M
  std::vector<double> records;

  std::uint64_t count() const { return width == 0 ? 0 : records.size() / width; }
};

void write_binary_snapshot(std::ostream& out, const BinarySnapshot& s);
BinarySnapshot read_binary_snapshot(std::istream& in);

BinarySnapshot particle_snapshot(double t, std::span<const Vec2> positions, std::span<const double> weights);
ParticleSnapshot to_particles(const BinarySnapshot& s);
BinarySnapshot grid_snapshot(double t, const GridField& f);
/// Throws FormatError unless the record count is a square power of two.
GridField to_grid(const BinarySnapshot& s);

}  // namespace roughflow

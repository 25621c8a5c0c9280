#include "roughflow/sigma_field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "roughflow/error.hpp"

namespace roughflow {

SigmaField SigmaField::constant(Vec2 c) {
  Term t;
  t.kind = Term::Kind::Constant;
  t.constant = c;
  return SigmaField({t});
}

SigmaField SigmaField::mode(double amplitude, int k1, int k2, double phase) {
  if (k1 == 0 && k2 == 0) throw InvalidArgument("sigma mode needs a nonzero wavevector");
  Term t;
  t.kind = Term::Kind::Mode;
  t.amplitude = amplitude;
  t.k1 = k1;
  t.k2 = k2;
  t.phase = phase;
  return SigmaField({t});
}

namespace {

std::vector<double> parse_numbers(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw InvalidArgument("sigma catalog id: bad number '" + cell + "'");
    }
  }
  return out;
}

}  // namespace

SigmaField SigmaField::parse(const std::string& id) {
  SigmaField out;
  std::stringstream ss(id);
  std::string part;
  while (std::getline(ss, part, '+')) {
    if (part == "zero") continue;
    const auto colon = part.find(':');
    if (colon == std::string::npos) throw InvalidArgument("sigma catalog id: '" + part + "'");
    const std::string kind = part.substr(0, colon);
    const auto nums = parse_numbers(part.substr(colon + 1));
    if (kind == "const" && nums.size() == 2) {
      out = out + constant({nums[0], nums[1]});
    } else if (kind == "mode" && (nums.size() == 3 || nums.size() == 4)) {
      if (nums[1] != std::round(nums[1]) || nums[2] != std::round(nums[2]))
        throw InvalidArgument("sigma catalog id: wavevector must be integer");
      out = out + mode(nums[0], static_cast<int>(nums[1]), static_cast<int>(nums[2]),
                       nums.size() == 4 ? nums[3] : 0.0);
    } else {
      throw InvalidArgument("sigma catalog id: '" + part + "'");
    }
  }
  return out;
}

Vec2 SigmaField::operator()(Vec2 x) const {
  Vec2 v;
  for (const auto& t : terms_) {
    if (t.kind == Term::Kind::Constant) {
      v += t.constant;
    } else {
      const double s = t.amplitude * std::sin(t.k1 * x.x + t.k2 * x.y + t.phase);
      v += Vec2{s * t.k2, -s * t.k1};
    }
  }
  return v;
}

Mat2 SigmaField::jacobian(Vec2 x) const {
  Mat2 j;
  for (const auto& t : terms_) {
    if (t.kind != Term::Kind::Mode) continue;
    const double c = t.amplitude * std::cos(t.k1 * x.x + t.k2 * x.y + t.phase);
    j += Mat2{c * t.k2 * t.k1, c * t.k2 * t.k2, -c * t.k1 * t.k1, -c * t.k1 * t.k2};
  }
  return j;
}

double SigmaField::c_norm(int order) const {
  double total = 0.0;
  for (const auto& t : terms_) {
    if (t.kind == Term::Kind::Constant) {
      total += norm(t.constant);
    } else {
      const double k = std::hypot(static_cast<double>(t.k1), static_cast<double>(t.k2));
      for (int j = 0; j <= order; ++j) total += std::abs(t.amplitude) * std::pow(k, j + 1);
    }
  }
  return total;
}

bool SigmaField::is_constant() const {
  for (const auto& t : terms_)
    if (t.kind != Term::Kind::Constant) return false;
  return true;
}

std::string SigmaField::id() const {
  if (terms_.empty()) return "zero";
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto& t = terms_[i];
    if (i) os << '+';
    if (t.kind == Term::Kind::Constant)
      os << "const:" << t.constant.x << ',' << t.constant.y;
    else
      os << "mode:" << t.amplitude << ',' << t.k1 << ',' << t.k2 << ',' << t.phase;
  }
  return os.str();
}

SigmaField SigmaField::scaled(double a) const {
  SigmaField out(*this);
  for (auto& t : out.terms_) {
    t.constant *= a;
    t.amplitude *= a;
  }
  return out;
}

SigmaField operator+(const SigmaField& a, const SigmaField& b) {
  std::vector<SigmaField::Term> terms = a.terms_;
  terms.insert(terms.end(), b.terms_.begin(), b.terms_.end());
  return SigmaField(std::move(terms));
}

SigmaField difference(const SigmaField& a, const SigmaField& b) {
  using Kind = SigmaField::Term::Kind;
  // Terms of the same shape merge: constants by vector, modes with equal
  // wavevector and phase by amplitude.
  auto same_shape = [](const SigmaField::Term& x, const SigmaField::Term& y) {
    if (x.kind != y.kind) return false;
    if (x.kind == Kind::Constant) return true;
    return x.k1 == y.k1 && x.k2 == y.k2 && x.phase == y.phase;
  };
  std::vector<SigmaField::Term> out = a.terms_;
  for (auto t : b.terms_) {
    auto match = std::find_if(out.begin(), out.end(), [&](const auto& x) { return same_shape(x, t); });
    if (match == out.end()) {
      t.constant = -t.constant;
      t.amplitude = -t.amplitude;
      out.push_back(t);
    } else if (t.kind == Kind::Constant) {
      match->constant = match->constant - t.constant;
    } else {
      match->amplitude -= t.amplitude;
    }
  }
  std::erase_if(out, [](const SigmaField::Term& t) {
    return t.kind == Kind::Constant ? (t.constant.x == 0.0 && t.constant.y == 0.0) : t.amplitude == 0.0;
  });
  return SigmaField(std::move(out));
}

}  // namespace roughflow

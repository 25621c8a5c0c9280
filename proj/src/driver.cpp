#include "roughflow/driver.hpp"

#include <algorithm>

#include "roughflow/error.hpp"
#include "roughflow/torus_field.hpp"

namespace roughflow {

DriverPair::DriverPair(std::vector<SigmaField> sigmas, RoughPath rp, int sign,
                       std::size_t check_resolution)
    : sigmas_(std::move(sigmas)), path_(std::move(rp)), sign_(sign) {
  if (sigmas_.size() != path_.dim())
    throw InvalidArgument("driver: number of sigma fields must equal the rough path dimension");
  if (sign_ != 1 && sign_ != -1) throw InvalidArgument("driver: sign must be +1 or -1");
  for (const auto& s : sigmas_)
    divergence_defect_ = std::max(divergence_defect_, sigma_divergence_defect(s, check_resolution));
  if (divergence_defect_ > 1e-10) throw InvalidArgument("driver: sigma field is not divergence-free");
}

double DriverPair::c_norm(int order) const {
  double s = 0.0;
  for (const auto& f : sigmas_) s += f.c_norm(order);
  return s;
}

bool DriverPair::all_zero() const {
  return std::all_of(sigmas_.begin(), sigmas_.end(), [](const SigmaField& f) { return f.is_zero(); });
}

DriverPair DriverPair::with_path(RoughPath rp) const {
  DriverPair out = *this;
  if (rp.dim() != sigmas_.size()) throw InvalidArgument("driver: rough path dimension mismatch");
  out.path_ = std::move(rp);
  return out;
}

DriverPair DriverPair::with_sigmas(std::vector<SigmaField> sigmas) const {
  return DriverPair(std::move(sigmas), path_, sign_);
}

DriverPair DriverPair::with_sign(int sign) const {
  if (sign != 1 && sign != -1) throw InvalidArgument("driver: sign must be +1 or -1");
  DriverPair out = *this;
  out.sign_ = sign;
  return out;
}

double sigma_distance(const DriverPair& a, const DriverPair& b, int order) {
  if (a.dim() != b.dim()) throw InvalidArgument("sigma distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < a.dim(); ++j) s += difference(a.sigma(j), b.sigma(j)).c_norm(order);
  return s;
}

}  // namespace roughflow

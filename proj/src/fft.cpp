#include "fft.hpp"

#include <map>
#include <mutex>
#include <tuple>

namespace roughflow::detail {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

FftPlan::FftPlan(int rank, std::size_t n, int sign) {
  // Planning with FFTW_ESTIMATE never touches the buffer contents.
  std::vector<cplx> scratch(rank == 1 ? n : n * n);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  if (rank == 1)
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  else
    plan_ = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), buf, buf, sign,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
}

FftPlan::~FftPlan() { fftw_destroy_plan(plan_); }

const FftPlan& FftPlan::get(int rank, std::size_t n, int sign) {
  static std::map<std::tuple<int, std::size_t, int>, std::unique_ptr<FftPlan>> plans;
  std::lock_guard lock(planner_mutex());
  auto& slot = plans[{rank, n, sign}];
  if (!slot) slot.reset(new FftPlan(rank, n, sign));
  return *slot;
}

void FftPlan::execute(cplx* data) const {
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan_, buf, buf);
}

}  // namespace roughflow::detail

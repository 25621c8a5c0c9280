#pragma once

// Thin RAII wrapper over FFTW plans. Internal to the library.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

namespace roughflow::detail {

using cplx = std::complex<double>;

/// Unnormalized in-place complex DFT of fixed size (1D or 2D square).
/// Plans are created once per shape and shared; execution is thread-safe
/// because each call uses fftw_execute_dft on caller-owned buffers.
class FftPlan {
 public:
  /// rank 1: length n; rank 2: n x n.
  static const FftPlan& get(int rank, std::size_t n, int sign);

  void execute(cplx* data) const;

  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

 private:
  FftPlan(int rank, std::size_t n, int sign);
  fftw_plan plan_;
};

inline void fft(std::vector<cplx>& data, int rank, std::size_t n) {
  FftPlan::get(rank, n, FFTW_FORWARD).execute(data.data());
}
inline void ifft(std::vector<cplx>& data, int rank, std::size_t n) {
  FftPlan::get(rank, n, FFTW_BACKWARD).execute(data.data());
  const double scale = 1.0 / static_cast<double>(data.size());
  for (auto& v : data) v *= scale;
}

/// Signed wavenumber of DFT bin k for length n.
inline long wavenumber(std::size_t k, std::size_t n) {
  return k <= n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

}  // namespace roughflow::detail

#pragma once

#include <complex>
#include <span>

#include <fftw3.h>

namespace dks {

/// In-place style 1-D complex DFT with its own aligned buffer.
/// forward: X_j = sum_k x_k e^{-2 pi i jk/n}; backward: the + sign, no scaling.
class FftPlan {
 public:
  FftPlan(int n, bool forward);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  int size() const noexcept { return n_; }
  std::span<std::complex<double>> data() noexcept { return {buffer_, static_cast<std::size_t>(n_)}; }
  void execute() noexcept;

 private:
  int n_;
  std::complex<double>* buffer_;
  fftw_plan plan_;
};

}  // namespace dks

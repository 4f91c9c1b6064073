#include "alrd/fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace alrd {
namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

void fft2d(std::vector<std::complex<double>>& data, int n0, int n1, int sign) {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lk(planner_mutex());
    plan = fftw_plan_dft_2d(n0, n1, p, p, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lk(planner_mutex());
  fftw_destroy_plan(plan);
}

void fft1d(std::vector<std::complex<double>>& data, int n, int sign) {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lk(planner_mutex());
    plan = fftw_plan_dft_1d(n, p, p, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lk(planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace alrd

#pragma once
#include <complex>
#include <vector>

namespace alrd {

// In-place unnormalized 2D DFT on a row-major n0 x n1 array.
// sign = -1 forward, +1 backward (FFTW convention).
void fft2d(std::vector<std::complex<double>>& data, int n0, int n1, int sign);
void fft1d(std::vector<std::complex<double>>& data, int n, int sign);

}  // namespace alrd

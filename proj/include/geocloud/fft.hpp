#pragma once

#include <complex>
#include <vector>

namespace geocloud {

/// Forward DFT: X[k] = sum_m x[m] exp(-2*pi*i*k*m/N).
/// Radix-2 Cooley-Tukey when N is a power of two, direct evaluation otherwise.
std::vector<std::complex<double>> fft_forward(const std::vector<std::complex<double>>& input);

}  // namespace geocloud

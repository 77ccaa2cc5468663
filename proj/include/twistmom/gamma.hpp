#pragma once

#include <complex>

namespace twistmom {

/// log Gamma(z) for Re(z) >= 1/2 (Lanczos, g = 7, n = 9).
/// The imaginary part is a branch of arg Gamma(z), which is fine for exp().
std::complex<double> log_gamma(std::complex<double> z);

}  // namespace twistmom

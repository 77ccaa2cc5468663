#include "twistmom/gamma.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace twistmom {

namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczosCoeff = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

}  // namespace

std::complex<double> log_gamma(std::complex<double> z) {
  if (z.real() < 0.5) throw std::domain_error("log_gamma: Re(z) < 1/2 is outside the supported strip");
  const std::complex<double> zm = z - 1.0;
  std::complex<double> series = kLanczosCoeff[0];
  for (std::size_t i = 1; i < kLanczosCoeff.size(); ++i) {
    series += kLanczosCoeff[i] / (zm + static_cast<double>(i));
  }
  const std::complex<double> t = zm + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (zm + 0.5) * std::log(t) - t + std::log(series);
}

}  // namespace twistmom

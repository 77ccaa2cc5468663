#include "twistmom/weights.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "twistmom/gamma.hpp"
#include "twistmom/summation.hpp"

namespace twistmom {

namespace {

using cd = std::complex<double>;

constexpr double kImagTolerance = 1e-9;
constexpr double kTailTolerance = 1e-12;

}  // namespace

QuadratureParams default_quadrature(WeightKind kind) {
  return {1.0, kind == WeightKind::W ? 12.0 : 40.0, 1.0 / 64.0};
}

WeightEvaluator::WeightEvaluator(WeightKind kind, unsigned kappa, QuadratureParams params)
    : kind_(kind), kappa_(kappa), params_(params) {
  if (kappa == 0 || kappa % 2 != 0) throw std::invalid_argument("weight kappa must be even and positive");
  if (!(params.c > 0.0) || !(params.T > 0.0) || !(params.h > 0.0)) {
    throw std::invalid_argument("quadrature parameters c, T, h must be positive");
  }
  if (params.c >= kappa / 2.0) throw std::invalid_argument("contour abscissa must lie below kappa/2");
  const double ratio = params.T / params.h;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) throw std::invalid_argument("T/h must be an integer");
  right_ = make_contour(params.c);
  left_ = make_contour(-std::min(params.c, kappa / 4.0));
}

WeightEvaluator::Contour WeightEvaluator::make_contour(double sigma) const {
  Contour out;
  out.sigma = sigma;
  const auto steps = static_cast<long>(std::llround(params_.T / params_.h));
  const double half = kappa_ / 2.0;
  const double log_gamma_half = std::lgamma(half);
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  for (long k = -steps; k <= steps; ++k) {
    const double t = static_cast<double>(k) * params_.h;
    const cd s(sigma, t);
    cd lk;
    if (kind_ == WeightKind::W) {
      lk = log_gamma(half + s) - log_gamma_half + s * s - s * log_two_pi - std::log(s);
    } else {
      lk = 2.0 * (log_gamma(half + s) - log_gamma_half) - 2.0 * s * log_two_pi - std::log(s);
    }
    out.t.push_back(t);
    out.log_kernel.push_back(lk);
    out.weight.push_back((k == -steps || k == steps) ? 0.5 : 1.0);
    out.in_tail.push_back(std::abs(t) >= params_.T - 1.0);
  }
  return out;
}

WeightSample WeightEvaluator::sample(double x) const {
  if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("weight argument must be positive and finite");
  const bool use_left = x < 1.0;
  const Contour& contour = use_left ? left_ : right_;
  const double u = std::log(x);
  CompensatedComplexSum sum;
  CompensatedComplexSum dsum;
  CompensatedComplexSum d2sum;
  double tail = 0.0;
  for (std::size_t k = 0; k < contour.t.size(); ++k) {
    const cd s(contour.sigma, contour.t[k]);
    const cd term = contour.weight[k] * std::exp(contour.log_kernel[k] - s * u);
    sum += term;
    dsum += -s * term;
    d2sum += s * s * term;
    if (contour.in_tail[k]) tail += std::abs(term);
  }
  const double scale = params_.h / (2.0 * std::numbers::pi);
  const cd value = sum.value() * scale;
  WeightSample out{};
  out.value = value.real() + (use_left ? 1.0 : 0.0);
  out.imag = value.imag();
  out.tail = tail * scale;
  out.dlog_value = (dsum.value() * scale).real();
  out.dlog2_value = (d2sum.value() * scale).real();
  return out;
}

double WeightEvaluator::exact(double x) const {
  const WeightSample s = sample(x);
  if (std::abs(s.imag) > kImagTolerance) {
    throw std::runtime_error("weight quadrature: imaginary residue " + std::to_string(s.imag) + " at x = " +
                             std::to_string(x));
  }
  if (s.tail > kTailTolerance) {
    throw std::runtime_error("weight quadrature not converged: tail " + std::to_string(s.tail) + " at x = " +
                             std::to_string(x));
  }
  return s.value;
}

double WeightEvaluator::operator()(double x) const {
  if (has_grid() && x >= grid_lo_ && x <= grid_hi_) return interpolate(x);
  return exact(x);
}

void WeightEvaluator::attach_grid(std::size_t points, double x_lo, double x_hi) {
  if (points < 2 || !(x_lo > 0.0) || !(x_hi > x_lo)) throw std::invalid_argument("invalid grid specification");
  std::vector<double> values(points);
  std::vector<double> slopes(points);
  std::vector<double> curvatures(points);
  const double u_lo = std::log(x_lo);
  const double step = (std::log(x_hi) - u_lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const double x = std::exp(u_lo + step * static_cast<double>(i));
    const WeightSample s = sample(x);
    if (std::abs(s.imag) > kImagTolerance || s.tail > kTailTolerance) exact(x);  // throws with context
    values[i] = s.value;
    slopes[i] = s.dlog_value;
    curvatures[i] = s.dlog2_value;
  }
  attach_grid(x_lo, x_hi, std::move(values), std::move(slopes), std::move(curvatures));
}

void WeightEvaluator::attach_grid(double x_lo, double x_hi, std::vector<double> values, std::vector<double> slopes,
                                  std::vector<double> curvatures) {
  if (values.size() < 2 || values.size() != slopes.size() || values.size() != curvatures.size()) {
    throw std::invalid_argument("grid size mismatch");
  }
  grid_lo_ = x_lo;
  grid_hi_ = x_hi;
  grid_step_ = (std::log(x_hi) - std::log(x_lo)) / static_cast<double>(values.size() - 1);
  grid_values_ = std::move(values);
  grid_slopes_ = std::move(slopes);
  grid_curvatures_ = std::move(curvatures);
}

double WeightEvaluator::interpolate(double x) const {
  const double pos = (std::log(x) - std::log(grid_lo_)) / grid_step_;
  const std::size_t last = grid_values_.size() - 1;
  std::size_t i = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, static_cast<double>(last - 1)));
  const double t = std::clamp(pos - static_cast<double>(i), 0.0, 1.0);
  const double h = grid_step_;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double t4 = t3 * t;
  const double t5 = t4 * t;
  const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
  const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
  const double h2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
  const double g0 = 10 * t3 - 15 * t4 + 6 * t5;
  const double g1 = -4 * t3 + 7 * t4 - 3 * t5;
  const double g2 = 0.5 * (t3 - 2 * t4 + t5);
  return h0 * grid_values_[i] + h1 * h * grid_slopes_[i] + h2 * h * h * grid_curvatures_[i] +
         g0 * grid_values_[i + 1] + g1 * h * grid_slopes_[i + 1] + g2 * h * h * grid_curvatures_[i + 1];
}

double WeightEvaluator::tail_start(double eps) const {
  if (!(eps > 0.0)) throw std::invalid_argument("tail eps must be positive");
  constexpr std::size_t kPoints = 4096;
  const double u_lo = 0.0;
  const double u_hi = std::log(1e6);
  const double step = (u_hi - u_lo) / static_cast<double>(kPoints - 1);
  double start = 1.0;
  for (std::size_t i = kPoints; i-- > 0;) {
    const double x = std::exp(u_lo + step * static_cast<double>(i));
    if (std::abs((*this)(x)) >= eps) {
      start = std::exp(u_lo + step * static_cast<double>(std::min(i + 1, kPoints - 1)));
      break;
    }
  }
  return start;
}

double decay_audit(const WeightEvaluator& ev, double c_test, std::size_t points) {
  if (!(c_test > 0.0) || c_test >= ev.kappa() / 2.0) throw std::invalid_argument("c_test must lie in (0, kappa/2)");
  double worst = 0.0;
  const double step = std::log(1e4) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const double x = std::exp(step * static_cast<double>(i));
    worst = std::max(worst, std::abs(ev.exact(x)) * std::pow(x, c_test));
  }
  return worst;
}

}  // namespace twistmom

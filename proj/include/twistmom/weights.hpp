#pragma once

// Smooth weights W(x) and W2(x) of the approximate functional equations, by
// trapezoidal quadrature of their inverse Mellin integrals.

#include <complex>
#include <memory>
#include <vector>

namespace twistmom {

enum class WeightKind {
  W,   ///< Gamma(k/2+s)/Gamma(k/2) e^{s^2} (2 pi x)^{-s} / s
  W2,  ///< Gamma(k/2+s)^2/Gamma(k/2)^2 (2 pi)^{-2s} x^{-s} / s
};

struct QuadratureParams {
  double c;  ///< contour abscissa, > 0
  double T;  ///< truncation height
  double h;  ///< step; T/h must be an integer
};

/// c = 1, h = 1/64; T = 12 for W and 40 for W2.
QuadratureParams default_quadrature(WeightKind kind);

struct WeightSample {
  double value;
  double imag;         ///< imaginary residue of the quadrature (should vanish)
  double tail;         ///< magnitude of the |Im s| in [T-1, T] contribution
  double dlog_value;   ///< d value / d log x
  double dlog2_value;  ///< second derivative in log x
};

class WeightEvaluator {
public:
  WeightEvaluator(WeightKind kind, unsigned kappa, QuadratureParams params);
  WeightEvaluator(WeightKind kind, unsigned kappa) : WeightEvaluator(kind, kappa, default_quadrature(kind)) {}

  WeightKind kind() const { return kind_; }
  unsigned kappa() const { return kappa_; }
  const QuadratureParams& params() const { return params_; }

  /// Raw quadrature. For x < 1 the contour is moved to Re s = -min(c, kappa/4)
  /// and the residue 1 at s = 0 is added back.
  WeightSample sample(double x) const;

  /// Checked quadrature: throws std::runtime_error if the imaginary residue
  /// exceeds 1e-9 or the top unit of the contour contributes more than 1e-12.
  double exact(double x) const;

  /// Grid interpolation when a grid is attached and x lies inside it, else exact().
  double operator()(double x) const;

  /// Precomputes 2048 log-spaced samples on [1e-8, 1e6]; quintic Hermite interpolation in log x
  /// using exact first and second derivatives.
  void attach_grid(std::size_t points = 2048, double x_lo = 1e-8, double x_hi = 1e6);
  /// Attaches previously computed samples (value, d/dlog x, d^2/dlog x^2) on a log-uniform grid.
  void attach_grid(double x_lo, double x_hi, std::vector<double> values, std::vector<double> slopes,
                   std::vector<double> curvatures);
  bool has_grid() const { return !grid_values_.empty(); }
  const std::vector<double>& grid_values() const { return grid_values_; }
  const std::vector<double>& grid_slopes() const { return grid_slopes_; }
  const std::vector<double>& grid_curvatures() const { return grid_curvatures_; }
  double grid_lo() const { return grid_lo_; }
  double grid_hi() const { return grid_hi_; }

  /// Smallest x such that |W(y)| < eps for every sample y >= x on a fine log grid up to 1e6.
  double tail_start(double eps) const;

private:
  WeightKind kind_;
  unsigned kappa_;
  QuadratureParams params_;
  // Nodes s_k = sigma + i t_k and kernel logs for the right (sigma = c) and left contours.
  struct Contour {
    double sigma;
    std::vector<double> t;
    std::vector<std::complex<double>> log_kernel;
    std::vector<double> weight;
    std::vector<bool> in_tail;  // |t| >= T - 1
  };
  Contour right_;
  Contour left_;
  std::vector<double> grid_values_;
  std::vector<double> grid_slopes_;
  std::vector<double> grid_curvatures_;
  double grid_lo_ = 0.0;
  double grid_hi_ = 0.0;
  double grid_step_ = 0.0;

  Contour make_contour(double sigma) const;
  double interpolate(double x) const;
};

/// max over a log grid of x in [1, 1e4] of |W(x)| x^{c_test}; requires 0 < c_test < kappa/2.
double decay_audit(const WeightEvaluator& ev, double c_test, std::size_t points = 400);

}  // namespace twistmom

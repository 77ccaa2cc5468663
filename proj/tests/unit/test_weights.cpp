#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "twistmom/weights.hpp"

using namespace twistmom;
using cd = std::complex<double>;

namespace {

// log Gamma by Stirling's series after shifting the argument up by 12.
cd stirling_log_gamma(cd z) {
  cd shift = 0;
  for (int j = 0; j < 12; ++j) shift += std::log(z + static_cast<double>(j));
  const cd w = z + 12.0;
  const cd w2 = w * w;
  const cd series = 1.0 / (12.0 * w) - 1.0 / (360.0 * w * w2) + 1.0 / (1260.0 * w * w2 * w2) -
                    1.0 / (1680.0 * w * w2 * w2 * w2);
  return (w - 0.5) * std::log(w) - w + 0.5 * std::log(2.0 * std::numbers::pi) + series - shift;
}

// Plain right-contour midpoint rule on Re s = c with its own step and height.
double oracle_weight(WeightKind kind, double x, double c, double T, double h) {
  const double lg6 = std::lgamma(6.0);
  const double l2p = std::log(2.0 * std::numbers::pi);
  cd sum = 0;
  for (double t = -T + h / 2; t < T; t += h) {
    const cd s(c, t);
    cd lk = kind == WeightKind::W ? stirling_log_gamma(6.0 + s) - lg6 + s * s - s * l2p
                                  : 2.0 * (stirling_log_gamma(6.0 + s) - lg6) - 2.0 * s * l2p;
    sum += std::exp(lk - s * std::log(x)) / s;
  }
  return (sum * h / (2.0 * std::numbers::pi)).real();
}

}  // namespace

TEST_CASE("weights near zero are one") {
  WeightEvaluator w(WeightKind::W, 12);
  WeightEvaluator w2(WeightKind::W2, 12);
  CHECK(std::abs(w.exact(1e-6) - 1.0) < 1e-4);
  CHECK(std::abs(w2.exact(1e-6) - 1.0) < 1e-4);
}

TEST_CASE("weights agree with an independent quadrature") {
  for (auto kind : {WeightKind::W, WeightKind::W2}) {
    WeightEvaluator ev(kind, 12);
    const double T = kind == WeightKind::W ? 14.0 : 45.0;
    for (double x : {0.3, 1.0, 2.5, 10.0, 50.0}) {
      const double c = kind == WeightKind::W ? 2.0 : 0.5;
      CHECK(std::abs(ev.exact(x) - oracle_weight(kind, x, c, T, 1.0 / 200)) < 1e-11);
    }
  }
  WeightEvaluator w(WeightKind::W, 12);
  CHECK(w.exact(50.0) == doctest::Approx(2.99840665887689e-3).epsilon(1e-10));
  CHECK(w.exact(1.0) == doctest::Approx(0.4651078950507).epsilon(1e-10));
}

TEST_CASE("quadrature refinement stability and realness") {
  for (auto kind : {WeightKind::W, WeightKind::W2}) {
    WeightEvaluator ev(kind, 12);
    auto p = ev.params();
    p.h /= 2;
    p.T *= 2;
    WeightEvaluator fine(kind, 12, p);
    for (double x : {0.1, 1.0, 10.0}) {
      CHECK(std::abs(ev.exact(x) - fine.exact(x)) <= 1e-8 * std::abs(fine.exact(x)));
    }
    for (int i = 0; i <= 200; ++i) {
      const double x = std::pow(10.0, -8.0 + 14.0 * i / 200.0);
      CHECK(std::abs(ev.sample(x).imag) < 1e-9);
    }
  }
}

TEST_CASE("decay shape") {
  WeightEvaluator w(WeightKind::W, 12);
  WeightEvaluator w2(WeightKind::W2, 12);
  const double c1 = decay_audit(w, 1.0);
  const double c2 = decay_audit(w2, 2.0);
  CHECK(std::isfinite(c1));
  CHECK(std::isfinite(c2));
  CHECK_THROWS(decay_audit(w, 6.0));
  for (int i = 0; i <= 100; ++i) {
    const double x = std::pow(10.0, -8.0 + 12.0 * i / 100.0);
    CHECK(std::abs(w.exact(x)) <= 1.01);
    CHECK(std::abs(w2.exact(x)) <= 1.01);
  }
  for (double x = 10.0; x < 1e5; x *= 1.3) {
    CHECK(std::abs(w.exact(2 * x)) <= std::abs(w.exact(x)) + 1e-10);
    CHECK(std::abs(w2.exact(2 * x)) <= std::abs(w2.exact(x)) + 1e-10);
  }
}

TEST_CASE("grid interpolation matches direct quadrature") {
  for (auto kind : {WeightKind::W, WeightKind::W2}) {
    WeightEvaluator ev(kind, 12);
    ev.attach_grid();
    CHECK(ev.has_grid());
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(std::log(1e-8), std::log(1e6));
    int checked = 0;
    while (checked < 100) {
      const double x = std::exp(u(rng));
      const double direct = ev.exact(x);
      if (std::abs(direct) < 1e-10) continue;  // below any usable truncation level
      ++checked;
      CHECK(std::abs(ev(x) - direct) <= 1e-7 * std::abs(direct));
    }
    CHECK(ev(1e7) == ev.exact(1e7));
  }
}

TEST_CASE("tail start") {
  WeightEvaluator w(WeightKind::W, 12);
  const double x8 = w.tail_start(1e-8);
  CHECK(x8 > 1000.0);
  CHECK(x8 < 10000.0);
  for (double x = x8; x < 1e6; x *= 1.1) CHECK(std::abs(w.exact(x)) < 1e-8);
  CHECK(w.tail_start(1e-6) < x8);
}

TEST_CASE("weight argument validation") {
  WeightEvaluator w(WeightKind::W, 12);
  CHECK_THROWS_AS(w.exact(0.0), std::invalid_argument);
  CHECK_THROWS_AS(w.exact(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(WeightEvaluator(WeightKind::W, 12, {1.0, 12.0, 0.35}), std::invalid_argument);
  CHECK_THROWS_AS(WeightEvaluator(WeightKind::W, 11), std::invalid_argument);
  WeightEvaluator short_contour(WeightKind::W2, 12, {1.0, 4.0, 1.0 / 64});
  CHECK_THROWS_AS(short_contour.exact(1.0), std::runtime_error);
}

#include "twistmom/mollifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "twistmom/summation.hpp"

namespace twistmom {

namespace {

unsigned ceil_tolerant(double x) { return static_cast<unsigned>(std::ceil(x - 1e-12)); }

// Largest b >= 1 with b^e <= q.
u64 integer_root_floor(u64 q, u64 e) {
  auto fits = [&](u64 b) {
    u64 acc = 1;
    for (u64 i = 0; i < e; ++i) {
      if (acc > q / b) return false;
      acc *= b;
    }
    return acc <= q;
  };
  u64 b = static_cast<u64>(std::floor(std::pow(static_cast<double>(q), 1.0 / static_cast<double>(e))));
  b = std::max<u64>(b, 1);
  while (b > 1 && !fits(b)) --b;
  while (fits(b + 1)) ++b;
  return b;
}

void check_override(const std::vector<u64>& ell) {
  if (ell.empty()) throw std::invalid_argument("ladder override must be non-empty");
  for (std::size_t j = 0; j < ell.size(); ++j) {
    if (ell[j] == 0 || ell[j] % 2 != 0) throw std::invalid_argument("ladder entries must be positive even integers");
    if (j > 0 && ell[j] >= ell[j - 1]) throw std::invalid_argument("ladder must be strictly decreasing");
  }
}

bool sum_condition(const std::vector<u64>& ell) {
  if (ell.empty()) return true;
  double s = 0.0;
  for (u64 l : ell) s += 1.0 / static_cast<double>(l);
  return s <= 2.0 / static_cast<double>(ell.back()) + 1e-15;
}

}  // namespace

double ladder_c_k(double k) { return 64.0 * std::max(1.0, k); }

unsigned ladder_r_k(double k) {
  if (!(k > 0.0)) throw std::invalid_argument("r_k needs k > 0");
  if (k > 0.5 && k < 1.0) return ceil_tolerant(k / (2.0 * k - 1.0)) + 1;
  return ceil_tolerant(1.0 + 1.0 / k) + 1;
}

LadderParams build_ladder(u64 q, unsigned N, unsigned M, double k, const std::optional<std::vector<u64>>& override_ell) {
  if (q < 3) throw std::invalid_argument("ladder needs q >= 3");
  LadderParams out;
  out.q = q;
  out.N = N;
  out.M = M;
  out.k = k;
  out.c_k = ladder_c_k(k);
  out.r_k = ladder_r_k(k);
  if (override_ell) {
    check_override(*override_ell);
    if (!sum_condition(*override_ell)) throw std::invalid_argument("ladder violates sum 1/l_j <= 2/l_R");
    out.ell = *override_ell;
    out.overridden = true;
  } else {
    if (N == 0 || M == 0) throw std::invalid_argument("ladder generation needs N, M >= 1");
    const double floor_value = std::pow(10.0, static_cast<double>(M));
    const double loglogq = std::log(std::log(static_cast<double>(q)));
    double next = 2.0 * std::ceil(static_cast<double>(N) * loglogq);
    while (next > floor_value && (out.ell.empty() || next < static_cast<double>(out.ell.back()))) {
      out.ell.push_back(static_cast<u64>(next));
      next = 2.0 * std::ceil(static_cast<double>(N) * std::log(next));
    }
    out.sum_condition_holds = sum_condition(out.ell);
  }
  for (std::size_t j = 0; j + 1 < out.ell.size(); ++j) {
    const double nxt = static_cast<double>(out.ell[j + 1]);
    if (!(static_cast<double>(out.ell[j]) > nxt * nxt)) out.square_gap_holds = false;
  }
  return out;
}

bool PrimeSegments::all_empty() const {
  return std::all_of(segments.begin(), segments.end(), [](const auto& s) { return s.empty(); });
}

PrimeSegments build_segments(u64 q, const std::vector<u64>& ell) {
  PrimeSegments out;
  u64 lower = 1;
  for (std::size_t j = 0; j < ell.size(); ++j) {
    const u64 e = ell[j] * ell[j];
    const u64 upper = integer_root_floor(q, e);
    out.boundaries.push_back(std::pow(static_cast<double>(q), 1.0 / static_cast<double>(e)));
    out.integer_bounds.push_back(upper);
    std::vector<u64> seg;
    for (u64 p : sieve_primes(upper)) {
      if (p <= lower) continue;
      if (j == 0 && p == 2) continue;
      seg.push_back(p);
    }
    out.segments.push_back(std::move(seg));
    lower = std::max(lower, upper);
  }
  return out;
}

cdouble trunc_exp(u64 ell, cdouble z) {
  cdouble acc = 1.0;
  for (u64 j = ell; j >= 1; --j) acc = 1.0 + acc * z / static_cast<double>(j);
  return acc;
}

EboundCheck ebound_check(u64 K, cdouble z, double a) {
  if (K == 0 || !(a > 0.0) || a > 2.0) throw std::invalid_argument("Ebound needs K >= 1 and 0 < a <= 2");
  if (std::abs(z) > a * static_cast<double>(K) / 20.0 * (1.0 + 1e-12)) {
    throw std::invalid_argument("Ebound needs |z| <= a K / 20");
  }
  EboundCheck c;
  c.error = std::abs(trunc_exp(K, z) - std::exp(z));
  c.bound = std::pow(a * std::exp(1.0) / 20.0, static_cast<double>(K)) + 1e-15 +
            4.0 * std::numeric_limits<double>::epsilon() * std::exp(std::abs(z));
  c.pass = c.error <= c.bound;
  return c;
}

cdouble q_from_p(cdouble p, u64 ell, double c_k, unsigned r_k) {
  cdouble base = c_k * p / static_cast<double>(ell);
  u64 e = ell * r_k;
  cdouble result = 1.0;
  while (e > 0) {
    if (e & 1) result *= base;
    base *= base;
    e >>= 1;
  }
  return result;
}

double log_abs_q_from_p(cdouble p, u64 ell, double c_k, unsigned r_k) {
  const double a = std::abs(p);
  if (a == 0.0) return -std::numeric_limits<double>::infinity();
  return static_cast<double>(ell * r_k) * std::log(c_k * a / static_cast<double>(ell));
}

Mollifier::Mollifier(std::shared_ptr<const EigenformTable> table, LadderParams ladder, PrimePolyMode mode)
    : table_(std::move(table)), ladder_(std::move(ladder)), segments_(build_segments(ladder_.q, ladder_.ell)),
      mode_(mode) {
  validate_segments();
}

Mollifier::Mollifier(std::shared_ptr<const EigenformTable> table, LadderParams ladder, PrimeSegments segments,
                     PrimePolyMode mode)
    : table_(std::move(table)), ladder_(std::move(ladder)), segments_(std::move(segments)), mode_(mode) {
  if (segments_.segments.size() != ladder_.R()) throw std::invalid_argument("one segment per ladder entry expected");
  std::vector<u64> all;
  for (auto& seg : segments_.segments) {
    std::sort(seg.begin(), seg.end());
    for (u64 p : seg) {
      if (!PrimeTable::instance().is_prime(p)) throw std::invalid_argument(std::to_string(p) + " is not prime");
      all.push_back(p);
    }
  }
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end()) throw std::invalid_argument("segments overlap");
  validate_segments();
}

void Mollifier::validate_segments() const {
  for (const auto& seg : segments_.segments) {
    for (u64 p : seg) {
      if (p > table_->n_max()) throw std::out_of_range("segment prime " + std::to_string(p) + " beyond eigenform table");
    }
  }
}

std::vector<Mollifier::SegmentSumCheck> Mollifier::segment_sum_checks() const {
  std::vector<SegmentSumCheck> out;
  for (std::size_t j = 0; j < ladder_.R(); ++j) {
    SegmentSumCheck c{};
    for (u64 p : segments_.segments[j]) c.sum += table_->lambda(p) * table_->lambda(p) / static_cast<double>(p);
    const double ell = static_cast<double>(ladder_.ell[j]);
    c.skipped = segments_.segments[j].empty() || ladder_.N == 0;
    if (!c.skipped) {
      c.lower = ell / (4.0 * ladder_.N);
      c.upper = 2.0 * ell / ladder_.N;
      c.pass = c.lower <= c.sum && c.sum <= c.upper;
    }
    out.push_back(c);
  }
  return out;
}

double Mollifier::prime_coefficient(u64 p) const { return mode_ == PrimePolyMode::weighted ? table_->lambda(p) : 1.0; }

cdouble Mollifier::prime_poly(const Character& chi, std::size_t j) const {
  CompensatedComplexSum sum;
  for (u64 p : segments_.segments.at(j)) sum += prime_coefficient(p) / std::sqrt(static_cast<double>(p)) * chi(p);
  return sum.value();
}

cdouble Mollifier::n_poly(const Character& chi, std::size_t j, double alpha, NPolyMode how) const {
  if (how == NPolyMode::exp) return trunc_exp(ladder_.ell.at(j), alpha * prime_poly(chi, j));
  CompensatedComplexSum sum;
  for (const auto& m : segment_monomials(j, alpha)) {
    sum += m.coeff / std::sqrt(static_cast<double>(m.n)) * chi(m.n);
  }
  return sum.value();
}

cdouble Mollifier::q_poly(const Character& chi, std::size_t j) const {
  return q_from_p(prime_poly(chi, j), ladder_.ell.at(j), ladder_.c_k, ladder_.r_k);
}

std::vector<Monomial> Mollifier::segment_monomials(std::size_t j, double alpha) const {
  const auto& primes = segments_.segments.at(j);
  const unsigned ell = static_cast<unsigned>(ladder_.ell.at(j));
  std::vector<Monomial> out;
  auto dfs = [&](auto&& self, std::size_t start, u64 n, unsigned omega, double coeff) -> void {
    if (out.size() >= kMonomialCap) throw std::length_error("monomial cap exceeded in segment " + std::to_string(j + 1));
    out.push_back({n, omega, coeff});
    for (std::size_t t = start; t < primes.size(); ++t) {
      const u64 p = primes[t];
      const double x = alpha * prime_coefficient(p);
      u64 m = n;
      double c = coeff;
      for (unsigned a = 1; omega + a <= ell; ++a) {
        m = checked_mul(m, p);
        c *= x / static_cast<double>(a);
        self(self, t + 1, m, omega + a, c);
      }
    }
  };
  dfs(dfs, 0, 1, 0, 1.0);
  std::sort(out.begin(), out.end(), [](const Monomial& a, const Monomial& b) { return a.n < b.n; });
  return out;
}

CoefficientMap multiply_maps(const CoefficientMap& a, const CoefficientMap& b, std::size_t cap) {
  if (a.size() * b.size() > cap) throw std::length_error("coefficient map exceeds the monomial cap");
  CoefficientMap out;
  out.reserve(a.size() * b.size());
  for (const auto& [na, xa] : a)
    for (const auto& [nb, xb] : b) out.emplace_back(checked_mul(na, nb), xa * xb);
  std::sort(out.begin(), out.end());
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].first == out[i - 1].first) throw std::logic_error("coefficient maps have overlapping prime support");
  }
  return out;
}

CoefficientMap Mollifier::coefficients(double alpha) const {
  CoefficientMap acc{{1, 1.0}};
  for (std::size_t j = 0; j < ladder_.R(); ++j) {
    CoefficientMap seg;
    for (const auto& m : segment_monomials(j, alpha)) seg.emplace_back(m.n, m.coeff);
    acc = multiply_maps(acc, seg);
  }
  return acc;
}

MollifierValue Mollifier::evaluate(const Character& chi) const {
  MollifierValue v;
  v.chi_index = chi.index();
  v.N_total_k = 1.0;
  v.N_total_km1 = 1.0;
  const double k = ladder_.k;
  for (std::size_t j = 0; j < ladder_.R(); ++j) {
    const cdouble p = prime_poly(chi, j);
    const u64 ell = ladder_.ell[j];
    v.P.push_back(p);
    v.N_k.push_back(trunc_exp(ell, k * p));
    v.N_km1.push_back(trunc_exp(ell, (k - 1.0) * p));
    v.Q.push_back(q_from_p(p, ell, ladder_.c_k, ladder_.r_k));
    v.log_abs_Q.push_back(log_abs_q_from_p(p, ell, ladder_.c_k, ladder_.r_k));
    v.N_total_k *= v.N_k.back();
    v.N_total_km1 *= v.N_km1.back();
  }
  return v;
}

}  // namespace twistmom

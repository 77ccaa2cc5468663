#pragma once

// The ladder l_1 > ... > l_R, prime segments P_j, and the polynomials P_j(chi),
// E_l, N_j(chi, alpha), Q_j(chi, k) in exponential and Dirichlet-polynomial form.

#include <memory>
#include <optional>
#include <vector>

#include "twistmom/characters.hpp"
#include "twistmom/hecke.hpp"

namespace twistmom {

/// 64 max(1, k).
double ladder_c_k(double k);
/// ceil(1 + 1/k) + 1 for k >= 1 and for 0 < k <= 1/2; ceil(k/(2k-1)) + 1 for 1/2 < k < 1.
unsigned ladder_r_k(double k);

struct LadderParams {
  u64 q = 0;
  unsigned N = 0;
  unsigned M = 0;
  double k = 1.0;
  std::vector<u64> ell;
  bool overridden = false;
  double c_k = 64.0;
  unsigned r_k = 3;
  bool square_gap_holds = true;     ///< l_j > l_{j+1}^2 for all j
  bool sum_condition_holds = true;  ///< sum 1/l_j <= 2/l_R

  std::size_t R() const { return ell.size(); }
};

/// Generated schedule l_1 = 2 ceil(N log log q), l_{j+1} = 2 ceil(N log l_j), kept while l_j > 10^M,
/// or an explicit override, which must be even, strictly decreasing and satisfy the sum condition.
LadderParams build_ladder(u64 q, unsigned N, unsigned M, double k,
                          const std::optional<std::vector<u64>>& override_ell = std::nullopt);

struct PrimeSegments {
  std::vector<std::vector<u64>> segments;
  std::vector<double> boundaries;  ///< q^{1/l_j^2}
  std::vector<u64> integer_bounds;  ///< largest integer b with b^{l_j^2} <= q

  bool empty(std::size_t j) const { return segments[j].empty(); }
  bool all_empty() const;
};

/// P_1 = odd primes p <= q^{1/l_1^2}; P_j = primes in (q^{1/l_{j-1}^2}, q^{1/l_j^2}].
PrimeSegments build_segments(u64 q, const std::vector<u64>& ell);

/// E_l(z) = sum_{j <= l} z^j / j!, by Horner.
cdouble trunc_exp(u64 ell, cdouble z);

struct EboundCheck {
  double error;  ///< |E_K(z) - e^z|
  double bound;  ///< (a e / 20)^K plus a rounding allowance 1e-15 + 4 eps e^{|z|}
  bool pass;
};
/// Truncation bound for E_K at |z| <= a K / 20 with 0 < a <= 2.
EboundCheck ebound_check(u64 K, cdouble z, double a);

/// (c_k P / l)^{r_k l} by repeated squaring.
cdouble q_from_p(cdouble p, u64 ell, double c_k, unsigned r_k);
/// log |(c_k P / l)^{r_k l}|; -inf when P = 0.
double log_abs_q_from_p(cdouble p, u64 ell, double c_k, unsigned r_k);

enum class PrimePolyMode {
  weighted,    ///< sum lambda(p) chi(p) / sqrt(p)
  unweighted,  ///< sum chi(p) / sqrt(p)
};

enum class NPolyMode { exp, dirichlet };

/// n = prod p^{a_p} over one segment with Omega(n) <= l; coeff = prod (alpha x_p)^{a_p} / a_p!.
struct Monomial {
  u64 n;
  unsigned omega;
  double coeff;
};

using CoefficientMap = std::vector<std::pair<u64, double>>;  // ascending n

inline constexpr std::size_t kMonomialCap = 1'000'000;

struct MollifierValue {
  u64 chi_index;
  std::vector<cdouble> P;
  std::vector<cdouble> N_k;    ///< N_j(chi, k)
  std::vector<cdouble> N_km1;  ///< N_j(chi, k-1)
  std::vector<cdouble> Q;
  std::vector<double> log_abs_Q;
  cdouble N_total_k;    ///< prod_j N_j(chi, k)
  cdouble N_total_km1;  ///< prod_j N_j(chi, k-1)
};

class Mollifier {
public:
  Mollifier(std::shared_ptr<const EigenformTable> table, LadderParams ladder,
            PrimePolyMode mode = PrimePolyMode::weighted);
  /// Explicit segments (one per ladder entry, pairwise disjoint); used for hand-built examples.
  Mollifier(std::shared_ptr<const EigenformTable> table, LadderParams ladder, PrimeSegments segments,
            PrimePolyMode mode = PrimePolyMode::weighted);

  const LadderParams& ladder() const { return ladder_; }
  const EigenformTable& table() const { return *table_; }
  const PrimeSegments& segments() const { return segments_; }
  PrimePolyMode mode() const { return mode_; }

  /// lambda(p) in weighted mode, 1 otherwise.
  double prime_coefficient(u64 p) const;

  cdouble prime_poly(const Character& chi, std::size_t j) const;
  cdouble n_poly(const Character& chi, std::size_t j, double alpha, NPolyMode how) const;
  cdouble q_poly(const Character& chi, std::size_t j) const;

  /// Support of N_j(., alpha) as a Dirichlet polynomial in chi(n)/sqrt(n); throws std::length_error past the cap.
  std::vector<Monomial> segment_monomials(std::size_t j, double alpha) const;
  /// Coefficients x_n of prod_j N_j(chi, alpha) = sum_n x_n chi(n)/sqrt(n).
  CoefficientMap coefficients(double alpha) const;

  MollifierValue evaluate(const Character& chi) const;

  struct SegmentSumCheck {
    double sum;  ///< sum_{p in P_j} lambda(p)^2 / p
    double lower;  ///< l_j / (4N)
    double upper;  ///< 2 l_j / N
    bool skipped;  ///< empty segment or no N
    bool pass;
  };
  std::vector<SegmentSumCheck> segment_sum_checks() const;

private:
  void validate_segments() const;

  std::shared_ptr<const EigenformTable> table_;
  LadderParams ladder_;
  PrimeSegments segments_;
  PrimePolyMode mode_;
};

/// Convolution of coefficient maps over disjoint prime supports.
CoefficientMap multiply_maps(const CoefficientMap& a, const CoefficientMap& b, std::size_t cap = kMonomialCap);

}  // namespace twistmom

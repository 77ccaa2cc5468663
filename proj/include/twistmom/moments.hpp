#pragma once

// Family moments of L(1/2, f x chi) over primitive chi mod q, the mollified first
// moment, and numerical audits of the pointwise and Hölder inequalities that
// drive the lower and upper bounds.

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "twistmom/lvalues.hpp"
#include "twistmom/mollifier.hpp"

namespace twistmom {

inline constexpr double kAuditSlack = 1e-9;     ///< relative slack on every asserted inequality
inline constexpr double kSqTolerance = 1e-3;    ///< |L|^2 cross-check tolerance on the audit subsample
inline constexpr double kImagTolerance = 1e-6;  ///< |Im sum L| / sum |L|

/// Central values of the primitive family mod q, computed once and shared by every k.
class Family {
public:
  Family(std::shared_ptr<const EigenformTable> table, WeightPair weights, u64 q, AfeConfig cfg);
  Family(std::shared_ptr<const EigenformTable> table, WeightPair weights, GroupPtr group, AfeConfig cfg);

  u64 q() const { return group_->q(); }
  u64 phi_star() const { return phi_star_; }
  double log_q() const;
  const AfeEngine& engine() const { return engine_; }
  const GroupPtr& group() const { return group_; }
  const std::shared_ptr<const EigenformTable>& table() const { return table_; }
  /// Primitive characters, aligned with values().
  const std::vector<Character>& characters() const { return chars_; }
  const std::vector<CentralValue>& values() const { return values_; }

  std::vector<MollifierValue> mollifier_values(const Mollifier& mollifier) const;

private:
  std::shared_ptr<const EigenformTable> table_;
  GroupPtr group_;
  AfeEngine engine_;
  std::vector<Character> chars_;
  std::vector<CentralValue> values_;
  u64 phi_star_;
};

struct MomentReport {
  u64 q = 0;
  double k = 0.0;
  u64 phi_star = 0;
  double raw_moment = 0.0;  ///< sum* |L|^{2k}
  double normalized = 0.0;  ///< raw / phi*(q)
  double log_q = 0.0;
  double ratio_to_logq_pow_k2 = 0.0;  ///< normalized / (log q)^{k^2}
  std::vector<double> contributions;  ///< |L|^{2k} per character, when requested

  struct Audit {
    std::size_t sq_checked = 0;
    std::size_t sq_passed = 0;
    double max_sq_residual = 0.0;
    double imag_ratio = 0.0;  ///< |Im sum* L| / sum* |L|
    bool imag_pass = true;
  } audit;
};

/// sum* |L|^{2k}; k = 0 gives phi*(q) exactly.
MomentReport family_moment(const Family& family, double k, bool keep_contributions = false);

/// normalized(k)^{1/k} nondecreasing in k (reports with k > 0, any order).
bool power_mean_monotone(std::vector<MomentReport> reports, double slack = 1e-12);

struct TwistedMoment {
  cdouble value;  ///< sum* L(1/2, f x chi) N(chi-bar, k) N(chi, k-1)
  double abs_imag = 0.0;
  std::optional<cdouble> brute;  ///< term-by-term L and coefficient-map N
  std::optional<double> rel_diff;
};

TwistedMoment twisted_first_moment(const Family& family, const Mollifier& mollifier, bool brute_force = false);

struct LocalFactorCheck {
  u64 p;
  double lambda_p;
  double exact;         ///< full local sum at p
  double approx;        ///< 1 + k^2 lambda(p)^2 / p
  double scaled_residual;  ///< |exact - approx| p^2
  bool pass;               ///< scaled_residual < 10
};

/// sum_i (lambda(p) k / p)^i / i! sum_{l <= i} ((k-1) lambda(p))^l / l! lambda(p^{i-l}).
LocalFactorCheck local_factor_check(u64 p, double lambda_p, double k);

struct DiagonalCheck {
  double lhs;  ///< sum_b y_b/b sum_{am=b} lambda(m) x_a by convolution of the coefficient maps
  double rhs;  ///< product of per-segment local sums
  double residual;
  bool pass;  ///< residual < 1e-9
  std::vector<LocalFactorCheck> local;
};

DiagonalCheck diagonal_factorization_check(const Mollifier& mollifier);

enum class Regime { small, large };

/// One inequality instance, compared in log space: asserted ones must satisfy lhs <= rhs + slack.
struct SegmentCheck {
  std::string name;
  std::size_t j;
  Regime regime;
  double lhs_log;
  double rhs_log;
  bool asserted;
  bool pass;
};

/// Pointwise bounds for one segment given P_j, N_j(k), N_j(k-1), log|Q_j|.
/// k < 1: small |P| <= l/60 (upper bound with constant (1+e^-l)^{2/k}, the (1-e^-l) form as info,
/// lower bound (1-e^-l)^2); large: power bound and |Q|^2. k >= 1: the l/(40k) regimes.
/// Both cases also check the guard form max(F, 1)(|N|^2 + |Q|^2).
std::vector<SegmentCheck> audit_segment(std::size_t j, cdouble P, cdouble N_k, cdouble N_km1, double log_abs_Q,
                                        u64 ell, double k);
/// Same, with N and Q computed from P.
std::vector<SegmentCheck> audit_segment(std::size_t j, cdouble P, u64 ell, double k);

struct CheckTally {
  std::string name;
  bool asserted = true;
  std::size_t checked = 0;
  std::size_t passed = 0;
  double min_log_margin = std::numeric_limits<double>::infinity();  ///< min of rhs_log - lhs_log
};

/// A family-level inequality in log space.
struct ChainCheck {
  std::string name;
  double lhs_log;
  double rhs_log;
  bool asserted;
  bool pass;
  double ratio() const;  ///< rhs / lhs
};

struct InequalityAudit {
  u64 q = 0;
  double k = 0.0;
  std::size_t characters = 0;
  std::vector<CheckTally> pointwise;
  std::vector<ChainCheck> chains;
  std::optional<double> upper_principle_min;  ///< min over the family of A^k B^{1-k}

  void add(const SegmentCheck& c);
  void add(const InequalityAudit& other);
  /// Every asserted check passed.
  bool all_pass() const;
};

InequalityAudit pointwise_inequality_audit(const Mollifier& mollifier, const Character& chi);

/// Pointwise audit over the family plus the Hölder steps: three-factor split and guard chain for k < 1,
/// the 1/(2k), (2k-1)/(2k) split and guard chain for k > 1, and the A/B split for k < 1.
InequalityAudit holder_chain_audit(const Family& family, const Mollifier& mollifier);

/// Family sums divided by scale.
struct Prop56Quantities {
  u64 q = 0;
  double k = 0.0;
  double scale = 0.0;  ///< phi*(q) (log q)^{k^2}
  double mollified_sq = 0.0;  ///< sum* |L N(k-1)|^2
  double guarded_sq = 0.0;    ///< sum* |L|^2 sum_v prod_{j<=v} |N_j(k-1)|^2 |Q_{v+1}|^2
  double guard_product = 0.0;  ///< sum* prod_j (|N_j(k)|^2 + |Q_j|^2)
  double guard_ladder = 0.0;   ///< sum* sum_v prod_{j<=v} |N_j(k)|^2 |Q_{v+1}|^2
};

Prop56Quantities prop56_quantities(const Family& family, const Mollifier& mollifier);

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Least squares of log(normalized) on log log q; at least 4 reports, one k, increasing q.
ExponentFit exponent_fit(const std::vector<MomentReport>& reports);

struct StirlingAudit {
  unsigned n_max;
  unsigned lower_passed;            ///< (n/e)^n <= n!, n = 1..n_max
  std::vector<unsigned> upper_failures;  ///< n with n! > n (n/e)^n
};

StirlingAudit stirling_audit(unsigned n_max = 170);

}  // namespace twistmom

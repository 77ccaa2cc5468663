#pragma once

// Central values L(1/2, f x chi) from the approximate functional equation, and
// |L|^2 from the independent W2-weighted divisor-sum formula.

#include <memory>
#include <optional>
#include <vector>

#include "twistmom/characters.hpp"
#include "twistmom/hecke.hpp"
#include "twistmom/weights.hpp"

namespace twistmom {

struct AfeConfig {
  double X = 1.0;
  double tail_eps = 1e-8;
  unsigned workers = 1;
  std::size_t audit_count = 8;  ///< characters per modulus that also get the |L|^2 cross-check
  u64 seed = 0;
  double cap_scale = 1.0;  ///< multiplies the truncation points (tail honesty checks use 2)
};

struct CentralValue {
  u64 chi_index;
  u64 conjugate_index;
  u64 conductor;
  cdouble value;
  std::optional<double> sq_direct;
  std::optional<double> residual;  ///< | |value|^2 - sq_direct | / max(|value|^2, 1e-6)
};

/// Shared gridded evaluators for one weight kappa.
struct WeightPair {
  std::shared_ptr<const WeightEvaluator> w;
  std::shared_ptr<const WeightEvaluator> w2;
};
WeightPair make_weight_pair(unsigned kappa, bool with_grid = true);

/// Truncation points: direct sum n <= n_direct, dual sum n <= n_dual, and the W2 sum m <= m_sq.
struct AfeCaps {
  double x_eps;
  double y_eps;
  u64 n_direct;
  u64 n_dual;
  u64 m_sq;
};
AfeCaps afe_caps(const WeightPair& weights, u64 q, double X, double tail_eps, double cap_scale = 1.0);

class AfeEngine {
public:
  AfeEngine(std::shared_ptr<const EigenformTable> table, GroupPtr group, WeightPair weights, AfeConfig cfg);

  const AfeCaps& caps() const { return caps_; }
  const AfeConfig& config() const { return cfg_; }
  const CharacterGroup& group() const { return *group_; }
  const GroupPtr& group_ptr() const { return group_; }
  const EigenformTable& table() const { return *table_; }

  /// Term-by-term evaluation for one primitive character.
  cdouble central_value(const Character& chi) const;
  /// 2 sum_m W2(m/q^2)/sqrt(m) sum_{ab=m} lambda(a) lambda(b) chi(a) conj chi(b); needs m_sq <= n_max.
  double central_value_sq(const Character& chi) const;

  /// All primitive characters, ordered by index, via residue-class bucketing; the
  /// first audit_count characters of a seeded shuffle also get central_value_sq.
  std::vector<CentralValue> family_values() const;
  /// Indices that family_values() audits.
  std::vector<u64> audit_indices() const;

private:
  std::shared_ptr<const EigenformTable> table_;
  GroupPtr group_;
  WeightPair weights_;
  AfeConfig cfg_;
  AfeCaps caps_;
  std::vector<double> direct_coeff_;  // lambda(n)/sqrt(n) W(nX/q)
  std::vector<double> dual_coeff_;    // lambda(n)/sqrt(n) W(n/(qX))
};

/// Relative residual used by the cross-check, with an absolute floor for vanishing values.
double sq_residual(cdouble value, double sq);

}  // namespace twistmom

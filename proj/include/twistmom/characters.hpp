#pragma once

// Dirichlet characters mod q: group structure, conductors, Gauss and Kloosterman sums.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "twistmom/arith.hpp"

namespace twistmom {

using cdouble = std::complex<double>;

/// e(x) = exp(2 pi i x).
cdouble unit_root(double x);

enum class ModulusPolicy {
  odd_prime_power,  ///< q = q0^nu with q0 an odd prime (the family studied here)
  any_admissible,   ///< any q != 2 (mod 4), built by CRT over prime-power components
};

/// One cyclic factor of (Z/qZ)^*: generator lifted to a unit mod q.
struct CyclicFactor {
  u64 component_modulus;  ///< the prime power p^a this factor lives in
  u64 order;
  u64 generator;  ///< unit mod q, a generator of this factor and 1 in all other components
};

class Character;

using GroupPtr = std::shared_ptr<const class CharacterGroup>;

class CharacterGroup : public std::enable_shared_from_this<CharacterGroup> {
public:
  static GroupPtr build(u64 q, ModulusPolicy policy = ModulusPolicy::odd_prime_power);
  /// Rebuilds a cyclic group from a stored "unit<TAB>exponent" table, verifying it.
  static GroupPtr from_dlog_table(u64 q, const std::vector<std::pair<u64, u64>>& table);

  u64 q() const { return q_; }
  u64 phi() const { return phi_; }
  /// lcm of the cyclic orders; character values are powers of e(1/exponent).
  u64 exponent() const { return exponent_; }
  bool is_cyclic() const { return factors_.size() <= 1; }
  /// Least primitive root (cyclic groups only; 1 for the trivial group).
  u64 generator() const;
  const std::vector<CyclicFactor>& factors() const { return factors_; }

  bool is_unit(u64 n) const { return slot_[n % q_] >= 0; }
  /// Discrete log with respect to generator(); nullopt for non-units. Cyclic groups only.
  std::optional<u64> dlog(u64 n) const;
  /// Exponent vector of a unit (one entry per cyclic factor).
  std::vector<u64> exponents(u64 n) const;
  /// Units mod q in increasing order.
  const std::vector<u64>& units() const { return units_; }

  /// Character with mixed-radix index (cyclic: chi_e(g^t) = e(e t / phi)).
  Character character(u64 index) const;
  std::vector<Character> all_characters() const;
  std::vector<Character> primitive_characters() const;

  /// Precomputed e(k / exponent()).
  cdouble root(u64 k) const { return roots_[k % exponent_]; }

  /// Phase of chi(n) in units of 1/exponent(), or nullopt when (n, q) > 1.
  std::optional<u64> phase(const std::vector<u64>& weights, u64 n) const;

  /// Subgroup {u : u = 1 mod f} for a divisor f of q, as unit residues.
  const std::vector<u64>& kernel_of_reduction(u64 f) const;

private:
  CharacterGroup() = default;
  void finish();

  u64 q_ = 1;
  u64 phi_ = 1;
  u64 exponent_ = 1;
  std::vector<CyclicFactor> factors_;
  std::vector<std::int64_t> slot_;       // residue -> unit slot, -1 for non-units
  std::vector<std::uint32_t> exps_;      // slot * factors + i
  std::vector<u64> slot_residue_;        // slot -> residue
  std::vector<u64> units_;
  std::vector<cdouble> roots_;
  std::vector<u64> divisors_;
  std::vector<std::vector<u64>> kernels_;  // aligned with divisors_
  friend class Character;
};

/// A Dirichlet character; a lightweight handle sharing ownership of its group.
class Character {
public:
  const CharacterGroup& group() const { return *group_; }
  const GroupPtr& group_ptr() const { return group_; }
  u64 index() const { return index_; }
  u64 conductor() const { return conductor_; }
  bool is_primitive() const { return conductor_ == group_->q(); }
  bool is_principal() const { return index_ == 0; }
  /// Index of the complex-conjugate character.
  u64 conjugate_index() const;
  Character conjugate() const { return group_->character(conjugate_index()); }
  /// chi(-1) as +1 or -1.
  int parity() const;
  /// Multiplicative order of chi.
  u64 order() const;

  cdouble operator()(u64 n) const;
  std::optional<u64> phase(u64 n) const { return group_->phase(weights_, n); }
  /// Phase weight per cyclic factor: chi = e(sum_i weight_i t_i / exponent).
  const std::vector<u64>& weights() const { return weights_; }

private:
  Character(GroupPtr group, u64 index);
  u64 compute_conductor() const;

  GroupPtr group_;
  u64 index_;
  std::vector<u64> weights_;
  u64 conductor_ = 1;
  friend class CharacterGroup;
};

/// Conductor of chi (smallest f | q from which chi is induced).
inline u64 conductor(const Character& chi) { return chi.conductor(); }

/// sum_{a mod q} chi(a) e(a/q).
cdouble gauss_sum(const Character& chi);

/// Root number factor i^kappa tau(chi)^2 / q; chi must be primitive.
cdouble iota(const Character& chi, unsigned kappa);

/// Kloosterman sum S(u, v; q) = sum*_{h mod q} e((u h + v hbar)/q); throws if not real to 1e-9.
double kloosterman(i64 u, i64 v, u64 q);

/// Right side of sum*_{chi mod q} chi(a) = sum_{c | (q, a-1)} mu(q/c) phi(c); requires (a, q) = 1.
i64 primitive_sum_identity(i64 a, u64 q);

struct PrimitiveSumAudit {
  i64 rhs;
  cdouble lhs;
  double residual;
  bool pass;
};
/// Evaluates both sides of the primitive-character sum identity (tolerance 1e-6 absolute).
PrimitiveSumAudit primitive_sum_audit(i64 a, const GroupPtr& group);

/// "unit<TAB>exponent" lines for a cyclic group.
void write_dlog_table(const CharacterGroup& group, const std::filesystem::path& path);
std::vector<std::pair<u64, u64>> read_dlog_table(const std::filesystem::path& path);

}  // namespace twistmom

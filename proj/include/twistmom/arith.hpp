#pragma once

// Integer and multiplicative-function substrate.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace twistmom {

using u64 = std::uint64_t;
using i64 = std::int64_t;

class Factorization;

/// Ascending primes p <= limit (empty for limit < 2).
std::vector<u64> sieve_primes(u64 limit);

/// Shared read-only sieve used by factorize(); built once on first use.
class PrimeTable {
public:
  static const PrimeTable& instance();

  u64 limit() const { return limit_; }
  std::span<const u64> primes() const { return primes_; }
  bool is_prime(u64 n) const;

private:
  explicit PrimeTable(u64 limit);
  u64 limit_;
  std::vector<u64> primes_;
  std::vector<std::uint32_t> smallest_factor_;
  friend Factorization factorize(u64 n);
};

struct PrimePower {
  u64 prime;
  unsigned exponent;
  bool operator==(const PrimePower&) const = default;
};

class Factorization {
public:
  Factorization() = default;

  u64 n() const { return n_; }
  const std::vector<PrimePower>& factors() const& { return factors_; }
  std::vector<PrimePower> factors() && { return std::move(factors_); }
  bool is_one() const { return factors_.empty(); }

private:
  u64 n_ = 1;
  std::vector<PrimePower> factors_;
  friend Factorization factorize(u64 n);
};

Factorization factorize(u64 n);

unsigned big_omega(u64 n);
u64 divisor_count(u64 n);
int mobius(u64 n);
u64 euler_phi(u64 n);
/// Product of a_i! over n = prod p_i^{a_i}.
u64 w_of(u64 n);

/// Number of primitive characters mod q, via sum_{c | q} mu(q/c) phi(c).
u64 phi_star(u64 q);

/// All positive divisors of n, ascending.
std::vector<u64> divisors(u64 n);

u64 mulmod(u64 a, u64 b, u64 m);
u64 powmod(u64 base, u64 exp, u64 m);
/// Inverse of a mod m; throws if gcd(a, m) != 1.
u64 invmod(u64 a, u64 m);

/// (p, e) when n = p^e with e >= 1, otherwise {0, 0}.
PrimePower as_prime_power(u64 n);

/// Multiplication that throws std::overflow_error instead of wrapping.
u64 checked_mul(u64 a, u64 b);

}  // namespace twistmom

#include "doctest.h"

#include <random>
#include <numeric>

#include "twistmom/arith.hpp"

using namespace twistmom;

namespace {

bool is_prime_trial(u64 n) {
  if (n < 2) return false;
  for (u64 d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

std::vector<PrimePower> trial_factor(u64 n) {
  std::vector<PrimePower> out;
  for (u64 d = 2; d * d <= n; ++d) {
    unsigned e = 0;
    while (n % d == 0) {
      n /= d;
      ++e;
    }
    if (e) out.push_back({d, e});
  }
  if (n > 1) out.push_back({n, 1});
  return out;
}

}  // namespace

TEST_CASE("sieve matches trial division") {
  CHECK(sieve_primes(1).empty());
  CHECK(sieve_primes(10) == std::vector<u64>{2, 3, 5, 7});
  CHECK(sieve_primes(100).size() == 25);
  std::vector<u64> oracle;
  for (u64 n = 0; n <= 5000; ++n)
    if (is_prime_trial(n)) oracle.push_back(n);
  CHECK(sieve_primes(5000) == oracle);
}

TEST_CASE("factorize") {
  CHECK(factorize(1).is_one());
  CHECK(factorize(12).factors() == std::vector<PrimePower>{{2, 2}, {3, 1}});
  CHECK(factorize(9801).factors() == std::vector<PrimePower>{{3, 4}, {11, 2}});
  CHECK_THROWS(factorize(0));
  for (u64 n = 2; n < 3000; ++n) CHECK(factorize(n).factors() == trial_factor(n));
  // beyond the sieve: product of two primes above 10^6
  const u64 big = 1000003ULL * 1000033ULL;
  CHECK(factorize(big).factors() == std::vector<PrimePower>{{1000003, 1}, {1000033, 1}});
}

TEST_CASE("multiplicative functions") {
  CHECK(w_of(8) == 6);
  CHECK(big_omega(12) == 3);
  CHECK(divisor_count(2) == 2);
  CHECK_THROWS(mobius(0));
  for (u64 n = 1; n <= 10000; ++n) {
    int s = 0;
    for (u64 d : divisors(n)) s += mobius(d);
    CHECK(s == (n == 1 ? 1 : 0));
  }
  std::mt19937_64 rng(7);
  int pairs = 0;
  while (pairs < 200) {
    const u64 a = rng() % 5000 + 1;
    const u64 b = rng() % 5000 + 1;
    if (std::gcd(a, b) != 1) continue;
    ++pairs;
    CHECK(w_of(a * b) == w_of(a) * w_of(b));
    CHECK(divisor_count(a * b) == divisor_count(a) * divisor_count(b));
    CHECK(big_omega(a * b) == big_omega(a) + big_omega(b));
    CHECK(euler_phi(a * b) == euler_phi(a) * euler_phi(b));
    CHECK(mobius(a * b) == mobius(a) * mobius(b));
  }
}

TEST_CASE("phi_star small values") {
  CHECK(phi_star(1) == 1);
  CHECK(phi_star(7) == 5);
  CHECK(phi_star(9) == 4);
}

TEST_CASE("modular helpers") {
  CHECK(powmod(3, 6, 7) == 1);
  CHECK(invmod(3, 7) == 5);
  CHECK_THROWS(invmod(3, 9));
  CHECK(as_prime_power(27) == PrimePower{3, 3});
  CHECK(as_prime_power(12) == PrimePower{0, 0});
  CHECK_THROWS_AS(checked_mul(1ULL << 40, 1ULL << 40), std::overflow_error);
}

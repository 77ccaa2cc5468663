#include "twistmom/arith.hpp"

#include <algorithm>
#include <numeric>

namespace twistmom {

namespace {

constexpr u64 kSieveLimit = 1'000'000;

bool miller_rabin(u64 n) {
  if (n < 2) return false;
  for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  u64 d = n - 1;
  unsigned s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // Deterministic witness set for 64-bit inputs.
  for (u64 a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    u64 x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (unsigned r = 1; r < s; ++r) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

u64 pollard_brent(u64 n) {
  if (n % 2 == 0) return 2;
  for (u64 c = 1;; ++c) {
    auto f = [&](u64 x) { return (mulmod(x, x, n) + c) % n; };
    u64 y = 2, x = 2, d = 1, ys = 2, prod = 1;
    u64 r = 1;
    constexpr u64 kBatch = 128;
    do {
      x = y;
      for (u64 i = 0; i < r; ++i) y = f(y);
      u64 k = 0;
      do {
        ys = y;
        for (u64 i = 0; i < std::min(kBatch, r - k); ++i) {
          y = f(y);
          prod = mulmod(prod, x > y ? x - y : y - x, n);
        }
        d = std::gcd(prod, n);
        k += kBatch;
      } while (k < r && d == 1);
      r *= 2;
    } while (d == 1);
    if (d == n) {
      do {
        ys = f(ys);
        d = std::gcd(x > ys ? x - ys : ys - x, n);
      } while (d == 1);
    }
    if (d != n) return d;
  }
}

// Prime factors (with repetition) of n > 1 whose prime factors all exceed the sieve.
void split_large(u64 n, std::vector<u64>& out) {
  if (n == 1) return;
  if (miller_rabin(n)) {
    out.push_back(n);
    return;
  }
  const u64 d = pollard_brent(n);
  split_large(d, out);
  split_large(n / d, out);
}

void require_positive(u64 n) {
  if (n == 0) throw std::invalid_argument("argument must be a positive integer");
}

}  // namespace

std::vector<u64> sieve_primes(u64 limit) {
  std::vector<u64> out;
  if (limit < 2) return out;
  std::vector<bool> composite(limit + 1, false);
  for (u64 i = 2; i <= limit; ++i) {
    if (composite[i]) continue;
    out.push_back(i);
    if (i <= limit / i) {
      for (u64 j = i * i; j <= limit; j += i) composite[j] = true;
    }
  }
  return out;
}

PrimeTable::PrimeTable(u64 limit) : limit_(limit), smallest_factor_(limit + 1, 0) {
  for (u64 i = 2; i <= limit; ++i) {
    if (smallest_factor_[i] != 0) continue;
    primes_.push_back(i);
    for (u64 j = i; j <= limit; j += i) {
      if (smallest_factor_[j] == 0) smallest_factor_[j] = static_cast<std::uint32_t>(i);
    }
  }
}

const PrimeTable& PrimeTable::instance() {
  static const PrimeTable table(kSieveLimit);
  return table;
}

bool PrimeTable::is_prime(u64 n) const {
  if (n <= limit_) return n >= 2 && smallest_factor_[n] == n;
  return miller_rabin(n);
}

Factorization factorize(u64 n) {
  require_positive(n);
  const auto& table = PrimeTable::instance();
  Factorization f;
  f.n_ = n;
  u64 m = n;
  auto push = [&](u64 p) {
    unsigned e = 0;
    while (m % p == 0) {
      m /= p;
      ++e;
    }
    f.factors_.push_back({p, e});
  };
  if (m > table.limit_) {
    for (u64 p : table.primes_) {
      if (p > m / p) break;
      if (m % p == 0) push(p);
      if (m <= table.limit_) break;
    }
  }
  while (m > 1 && m <= table.limit_) push(table.smallest_factor_[m]);
  if (m > 1) {
    std::vector<u64> large;
    split_large(m, large);
    std::sort(large.begin(), large.end());
    for (u64 p : large) {
      if (!f.factors_.empty() && f.factors_.back().prime == p) {
        ++f.factors_.back().exponent;
      } else {
        f.factors_.push_back({p, 1});
      }
    }
  }
  return f;
}

unsigned big_omega(u64 n) {
  unsigned total = 0;
  for (const auto& pp : factorize(n).factors()) total += pp.exponent;
  return total;
}

u64 divisor_count(u64 n) {
  u64 d = 1;
  for (const auto& pp : factorize(n).factors()) d *= pp.exponent + 1;
  return d;
}

int mobius(u64 n) {
  const auto f = factorize(n);
  for (const auto& pp : f.factors()) {
    if (pp.exponent > 1) return 0;
  }
  return (f.factors().size() % 2 == 0) ? 1 : -1;
}

u64 euler_phi(u64 n) {
  u64 phi = n;
  for (const auto& pp : factorize(n).factors()) phi = phi / pp.prime * (pp.prime - 1);
  return phi;
}

u64 w_of(u64 n) {
  u64 w = 1;
  for (const auto& pp : factorize(n).factors()) {
    for (unsigned i = 2; i <= pp.exponent; ++i) w = checked_mul(w, i);
  }
  return w;
}

std::vector<u64> divisors(u64 n) {
  std::vector<u64> out{1};
  for (const auto& pp : factorize(n).factors()) {
    const std::size_t base = out.size();
    u64 pk = 1;
    for (unsigned e = 1; e <= pp.exponent; ++e) {
      pk *= pp.prime;
      for (std::size_t i = 0; i < base; ++i) out.push_back(out[i] * pk);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

u64 phi_star(u64 q) {
  require_positive(q);
  i64 total = 0;
  for (u64 c : divisors(q)) total += mobius(q / c) * static_cast<i64>(euler_phi(c));
  return static_cast<u64>(total);
}

u64 mulmod(u64 a, u64 b, u64 m) {
  return static_cast<u64>(static_cast<unsigned __int128>(a) * b % m);
}

u64 powmod(u64 base, u64 exp, u64 m) {
  if (m == 1) return 0;
  u64 result = 1;
  base %= m;
  while (exp > 0) {
    if (exp & 1) result = mulmod(result, base, m);
    base = mulmod(base, base, m);
    exp >>= 1;
  }
  return result;
}

u64 invmod(u64 a, u64 m) {
  i64 old_r = static_cast<i64>(a % m), r = static_cast<i64>(m);
  i64 old_s = 1, s = 0;
  while (r != 0) {
    const i64 quot = old_r / r;
    old_r -= quot * r;
    std::swap(old_r, r);
    old_s -= quot * s;
    std::swap(old_s, s);
  }
  if (old_r != 1) throw std::invalid_argument("invmod: argument is not a unit");
  i64 inv = old_s % static_cast<i64>(m);
  if (inv < 0) inv += static_cast<i64>(m);
  return static_cast<u64>(inv);
}

PrimePower as_prime_power(u64 n) {
  if (n < 2) return {0, 0};
  const auto f = factorize(n);
  if (f.factors().size() != 1) return {0, 0};
  return f.factors().front();
}

u64 checked_mul(u64 a, u64 b) {
  u64 out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("64-bit overflow");
  return out;
}

}  // namespace twistmom

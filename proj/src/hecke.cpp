#include "twistmom/hecke.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "twistmom/summation.hpp"

namespace twistmom {

namespace {

constexpr std::size_t kCrtPrimeCount = 4;

std::array<u64, kCrtPrimeCount> crt_primes() {
  std::array<u64, kCrtPrimeCount> out{};
  u64 candidate = (u64{1} << 31) - 1;
  std::size_t found = 0;
  const auto& table = PrimeTable::instance();
  while (found < kCrtPrimeCount) {
    if (table.is_prime(candidate)) out[found++] = candidate;
    candidate -= 2;
  }
  return out;
}

// Coefficients of (eta^3 / x^{1/8})^8 modulo each CRT prime, using Jacobi's sparse
// series for eta^3. Residues for all primes are interleaved so that each lookup of
// B_{k-j} touches one cache line.
std::vector<std::array<std::uint32_t, kCrtPrimeCount>> eta24_mod(
    u64 len, const std::array<u64, kCrtPrimeCount>& primes, const std::vector<std::pair<u64, i64>>& sparse) {
  using Row = std::array<std::uint32_t, kCrtPrimeCount>;
  std::vector<Row> inv(len + 1);
  for (std::size_t i = 0; i < kCrtPrimeCount; ++i) {
    const u64 p = primes[i];
    inv[1][i] = 1;
    for (u64 m = 2; m <= len; ++m) inv[m][i] = static_cast<std::uint32_t>((p - (p / m) * inv[p % m][i] % p) % p);
  }

  std::vector<u64> offsets;
  std::vector<std::array<u64, kCrtPrimeCount>> a_mod;
  std::vector<std::array<u64, kCrtPrimeCount>> ja_mod;
  for (const auto& [j, coeff] : sparse) {
    offsets.push_back(j);
    std::array<u64, kCrtPrimeCount> a{};
    std::array<u64, kCrtPrimeCount> ja{};
    for (std::size_t i = 0; i < kCrtPrimeCount; ++i) {
      const i64 p = static_cast<i64>(primes[i]);
      a[i] = static_cast<u64>((coeff % p + p) % p);
      ja[i] = 9 * j % primes[i] * a[i] % primes[i];
    }
    a_mod.push_back(a);
    ja_mod.push_back(ja);
  }

  std::vector<Row> b(len);
  b[0].fill(1);
  std::size_t active = 0;
  for (u64 k = 1; k < len; ++k) {
    while (active < offsets.size() && offsets[active] <= k) ++active;
    std::array<unsigned __int128, kCrtPrimeCount> s1{};
    std::array<unsigned __int128, kCrtPrimeCount> s2{};
    for (std::size_t t = 0; t < active; ++t) {
      const Row& prev = b[k - offsets[t]];
      for (std::size_t i = 0; i < kCrtPrimeCount; ++i) {
        s1[i] += ja_mod[t][i] * prev[i];
        s2[i] += a_mod[t][i] * prev[i];
      }
    }
    // k B_k = sum (9j - k) A_j B_{k-j}  =>  B_k = S1 / k - S2.
    for (std::size_t i = 0; i < kCrtPrimeCount; ++i) {
      const u64 p = primes[i];
      const u64 r1 = static_cast<u64>(s1[i] % p);
      const u64 r2 = static_cast<u64>(s2[i] % p);
      b[k][i] = static_cast<std::uint32_t>((r1 * inv[k][i] % p + p - r2) % p);
    }
  }
  return b;
}

}  // namespace

std::vector<i128> ramanujan_tau_table(u64 n_max) {
  if (n_max == 0) throw std::invalid_argument("ramanujan_tau_table: n_max must be >= 1");
  if (n_max > kMaxTauIndex) {
    throw std::invalid_argument("ramanujan_tau_table: n_max exceeds the overflow-safe bound " +
                                std::to_string(kMaxTauIndex));
  }
  // Jacobi: prod (1 - x^n)^3 = sum_k (-1)^k (2k+1) x^{k(k+1)/2}.
  std::vector<std::pair<u64, i64>> sparse;
  for (u64 k = 1;; ++k) {
    const u64 j = k * (k + 1) / 2;
    if (j >= n_max) break;
    sparse.emplace_back(j, (k % 2 == 0 ? 1 : -1) * static_cast<i64>(2 * k + 1));
  }

  const auto primes = crt_primes();
  const auto residues = eta24_mod(n_max, primes, sparse);

  // Garner reconstruction into [0, M), then shift to the symmetric range.
  unsigned __int128 modulus = 1;
  for (u64 p : primes) modulus *= p;
  std::array<std::array<u64, kCrtPrimeCount>, kCrtPrimeCount> inv{};
  for (std::size_t i = 0; i < kCrtPrimeCount; ++i) {
    for (std::size_t j = 0; j < i; ++j) inv[j][i] = invmod(primes[j] % primes[i], primes[i]);
  }

  std::vector<i128> tau(n_max + 1, 0);
  for (u64 n = 1; n <= n_max; ++n) {
    std::array<u64, kCrtPrimeCount> v{};
    for (std::size_t i = 0; i < kCrtPrimeCount; ++i) {
      u64 x = residues[n - 1][i];
      for (std::size_t j = 0; j < i; ++j) {
        x = (x + primes[i] - v[j] % primes[i]) % primes[i];
        x = x * inv[j][i] % primes[i];
      }
      v[i] = x;
    }
    unsigned __int128 value = 0;
    for (std::size_t i = kCrtPrimeCount; i-- > 0;) value = value * primes[i] + v[i];
    tau[n] = value > modulus / 2 ? -static_cast<i128>(modulus - value) : static_cast<i128>(value);
  }
  return tau;
}

std::string to_string(i128 v) {
  if (v == 0) return "0";
  const bool negative = v < 0;
  unsigned __int128 u = negative ? static_cast<unsigned __int128>(-(v + 1)) + 1 : static_cast<unsigned __int128>(v);
  std::string digits;
  while (u > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  if (negative) digits.push_back('-');
  std::reverse(digits.begin(), digits.end());
  return digits;
}

i128 parse_i128(const std::string& text) {
  std::size_t pos = 0;
  bool negative = false;
  if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) negative = text[pos++] == '-';
  if (pos == text.size()) throw std::invalid_argument("parse_i128: empty integer '" + text + "'");
  i128 value = 0;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (c < '0' || c > '9') throw std::invalid_argument("parse_i128: not an integer '" + text + "'");
    if (__builtin_mul_overflow(value, 10, &value) || __builtin_add_overflow(value, c - '0', &value)) {
      throw std::invalid_argument("parse_i128: integer out of range '" + text + "'");
    }
  }
  return negative ? -value : value;
}

EigenformTable EigenformTable::builtin_delta(u64 n_max) { return from_tau(ramanujan_tau_table(n_max)); }

EigenformTable EigenformTable::from_tau(std::vector<i128> tau) {
  if (tau.size() < 2) throw std::invalid_argument("tau table needs at least tau(1)");
  const u64 n_max = tau.size() - 1;
  EigenformTable table;
  table.weight_ = 12;
  table.source_ = EigenformSource::builtin_delta;
  table.lambda_.assign(n_max + 1, 0.0);
  for (u64 n = 1; n <= n_max; ++n) {
    table.lambda_[n] = static_cast<double>(static_cast<long double>(tau[n]) /
                                           std::pow(static_cast<long double>(n), 5.5L));
  }
  table.exact_ = std::move(tau);
  table.validate();
  return table;
}

EigenformTable EigenformTable::from_coefficients(unsigned weight, const std::vector<long double>& coeffs,
                                                 EigenformSource source) {
  if (weight == 0 || weight % 2 != 0) throw std::invalid_argument("eigenform weight must be even and positive");
  if (coeffs.size() < 2) throw std::invalid_argument("eigenform needs at least the coefficient a(1)");
  EigenformTable table;
  table.weight_ = weight;
  table.source_ = source;
  const long double half = (static_cast<long double>(weight) - 1.0L) / 2.0L;
  table.lambda_.assign(coeffs.size(), 0.0);
  for (std::size_t n = 1; n < coeffs.size(); ++n) {
    table.lambda_[n] = static_cast<double>(coeffs[n] / std::pow(static_cast<long double>(n), half));
  }
  table.validate();
  return table;
}

EigenformTable EigenformTable::from_file(const std::filesystem::path& path, unsigned weight) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open coefficient file " + path.string());
  std::vector<long double> coeffs{0.0L};
  std::vector<i128> exact{0};
  bool all_integer = true;
  std::string line;
  u64 expected = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw std::invalid_argument("coefficient line without TAB: '" + line + "'");
    const u64 n = std::stoull(line.substr(0, tab));
    if (n != expected) throw std::invalid_argument("coefficient file must list n = 1, 2, ... in order");
    const std::string value = line.substr(tab + 1);
    if (value.find_first_of(".eE") == std::string::npos) {
      const i128 v = parse_i128(value);
      exact.push_back(v);
      coeffs.push_back(static_cast<long double>(v));
    } else {
      all_integer = false;
      coeffs.push_back(std::stold(value));
    }
    ++expected;
  }
  auto table = from_coefficients(weight, coeffs, EigenformSource::file);
  if (all_integer) table.exact_ = std::move(exact);
  return table;
}

void EigenformTable::validate() const {
  const u64 n_max = lambda_.size() - 1;
  if (std::abs(lambda_[1] - 1.0) > 1e-12) throw std::invalid_argument("eigenform invariant violated: lambda(1) != 1");

  // Smallest-prime-factor and divisor-count sieves over the table range.
  std::vector<std::uint32_t> spf(n_max + 1, 0);
  for (u64 i = 2; i <= n_max; ++i) {
    if (spf[i] != 0) continue;
    for (u64 j = i; j <= n_max; j += i) {
      if (spf[j] == 0) spf[j] = static_cast<std::uint32_t>(i);
    }
  }
  std::vector<std::uint32_t> dcount(n_max + 1, 0);
  for (u64 d = 1; d <= n_max; ++d) {
    for (u64 m = d; m <= n_max; m += d) ++dcount[m];
  }

  auto close = [](double a, double b, double scale) { return std::abs(a - b) <= 1e-9 * std::max(1.0, scale); };

  for (u64 n = 1; n <= n_max; ++n) {
    if (std::abs(lambda_[n]) > dcount[n] * (1.0 + 1e-12)) {
      throw std::invalid_argument("eigenform invariant violated: |lambda(n)| > d(n) at n = " + std::to_string(n));
    }
    if (n == 1) continue;
    const u64 p = spf[n];
    u64 pa = 1;
    unsigned a = 0;
    u64 m = n;
    while (m % p == 0) {
      m /= p;
      pa *= p;
      ++a;
    }
    if (m > 1) {
      // Multiplicativity across the coprime split n = p^a * m.
      const double prod = lambda_[pa] * lambda_[m];
      if (!close(lambda_[n], prod, std::abs(lambda_[pa]) * std::abs(lambda_[m]))) {
        throw std::invalid_argument("eigenform invariant violated: multiplicativity at n = " + std::to_string(n));
      }
    } else if (a >= 2) {
      // Hecke recursion lambda(p^a) = lambda(p) lambda(p^{a-1}) - lambda(p^{a-2}).
      const double expect = lambda_[p] * lambda_[pa / p] - lambda_[pa / p / p];
      const double scale = std::abs(lambda_[p] * lambda_[pa / p]) + std::abs(lambda_[pa / p / p]);
      if (!close(lambda_[n], expect, scale)) {
        throw std::invalid_argument("eigenform invariant violated: Hecke recursion at n = " + std::to_string(n));
      }
    }
  }
}

void write_coefficient_file(const std::filesystem::path& path, const std::vector<i128>& coeffs) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    for (std::size_t n = 1; n < coeffs.size(); ++n) out << n << '\t' << to_string(coeffs[n]) << '\n';
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<i128> read_integer_coefficient_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open coefficient file " + path.string());
  std::vector<i128> out{0};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw std::invalid_argument("coefficient line without TAB: '" + line + "'");
    if (std::stoull(line.substr(0, tab)) != out.size()) {
      throw std::invalid_argument("coefficient file must list n = 1, 2, ... in order");
    }
    out.push_back(parse_i128(line.substr(tab + 1)));
  }
  return out;
}

double lambda_tilde(const EigenformTable& table, u64 n) {
  double value = 1.0;
  for (const auto& pp : factorize(n).factors()) {
    if (pp.prime > table.n_max()) {
      throw std::out_of_range("lambda_tilde: prime factor " + std::to_string(pp.prime) + " beyond table range");
    }
    value *= std::pow(table.lambda(pp.prime), static_cast<int>(pp.exponent));
  }
  return value;
}

double rankin_prime_sum(const EigenformTable& table, double x) {
  if (x < 2.0) throw std::invalid_argument("rankin_prime_sum: x must be >= 2");
  const u64 limit = static_cast<u64>(std::floor(x));
  if (limit > table.n_max()) throw std::out_of_range("rankin_prime_sum: x beyond eigenform table range");
  CompensatedSum sum;
  for (u64 p : sieve_primes(limit)) {
    const double l = table.lambda(p);
    sum += l * l / static_cast<double>(p);
  }
  return sum.value();
}

double mertens_log_sum(double x) {
  if (x < 2.0) throw std::invalid_argument("mertens_log_sum: x must be >= 2");
  CompensatedSum sum;
  for (u64 p : sieve_primes(static_cast<u64>(std::floor(x)))) {
    sum += std::log(static_cast<double>(p)) / static_cast<double>(p);
  }
  return sum.value();
}

}  // namespace twistmom

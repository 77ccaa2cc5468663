#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "twistmom/hecke.hpp"

using namespace twistmom;

namespace {

// Coefficients of x * prod_{n<=deg} (1 - x^n)^24 up to x^deg, by repeated multiplication.
std::vector<long long> delta_product(int deg) {
  std::vector<long long> poly(deg + 1, 0);
  poly[0] = 1;
  for (int n = 1; n <= deg; ++n)
    for (int rep = 0; rep < 24; ++rep)
      for (int i = deg; i >= n; --i) poly[i] -= poly[i - n];
  std::vector<long long> tau(deg + 1, 0);
  for (int i = 1; i <= deg; ++i) tau[i] = poly[i - 1];
  return tau;
}

}  // namespace

TEST_CASE("tau against truncated product") {
  const auto oracle = delta_product(40);
  const auto tau = ramanujan_tau_table(40);
  CHECK(tau[1] == 1);
  CHECK(tau[2] == -24);
  CHECK(tau[4] == -1472);
  CHECK(tau[6] == tau[2] * tau[3]);
  for (int n = 1; n <= 40; ++n) CHECK(static_cast<long long>(tau[n]) == oracle[n]);
  CHECK(to_string(ramanujan_tau_table(100)[100]) == "37534859200");
  CHECK(parse_i128("-1472") == -1472);
}

TEST_CASE("eigenform table invariants") {
  const auto table = EigenformTable::builtin_delta(10000);
  CHECK(table.lambda(1) == 1.0);
  CHECK(std::abs(table.lambda(4) - (table.lambda(2) * table.lambda(2) - 1.0)) < 1e-12);
  std::mt19937_64 rng(11);
  int pairs = 0;
  while (pairs < 500) {
    const u64 m = rng() % 100 + 1;
    const u64 n = rng() % 100 + 1;
    ++pairs;
    double rhs = 0.0;
    for (u64 d = 1; d <= std::gcd(m, n); ++d)
      if (m % d == 0 && n % d == 0) rhs += table.lambda(m * n / (d * d));
    CHECK(std::abs(table.lambda(m) * table.lambda(n) - rhs) < 1e-10);
  }
  for (u64 n = 1; n <= 10000; ++n) {
    bool squarefree = true;
    for (u64 p = 2; p * p <= n; ++p)
      if (n % (p * p) == 0) squarefree = false;
    if (squarefree) CHECK(lambda_tilde(table, n) == doctest::Approx(table.lambda(n)).epsilon(1e-12));
  }
  CHECK(lambda_tilde(table, 1) == 1.0);
  CHECK(lambda_tilde(table, 12) == doctest::Approx(table.lambda(2) * table.lambda(2) * table.lambda(3)));
  CHECK_THROWS(lambda_tilde(table, 2 * 10007));
}

TEST_CASE("coefficient file validation") {
  const auto dir = std::filesystem::temp_directory_path() / "twistmom_hecke_test";
  std::filesystem::create_directories(dir);
  const auto good = dir / "tau.txt";
  write_coefficient_file(good, ramanujan_tau_table(200));
  const auto from_file = EigenformTable::from_file(good, 12);
  CHECK(from_file.n_max() == 200);
  CHECK(from_file.exact().has_value());
  CHECK(from_file.lambda(37) == EigenformTable::builtin_delta(200).lambda(37));

  std::vector<long double> bad(10, 0.0L);
  bad[0] = 0.9L;
  CHECK_THROWS_AS(EigenformTable::from_coefficients(12, bad), std::invalid_argument);
  auto coeffs = ramanujan_tau_table(50);
  std::vector<long double> broken(coeffs.begin() + 1, coeffs.end());
  broken[3] += 1.0L;  // tau(4) off by one breaks the Hecke recursion
  CHECK_THROWS_AS(EigenformTable::from_coefficients(12, broken), std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST_CASE("prime sums") {
  const auto table = EigenformTable::builtin_delta(100000);
  CHECK(rankin_prime_sum(table, 2) == doctest::Approx(table.lambda(2) * table.lambda(2) / 2));
  double oracle = 0.0;
  for (u64 p : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97})
    oracle += table.lambda(p) * table.lambda(p) / static_cast<double>(p);
  CHECK(rankin_prime_sum(table, 100) == doctest::Approx(oracle).epsilon(1e-12));
  std::vector<double> r;
  for (double x : {1e3, 1e4, 1e5}) r.push_back(rankin_prime_sum(table, x) - std::log(std::log(x)));
  CHECK(*std::max_element(r.begin(), r.end()) - *std::min_element(r.begin(), r.end()) < 0.2);
  double prev = 0.0;
  for (double x = 2; x <= 2000; x += 7) {
    const double v = rankin_prime_sum(table, x);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(mertens_log_sum(2) == doctest::Approx(std::log(2.0) / 2));
  CHECK(mertens_log_sum(10) ==
        doctest::Approx(std::log(2.0) / 2 + std::log(3.0) / 3 + std::log(5.0) / 5 + std::log(7.0) / 7));
  const double m = mertens_log_sum(1e5) - std::log(1e5);
  CHECK(m >= -2.0);
  CHECK(m <= 0.0);
}

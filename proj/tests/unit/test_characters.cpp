#include "doctest.h"

#include <cmath>
#include <numbers>
#include <numeric>

#include "twistmom/characters.hpp"

using namespace twistmom;

namespace {

// Smallest f | q such that chi(a) = chi(b) whenever a = b (mod f) and both are units.
u64 conductor_by_periodicity(const Character& chi) {
  const u64 q = chi.group().q();
  for (u64 f : divisors(q)) {
    bool periodic = true;
    for (u64 a = 1; a < q && periodic; ++a) {
      if (std::gcd(a, q) != 1) continue;
      for (u64 b = a % f; b < q; b += f) {
        if (b == 0 || std::gcd(b, q) != 1) continue;
        if (std::abs(chi(a) - chi(b)) > 1e-9) {
          periodic = false;
          break;
        }
      }
    }
    if (periodic) return f;
  }
  return q;
}

cdouble direct_exp(double angle_fraction) {
  return std::polar(1.0, 2.0 * std::numbers::pi * angle_fraction);
}

}  // namespace

TEST_CASE("group construction") {
  const auto g7 = CharacterGroup::build(7);
  CHECK(g7->phi() == 6);
  CHECK(g7->generator() == 3);
  const auto g9 = CharacterGroup::build(9);
  CHECK(g9->phi() == 6);
  CHECK(g9->generator() == 2);
  CHECK_THROWS_AS(CharacterGroup::build(10), std::invalid_argument);
  CHECK_THROWS_AS(CharacterGroup::build(1), std::invalid_argument);
  CHECK_THROWS_AS(CharacterGroup::build(2), std::invalid_argument);
  CHECK_THROWS_AS(CharacterGroup::build(15), std::invalid_argument);
  CHECK_NOTHROW(CharacterGroup::build(15, ModulusPolicy::any_admissible));
  for (u64 q : {3ULL, 25ULL, 27ULL, 121ULL, 343ULL}) {
    const auto g = CharacterGroup::build(q);
    u64 x = 1;
    for (u64 t = 0; t < g->phi(); ++t) {
      CHECK(*g->dlog(x) == t);
      x = x * g->generator() % q;
    }
    CHECK(g->units().size() == g->phi());
  }
}

TEST_CASE("conductors match periodicity and phi_star") {
  const auto g7 = CharacterGroup::build(7);
  CHECK(g7->character(0).conductor() == 1);
  const auto g9 = CharacterGroup::build(9);
  CHECK(g9->character(3).order() == 2);
  CHECK(g9->character(3).conductor() == 3);
  CHECK(g9->primitive_characters().size() == 4);
  for (u64 q = 1; q <= 200; ++q) {
    if (q % 4 == 2) continue;
    const auto g = CharacterGroup::build(q, ModulusPolicy::any_admissible);
    u64 count = 0;
    for (const auto& chi : g->all_characters()) {
      if (q <= 60) CHECK(chi.conductor() == conductor_by_periodicity(chi));
      if (chi.conductor() == q) ++count;
    }
    CHECK(count == phi_star(q));
  }
}

TEST_CASE("orthogonality") {
  for (u64 q : {7ULL, 9ULL, 25ULL, 45ULL, 101ULL}) {
    const auto g = CharacterGroup::build(q, ModulusPolicy::any_admissible);
    const auto chars = g->all_characters();
    for (u64 a = 1; a <= q; a += 3) {
      for (u64 b = 1; b <= q; b += 5) {
        if (std::gcd(a, q) != 1 || std::gcd(b, q) != 1) continue;
        cdouble s = 0;
        for (const auto& chi : chars) s += chi(a) * std::conj(chi(b));
        const double expect = (a % q == b % q) ? static_cast<double>(g->phi()) : 0.0;
        CHECK(std::abs(s - expect) < 1e-7 * static_cast<double>(g->phi()));
      }
    }
  }
}

TEST_CASE("gauss sums and iota") {
  const auto g5 = CharacterGroup::build(5);
  const Character quad = g5->character(2);
  CHECK(quad.order() == 2);
  CHECK(std::abs(gauss_sum(quad) - cdouble(std::sqrt(5.0), 0)) < 1e-10);
  CHECK(std::abs(iota(quad, 12) - cdouble(1, 0)) < 1e-10);
  CHECK(std::abs(gauss_sum(g5->character(0)) - cdouble(-1, 0)) < 1e-12);
  CHECK_THROWS(iota(g5->character(0), 12));
  for (u64 q = 3; q <= 101; ++q) {
    if (q % 4 == 2) continue;
    const auto g = CharacterGroup::build(q, ModulusPolicy::any_admissible);
    for (const auto& chi : g->primitive_characters()) {
      const cdouble tau = gauss_sum(chi);
      CHECK(std::abs(std::norm(tau) - static_cast<double>(q)) < 1e-9 * static_cast<double>(q));
      const cdouble tau_bar = gauss_sum(chi.conjugate());
      CHECK(std::abs(tau_bar - static_cast<double>(chi.parity()) * std::conj(tau)) < 1e-9);
      CHECK(std::abs(std::abs(iota(chi, 12)) - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("kloosterman sums") {
  CHECK(std::abs(kloosterman(1, 1, 3) + 1.0) < 1e-12);
  for (u64 q : {3ULL, 9ULL, 25ULL, 27ULL, 49ULL, 30ULL}) {
    CHECK(std::abs(kloosterman(1, 0, q) - mobius(q)) < 1e-9);
    const double bound = static_cast<double>(divisor_count(q)) * std::sqrt(static_cast<double>(q));
    for (u64 v = 0; v < q; ++v) {
      const double s = kloosterman(1, static_cast<i64>(v), q);
      CHECK(std::abs(s) <= bound + 1e-9);
      cdouble oracle = 0;
      for (u64 h = 1; h < q; ++h) {
        if (std::gcd(h, q) != 1) continue;
        const u64 hbar = invmod(h, q);
        oracle += direct_exp(static_cast<double>((h + v * hbar) % q) / static_cast<double>(q));
      }
      CHECK(std::abs(s - oracle.real()) < 1e-9);
    }
  }
}

TEST_CASE("primitive character sum identity") {
  CHECK(primitive_sum_identity(1, 9) == static_cast<i64>(phi_star(9)));
  CHECK(primitive_sum_identity(2, 9) == 0);
  CHECK(primitive_sum_identity(4, 3) == 1);
  CHECK_THROWS(primitive_sum_identity(3, 9));
  for (u64 q : {9ULL, 27ULL, 49ULL, 121ULL}) {
    const auto g = CharacterGroup::build(q);
    for (u64 a = 1; a < q; ++a) {
      if (std::gcd(a, q) != 1) continue;
      const auto audit = primitive_sum_audit(static_cast<i64>(a), g);
      CHECK(audit.pass);
    }
  }
}

TEST_CASE("dlog table round trip") {
  const auto g = CharacterGroup::build(49);
  const auto path = std::filesystem::temp_directory_path() / "twistmom_dlog_49.txt";
  write_dlog_table(*g, path);
  const auto rebuilt = CharacterGroup::from_dlog_table(49, read_dlog_table(path));
  CHECK(rebuilt->generator() == g->generator());
  auto table = read_dlog_table(path);
  table[1].second += 1;
  CHECK_THROWS(CharacterGroup::from_dlog_table(49, table));
  std::filesystem::remove(path);
}

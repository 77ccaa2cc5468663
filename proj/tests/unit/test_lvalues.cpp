#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "twistmom/lvalues.hpp"

using namespace twistmom;

namespace {

struct Fixture {
  std::shared_ptr<const EigenformTable> table =
      std::make_shared<const EigenformTable>(EigenformTable::builtin_delta(60000));
  WeightPair weights = make_weight_pair(12);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

// Independent evaluation: exact quadrature for every W value, long double accumulation,
// the Gauss sum taken straight from its definition, and twice the truncation.
cdouble oracle_central_value(const Character& chi, double X) {
  const auto& f = fixture();
  const u64 q = chi.group().q();
  const WeightEvaluator w(WeightKind::W, 12);
  const u64 cap = 2 * static_cast<u64>(std::ceil(3300.0 * static_cast<double>(q) / std::min(X, 1.0 / X)));
  std::complex<long double> s1 = 0, s2 = 0, gauss = 0;
  for (u64 a = 1; a < q; ++a) {
    const long double ang = 2.0L * 3.14159265358979323846264338327950288L * a / q;
    gauss += std::complex<long double>(chi(a)) * std::complex<long double>(std::cos(ang), std::sin(ang));
  }
  for (u64 n = 1; n <= cap; ++n) {
    const long double base = f.table->lambda(n) / std::sqrt(static_cast<long double>(n));
    const auto c = std::complex<long double>(chi(n));
    s1 += base * static_cast<long double>(w.exact(n * X / q)) * c;
    s2 += base * static_cast<long double>(w.exact(n / (q * X))) * std::conj(c);
  }
  const auto root = gauss * gauss / static_cast<long double>(q);  // i^12 = 1
  const auto L = s1 + root * s2;
  return {static_cast<double>(L.real()), static_cast<double>(L.imag())};
}

}  // namespace

TEST_CASE("family sizes") {
  const auto& f = fixture();
  for (auto [q, expect] : {std::pair<u64, std::size_t>{7, 5}, {9, 4}}) {
    AfeEngine engine(f.table, CharacterGroup::build(q), f.weights, AfeConfig{});
    const auto values = engine.family_values();
    CHECK(values.size() == expect);
    CHECK(values.size() == phi_star(q));
    for (const auto& v : values)
      if (v.residual) CHECK(*v.residual < 1e-3);
  }
}

TEST_CASE("q = 5 quadratic character against the oracle") {
  const auto& f = fixture();
  const auto group = CharacterGroup::build(5);
  const Character chi = group->character(2);
  AfeEngine engine(f.table, group, f.weights, AfeConfig{});
  const cdouble L = engine.central_value(chi);
  const cdouble oracle = oracle_central_value(chi, 1.0);
  CHECK(std::abs(L - oracle) < 1e-9);
  CHECK(L.real() == doctest::Approx(1.6323752574117401).epsilon(1e-9));
  CHECK(std::abs(L.imag()) < 1e-12);
  const double sq = engine.central_value_sq(chi);
  CHECK(std::abs(sq - std::norm(L)) <= 1e-4 * std::norm(L));
  CHECK(sq >= -1e-6);
  CHECK_THROWS_AS(engine.central_value(group->character(0)), std::invalid_argument);
  CHECK_THROWS_AS(engine.central_value_sq(group->character(0)), std::invalid_argument);
}

TEST_CASE("X invariance, conjugation symmetry and tail honesty mod 7") {
  const auto& f = fixture();
  const auto group = CharacterGroup::build(7);
  AfeConfig half;
  half.X = 0.5;
  AfeConfig doubled;
  doubled.cap_scale = 2.0;
  const auto v1 = AfeEngine(f.table, group, f.weights, AfeConfig{}).family_values();
  const auto v2 = AfeEngine(f.table, group, f.weights, half).family_values();
  const auto v3 = AfeEngine(f.table, group, f.weights, doubled).family_values();
  REQUIRE(v1.size() == v2.size());
  std::vector<double> mods, conj_mods;
  for (std::size_t i = 0; i < v1.size(); ++i) {
    CHECK(std::abs(v1[i].value - v2[i].value) < 1e-5);
    CHECK(std::abs(v1[i].value - v3[i].value) < 10 * 1e-8);
    mods.push_back(std::abs(v1[i].value));
    const auto partner = std::find_if(v1.begin(), v1.end(), [&](const CentralValue& c) {
      return c.chi_index == v1[i].conjugate_index;
    });
    REQUIRE(partner != v1.end());
    conj_mods.push_back(std::abs(partner->value));
    CHECK(std::abs(std::abs(partner->value) - std::abs(v1[i].value)) < 1e-6);
  }
  std::sort(mods.begin(), mods.end());
  std::sort(conj_mods.begin(), conj_mods.end());
  for (std::size_t i = 0; i < mods.size(); ++i) CHECK(std::abs(mods[i] - conj_mods[i]) < 1e-8);
}

TEST_CASE("bulk evaluation matches the term-by-term path and is worker independent") {
  const auto& f = fixture();
  const auto group = CharacterGroup::build(13);
  AfeConfig one;
  AfeConfig four;
  four.workers = 4;
  AfeEngine e1(f.table, group, f.weights, one);
  const auto v1 = e1.family_values();
  const auto v4 = AfeEngine(f.table, group, f.weights, four).family_values();
  for (std::size_t i = 0; i < v1.size(); ++i) {
    CHECK(v1[i].value == v4[i].value);
    CHECK(std::abs(v1[i].value - e1.central_value(group->character(v1[i].chi_index))) < 1e-12);
  }
  std::size_t audited = 0;
  for (const auto& v : v1) audited += v.sq_direct.has_value();
  CHECK(audited == std::min<std::size_t>(8, v1.size()));
}

TEST_CASE("table range is enforced") {
  auto small = std::make_shared<const EigenformTable>(EigenformTable::builtin_delta(1000));
  CHECK_THROWS_AS(AfeEngine(small, CharacterGroup::build(7), fixture().weights, AfeConfig{}), std::out_of_range);
  AfeConfig bad;
  bad.X = -1.0;
  CHECK_THROWS_AS(AfeEngine(fixture().table, CharacterGroup::build(7), fixture().weights, bad), std::invalid_argument);
}

#include "twistmom/characters.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "twistmom/summation.hpp"

namespace twistmom {

namespace {

u64 crt_lift(u64 residue, u64 component, u64 q) {
  // x = residue mod component, x = 1 mod q/component.
  const u64 rest = q / component;
  if (rest == 1) return residue % q;
  const u64 inv = invmod(rest % component, component);
  // x = 1 + rest * ((residue - 1) * inv mod component)
  const u64 delta = mulmod((residue + component - 1 % component) % component, inv, component);
  return (1 + mulmod(rest, delta, q)) % q;
}

bool has_order(u64 g, u64 order, u64 modulus) {
  if (powmod(g, order, modulus) != 1) return false;
  for (const auto& pp : factorize(order).factors()) {
    if (powmod(g, order / pp.prime, modulus) == 1) return false;
  }
  return true;
}

u64 least_generator(u64 modulus, u64 order) {
  if (order == 1) return 1 % modulus == 0 ? 0 : 1;
  for (u64 g = 2; g < modulus; ++g) {
    if (std::gcd(g, modulus) == 1 && has_order(g, order, modulus)) return g;
  }
  throw std::logic_error("no generator found for a cyclic unit group");
}

}  // namespace

cdouble unit_root(double x) {
  const double angle = 2.0 * std::numbers::pi * (x - std::floor(x));
  return {std::cos(angle), std::sin(angle)};
}

GroupPtr CharacterGroup::build(u64 q, ModulusPolicy policy) {
  if (q % 4 == 2) throw std::invalid_argument("no primitive characters exist for q = 2 (mod 4)");
  if (policy == ModulusPolicy::odd_prime_power) {
    const auto pp = as_prime_power(q);
    if (q < 3 || pp.prime < 3) {
      throw std::invalid_argument("modulus " + std::to_string(q) + " is not an odd prime power");
    }
  } else if (q == 0) {
    throw std::invalid_argument("modulus must be positive");
  }

  auto group = std::shared_ptr<CharacterGroup>(new CharacterGroup());
  group->q_ = q;
  if (q > 1) {
    for (const auto& pp : factorize(q).factors()) {
      u64 component = 1;
      for (unsigned i = 0; i < pp.exponent; ++i) component *= pp.prime;
      if (pp.prime == 2) {
        if (pp.exponent >= 2) group->factors_.push_back({component, 2, crt_lift(component - 1, component, q)});
        if (pp.exponent >= 3) group->factors_.push_back({component, component / 4, crt_lift(5, component, q)});
      } else {
        const u64 order = component / pp.prime * (pp.prime - 1);
        const u64 g = q == component ? least_generator(q, order) : least_generator(component, order);
        group->factors_.push_back({component, order, crt_lift(g, component, q)});
      }
    }
  }
  group->finish();
  return group;
}

void CharacterGroup::finish() {
  phi_ = 1;
  exponent_ = 1;
  for (const auto& f : factors_) {
    phi_ *= f.order;
    exponent_ = std::lcm(exponent_, f.order);
  }
  const std::size_t nf = factors_.size();
  slot_.assign(q_, -1);
  exps_.assign(phi_ * nf, 0);
  slot_residue_.assign(phi_, 0);

  // Odometer over exponent tuples; residue = prod g_i^{t_i} mod q.
  std::vector<u64> t(nf, 0);
  u64 residue = 1 % q_;
  for (u64 s = 0; s < phi_; ++s) {
    if (slot_[residue] != -1) throw std::logic_error("cyclic factors do not generate the unit group");
    slot_[residue] = static_cast<std::int64_t>(s);
    slot_residue_[s] = residue;
    for (std::size_t i = 0; i < nf; ++i) exps_[s * nf + i] = static_cast<std::uint32_t>(t[i]);
    std::size_t i = 0;
    while (i < nf) {
      ++t[i];
      if (t[i] < factors_[i].order) break;
      t[i] = 0;
      ++i;
    }
    if (i == nf) break;
    residue = 1 % q_;
    for (std::size_t j = 0; j < nf; ++j) residue = mulmod(residue, powmod(factors_[j].generator, t[j], q_), q_);
  }

  units_ = slot_residue_;
  std::sort(units_.begin(), units_.end());

  roots_.resize(exponent_);
  for (u64 k = 0; k < exponent_; ++k) roots_[k] = unit_root(static_cast<double>(k) / static_cast<double>(exponent_));

  divisors_ = divisors(q_);
  kernels_.assign(divisors_.size(), {});
  for (std::size_t d = 0; d < divisors_.size(); ++d) {
    const u64 f = divisors_[d];
    for (u64 u : units_) {
      if (u % f == 1 % f) kernels_[d].push_back(u);
    }
  }
}

GroupPtr CharacterGroup::from_dlog_table(u64 q, const std::vector<std::pair<u64, u64>>& table) {
  auto group = build(q, ModulusPolicy::odd_prime_power);
  if (table.size() != group->phi()) throw std::invalid_argument("dlog table has the wrong number of units");
  for (const auto& [unit, exponent] : table) {
    const auto t = group->dlog(unit);
    if (!t || *t != exponent) throw std::invalid_argument("dlog table disagrees with the unit group");
  }
  return group;
}

u64 CharacterGroup::generator() const {
  if (!is_cyclic()) throw std::logic_error("unit group is not cyclic");
  return factors_.empty() ? 1 : factors_.front().generator;
}

std::optional<u64> CharacterGroup::dlog(u64 n) const {
  if (!is_cyclic()) throw std::logic_error("dlog: unit group is not cyclic");
  const auto s = slot_[n % q_];
  if (s < 0) return std::nullopt;
  return factors_.empty() ? 0 : exps_[static_cast<std::size_t>(s)];
}

std::vector<u64> CharacterGroup::exponents(u64 n) const {
  const auto s = slot_[n % q_];
  if (s < 0) throw std::invalid_argument("exponents: argument is not a unit");
  const std::size_t nf = factors_.size();
  std::vector<u64> out(nf);
  for (std::size_t i = 0; i < nf; ++i) out[i] = exps_[static_cast<std::size_t>(s) * nf + i];
  return out;
}

std::optional<u64> CharacterGroup::phase(const std::vector<u64>& weights, u64 n) const {
  const auto s = slot_[n % q_];
  if (s < 0) return std::nullopt;
  const std::size_t nf = factors_.size();
  u64 acc = 0;
  for (std::size_t i = 0; i < nf; ++i) acc += weights[i] * exps_[static_cast<std::size_t>(s) * nf + i];
  return acc % exponent_;
}

const std::vector<u64>& CharacterGroup::kernel_of_reduction(u64 f) const {
  const auto it = std::lower_bound(divisors_.begin(), divisors_.end(), f);
  if (it == divisors_.end() || *it != f) throw std::invalid_argument("kernel_of_reduction: f must divide q");
  return kernels_[static_cast<std::size_t>(it - divisors_.begin())];
}

Character CharacterGroup::character(u64 index) const {
  if (index >= phi_) throw std::out_of_range("character index out of range");
  return Character(shared_from_this(), index);
}

std::vector<Character> CharacterGroup::all_characters() const {
  std::vector<Character> out;
  out.reserve(phi_);
  for (u64 e = 0; e < phi_; ++e) out.push_back(character(e));
  return out;
}

std::vector<Character> CharacterGroup::primitive_characters() const {
  std::vector<Character> out;
  for (u64 e = 0; e < phi_; ++e) {
    Character chi = character(e);
    if (chi.is_primitive()) out.push_back(std::move(chi));
  }
  return out;
}

Character::Character(GroupPtr group, u64 index) : group_(std::move(group)), index_(index) {
  u64 rest = index;
  const u64 exponent = group_->exponent();
  for (const auto& f : group_->factors()) {
    const u64 digit = rest % f.order;
    rest /= f.order;
    weights_.push_back(digit * (exponent / f.order) % exponent);
  }
  conductor_ = compute_conductor();
}

u64 Character::compute_conductor() const {
  for (u64 f : group_->divisors_) {
    const auto& kernel = group_->kernel_of_reduction(f);
    const bool trivial = std::all_of(kernel.begin(), kernel.end(), [&](u64 u) { return *phase(u) == 0; });
    if (trivial) return f;
  }
  return group_->q();
}

u64 Character::conjugate_index() const {
  u64 rest = index_;
  u64 radix = 1;
  u64 out = 0;
  for (const auto& f : group_->factors()) {
    const u64 digit = rest % f.order;
    rest /= f.order;
    out += ((f.order - digit) % f.order) * radix;
    radix *= f.order;
  }
  return out;
}

int Character::parity() const {
  const u64 q = group_->q();
  if (q <= 2) return 1;
  return *phase(q - 1) == 0 ? 1 : -1;
}

u64 Character::order() const {
  u64 out = 1;
  const u64 exponent = group_->exponent();
  for (u64 w : weights_) out = std::lcm(out, exponent / std::gcd(exponent, w));
  return out;
}

cdouble Character::operator()(u64 n) const {
  const auto ph = phase(n);
  if (!ph) return {0.0, 0.0};
  return group_->root(*ph);
}

cdouble gauss_sum(const Character& chi) {
  const u64 q = chi.group().q();
  CompensatedComplexSum sum;
  for (u64 a : chi.group().units()) {
    sum += chi(a) * unit_root(static_cast<double>(a) / static_cast<double>(q));
  }
  return sum.value();
}

cdouble iota(const Character& chi, unsigned kappa) {
  if (!chi.is_primitive()) throw std::invalid_argument("iota requires a primitive character");
  static constexpr std::array<cdouble, 4> kIPowers = {cdouble{1, 0}, cdouble{0, 1}, cdouble{-1, 0}, cdouble{0, -1}};
  const cdouble tau = gauss_sum(chi);
  return kIPowers[kappa % 4] * tau * tau / static_cast<double>(chi.group().q());
}

double kloosterman(i64 u, i64 v, u64 q) {
  if (q == 0) throw std::invalid_argument("kloosterman: q must be positive");
  const i64 qs = static_cast<i64>(q);
  const u64 ur = static_cast<u64>((u % qs + qs) % qs);
  const u64 vr = static_cast<u64>((v % qs + qs) % qs);
  CompensatedComplexSum sum;
  for (u64 h = 0; h < q; ++h) {
    if (std::gcd(h, q) != 1) continue;
    const u64 hbar = q == 1 ? 0 : invmod(h, q);
    const u64 phase = (mulmod(ur, h, q) + mulmod(vr, hbar, q)) % q;
    sum += unit_root(static_cast<double>(phase) / static_cast<double>(q));
  }
  const cdouble s = sum.value();
  if (std::abs(s.imag()) > 1e-9) throw std::runtime_error("kloosterman: imaginary part exceeds 1e-9");
  return s.real();
}

i64 primitive_sum_identity(i64 a, u64 q) {
  if (q == 0) throw std::invalid_argument("primitive_sum_identity: q must be positive");
  const i64 qs = static_cast<i64>(q);
  const u64 ar = static_cast<u64>((a % qs + qs) % qs);
  if (std::gcd(ar, q) != 1 && q != 1) throw std::invalid_argument("primitive_sum_identity: (a, q) must be 1");
  const u64 g = std::gcd(q, (ar + q - 1 % q) % q);
  i64 total = 0;
  for (u64 c : divisors(g == 0 ? q : g)) total += mobius(q / c) * static_cast<i64>(euler_phi(c));
  return total;
}

PrimitiveSumAudit primitive_sum_audit(i64 a, const GroupPtr& group) {
  const u64 q = group->q();
  PrimitiveSumAudit audit{};
  audit.rhs = primitive_sum_identity(a, q);
  const i64 qs = static_cast<i64>(q);
  const u64 ar = static_cast<u64>((a % qs + qs) % qs);
  CompensatedComplexSum lhs;
  for (const auto& chi : group->primitive_characters()) lhs += chi(ar);
  audit.lhs = lhs.value();
  audit.residual = std::abs(audit.lhs - cdouble(static_cast<double>(audit.rhs), 0.0));
  audit.pass = audit.residual <= 1e-6;
  return audit;
}

void write_dlog_table(const CharacterGroup& group, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    for (u64 u : group.units()) out << u << '\t' << *group.dlog(u) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::pair<u64, u64>> read_dlog_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open dlog table " + path.string());
  std::vector<std::pair<u64, u64>> out;
  u64 unit = 0;
  u64 exponent = 0;
  while (in >> unit >> exponent) out.emplace_back(unit, exponent);
  return out;
}

}  // namespace twistmom

#include "twistmom/moments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "twistmom/parallel.hpp"
#include "twistmom/summation.hpp"

namespace twistmom {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_abs(cdouble z) {
  const double a = std::abs(z);
  return a == 0.0 ? kNegInf : std::log(a);
}

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// log sum_i exp(t_i), accumulated in insertion order.
class LogSum {
public:
  void add(double t) {
    if (t != kNegInf) terms_.push_back(t);
  }
  double value() const {
    if (terms_.empty()) return kNegInf;
    const double m = *std::max_element(terms_.begin(), terms_.end());
    CompensatedSum s;
    for (double t : terms_) s += std::exp(t - m);
    return m + std::log(s.value());
  }

private:
  std::vector<double> terms_;
};

bool holds(double lhs_log, double rhs_log) { return !(lhs_log > rhs_log + kAuditSlack); }

SegmentCheck make_check(std::string name, std::size_t j, Regime regime, double lhs, double rhs, bool asserted = true) {
  return SegmentCheck{std::move(name), j, regime, lhs, rhs, asserted, holds(lhs, rhs)};
}

// log of the constant in front of |N_j(k)|^2 in the small-regime bound.
double guard_log_constant(double k, double delta) {
  if (k < 1.0) return (2.0 / k) * std::log1p(delta);
  const double e = 2.0 * k / (2.0 * k - 1.0);
  return e * std::log1p(delta) - (2.0 * (k - 1.0) / (2.0 * k - 1.0)) * std::log1p(-delta);
}

// Per-character logs shared by the family-level audits.
struct CharLogs {
  double L;
  std::vector<double> Nk, Nm, Q;
  double Nk_total = 0.0, Nm_total = 0.0;
  double log_A = kNegInf, log_B = kNegInf;
  double log_guard = 0.0;  // sum_j log(|N_j(k)|^2 + |Q_j|^2)
};

CharLogs char_logs(cdouble L, const MollifierValue& v) {
  CharLogs c;
  c.L = log_abs(L);
  const std::size_t R = v.P.size();
  for (std::size_t j = 0; j < R; ++j) {
    c.Nk.push_back(log_abs(v.N_k[j]));
    c.Nm.push_back(log_abs(v.N_km1[j]));
    c.Q.push_back(v.log_abs_Q[j]);
    c.Nk_total += c.Nk.back();
    c.Nm_total += c.Nm.back();
    c.log_guard += log_add(2.0 * c.Nk.back(), 2.0 * c.Q.back());
  }
  double prefix_m = 0.0, prefix_k = 0.0;
  for (std::size_t v_ = 0; v_ <= R; ++v_) {
    const double q_next = v_ < R ? 2.0 * c.Q[v_] : 0.0;
    c.log_A = log_add(c.log_A, prefix_m + q_next);
    c.log_B = log_add(c.log_B, prefix_k + q_next);
    if (v_ < R) {
      prefix_m += 2.0 * c.Nm[v_];
      prefix_k += 2.0 * c.Nk[v_];
    }
  }
  return c;
}

std::vector<CharLogs> family_logs(const Family& family, const std::vector<MollifierValue>& mv) {
  std::vector<CharLogs> out;
  out.reserve(mv.size());
  for (std::size_t i = 0; i < mv.size(); ++i) out.push_back(char_logs(family.values()[i].value, mv[i]));
  return out;
}

cdouble twisted_sum(const Family& family, const std::vector<MollifierValue>& mv) {
  CompensatedComplexSum s;
  for (std::size_t i = 0; i < mv.size(); ++i) {
    s += family.values()[i].value * mv[i].N_total_km1 * std::conj(mv[i].N_total_k);
  }
  return s.value();
}

double lambda_at(const EigenformTable& table, u64 n) {
  if (n > table.n_max()) throw std::out_of_range("coefficient index " + std::to_string(n) + " beyond eigenform table");
  return table.lambda(n);
}

}  // namespace

Family::Family(std::shared_ptr<const EigenformTable> table, WeightPair weights, u64 q, AfeConfig cfg)
    : Family(std::move(table), std::move(weights), CharacterGroup::build(q), cfg) {}

Family::Family(std::shared_ptr<const EigenformTable> table, WeightPair weights, GroupPtr group, AfeConfig cfg)
    : table_(table), group_(std::move(group)), engine_(table, group_, std::move(weights), cfg),
      chars_(group_->primitive_characters()), values_(engine_.family_values()), phi_star_(twistmom::phi_star(group_->q())) {
  if (chars_.size() != phi_star_) throw std::logic_error("primitive family size differs from phi*(q)");
}

double Family::log_q() const { return std::log(static_cast<double>(q())); }

std::vector<MollifierValue> Family::mollifier_values(const Mollifier& mollifier) const {
  if (mollifier.ladder().q != q()) throw std::invalid_argument("mollifier ladder built for a different modulus");
  std::vector<MollifierValue> out(chars_.size());
  parallel_for(chars_.size(), engine_.config().workers, [&](std::size_t i) { out[i] = mollifier.evaluate(chars_[i]); });
  return out;
}

MomentReport family_moment(const Family& family, double k, bool keep_contributions) {
  if (!(k >= 0.0) || !std::isfinite(k)) throw std::invalid_argument("moment exponent k must be a finite value >= 0");
  MomentReport r;
  r.q = family.q();
  r.k = k;
  r.phi_star = family.phi_star();
  r.log_q = family.log_q();
  CompensatedSum raw, abs_sum;
  CompensatedComplexSum first;
  for (const auto& v : family.values()) {
    const double c = k == 0.0 ? 1.0 : std::pow(std::norm(v.value), k);
    raw += c;
    abs_sum += std::abs(v.value);
    first += v.value;
    if (keep_contributions) r.contributions.push_back(c);
    if (v.residual) {
      ++r.audit.sq_checked;
      if (*v.residual <= kSqTolerance) ++r.audit.sq_passed;
      r.audit.max_sq_residual = std::max(r.audit.max_sq_residual, *v.residual);
    }
  }
  r.raw_moment = k == 0.0 ? static_cast<double>(r.phi_star) : raw.value();
  r.normalized = r.raw_moment / static_cast<double>(r.phi_star);
  r.ratio_to_logq_pow_k2 = r.normalized / std::pow(r.log_q, k * k);
  const double denom = abs_sum.value();
  r.audit.imag_ratio = denom > 0.0 ? std::abs(first.value().imag()) / denom : 0.0;
  r.audit.imag_pass = r.audit.imag_ratio <= kImagTolerance;
  return r;
}

bool power_mean_monotone(std::vector<MomentReport> reports, double slack) {
  std::sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) { return a.k < b.k; });
  double prev = -std::numeric_limits<double>::infinity();
  for (const auto& r : reports) {
    if (!(r.k > 0.0)) continue;
    const double m = std::pow(r.normalized, 1.0 / r.k);
    if (m < prev - slack * std::max(1.0, std::abs(prev))) return false;
    prev = m;
  }
  return true;
}

TwistedMoment twisted_first_moment(const Family& family, const Mollifier& mollifier, bool brute_force) {
  const auto mv = family.mollifier_values(mollifier);
  TwistedMoment t;
  t.value = twisted_sum(family, mv);
  t.abs_imag = std::abs(t.value.imag());
  if (!brute_force) return t;

  const double k = mollifier.ladder().k;
  const CoefficientMap x = mollifier.coefficients(k - 1.0);
  const CoefficientMap y = mollifier.coefficients(k);
  const auto& chars = family.characters();
  std::vector<cdouble> terms(chars.size());
  parallel_for(chars.size(), family.engine().config().workers, [&](std::size_t i) {
    const Character& chi = chars[i];
    CompensatedComplexSum nx, ny;
    for (const auto& [a, c] : x) nx += c / std::sqrt(static_cast<double>(a)) * chi(a);
    for (const auto& [b, c] : y) ny += c / std::sqrt(static_cast<double>(b)) * std::conj(chi(b));
    terms[i] = family.engine().central_value(chi) * nx.value() * ny.value();
  });
  CompensatedComplexSum s;
  for (const auto& z : terms) s += z;
  t.brute = s.value();
  t.rel_diff = std::abs(t.value - *t.brute) / std::max(std::abs(*t.brute), 1e-300);
  return t;
}

LocalFactorCheck local_factor_check(u64 p, double lambda_p, double k) {
  constexpr int kTerms = 120;
  // lambda(p^j) from the Hecke recursion at a prime.
  std::vector<double> lp(kTerms + 1);
  lp[0] = 1.0;
  lp[1] = lambda_p;
  for (int j = 1; j < kTerms; ++j) lp[j + 1] = lambda_p * lp[j] - lp[j - 1];
  const double pd = static_cast<double>(p);
  CompensatedSum total;
  double outer = 1.0;  // (lambda k / p)^i / i!
  for (int i = 0; i <= kTerms; ++i) {
    if (i > 0) outer *= lambda_p * k / pd / i;
    CompensatedSum inner;
    double t = 1.0;  // ((k-1) lambda)^l / l!
    for (int l = 0; l <= i; ++l) {
      if (l > 0) t *= (k - 1.0) * lambda_p / l;
      inner += t * lp[i - l];
    }
    total += outer * inner.value();
  }
  LocalFactorCheck c;
  c.p = p;
  c.lambda_p = lambda_p;
  c.exact = total.value();
  c.approx = 1.0 + k * k * lambda_p * lambda_p / pd;
  c.scaled_residual = std::abs(c.exact - c.approx) * pd * pd;
  c.pass = c.scaled_residual < 10.0;
  return c;
}

DiagonalCheck diagonal_factorization_check(const Mollifier& mollifier) {
  const double k = mollifier.ladder().k;
  const auto& table = mollifier.table();
  DiagonalCheck d{};

  const CoefficientMap x = mollifier.coefficients(k - 1.0);
  const CoefficientMap y = mollifier.coefficients(k);
  std::unordered_map<u64, double> xs(x.begin(), x.end());
  CompensatedSum lhs;
  for (const auto& [b, yb] : y) {
    CompensatedSum inner;
    for (u64 a : divisors(b)) {
      const auto it = xs.find(a);
      if (it != xs.end()) inner += it->second * lambda_at(table, b / a);
    }
    lhs += yb / static_cast<double>(b) * inner.value();
  }
  d.lhs = lhs.value();

  double rhs = 1.0;
  for (std::size_t j = 0; j < mollifier.ladder().R(); ++j) {
    std::unordered_map<u64, double> xj;
    for (const auto& m : mollifier.segment_monomials(j, k - 1.0)) xj[m.n] = m.coeff;
    CompensatedSum local;
    for (const auto& m : mollifier.segment_monomials(j, k)) {
      CompensatedSum inner;
      for (u64 a : divisors(m.n)) {
        const auto it = xj.find(a);
        if (it != xj.end()) inner += it->second * lambda_at(table, m.n / a);
      }
      local += m.coeff / static_cast<double>(m.n) * inner.value();
    }
    rhs *= local.value();
    for (u64 p : mollifier.segments().segments[j]) d.local.push_back(local_factor_check(p, lambda_at(table, p), k));
  }
  d.rhs = rhs;
  d.residual = std::abs(d.lhs - d.rhs) / std::max(std::abs(d.rhs), 1e-300);
  d.pass = d.residual < 1e-9;
  return d;
}

std::vector<SegmentCheck> audit_segment(std::size_t j, cdouble P, cdouble N_k, cdouble N_km1, double log_abs_Q,
                                        u64 ell, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("inequality audit needs k > 0");
  const double l = static_cast<double>(ell);
  const double delta = std::exp(-l);
  const double nk = log_abs(N_k);
  const double nm = log_abs(N_km1);
  const double absP = std::abs(P);
  std::vector<SegmentCheck> out;

  if (k < 1.0) {
    const double lhs = (2.0 / k) * nk + 2.0 * nm;
    if (absP <= l / 60.0) {
      out.push_back(make_check("est1", j, Regime::small, lhs, 2.0 * nk + (2.0 / k) * std::log1p(delta)));
      out.push_back(make_check("est1_printed_constant", j, Regime::small, lhs,
                               2.0 * nk + 2.0 * std::log1p(delta) - (2.0 * (k - 1.0) / k) * std::log1p(-delta), false));
      out.push_back(make_check("prodNlowerbound", j, Regime::small, 2.0 * std::log1p(-delta),
                               2.0 * k * nm + 2.0 * (1.0 - k) * nk));
    } else {
      out.push_back(make_check("est2_power", j, Regime::large, lhs, 2.0 * (1.0 + 1.0 / k) * l * std::log(64.0 * absP / l)));
      out.push_back(make_check("est2", j, Regime::large, lhs, 2.0 * log_abs_Q));
    }
    const Regime regime = absP <= l / 60.0 ? Regime::small : Regime::large;
    out.push_back(make_check("guard_lower", j, regime, lhs, guard_log_constant(k, delta) + log_add(2.0 * nk, 2.0 * log_abs_Q)));
  } else {
    const double e = 2.0 * k / (2.0 * k - 1.0);
    const double lhs = e * (nk + nm);
    const bool small = absP <= l / (40.0 * k);
    if (small) {
      out.push_back(make_check("prodNkbig", j, Regime::small, lhs, 2.0 * nk + guard_log_constant(k, delta)));
    } else {
      out.push_back(make_check("prodNkbig_large", j, Regime::large, lhs, 2.0 * log_abs_Q));
    }
    out.push_back(make_check("guard_kbig", j, small ? Regime::small : Regime::large, lhs,
                             guard_log_constant(k, delta) + log_add(2.0 * nk, 2.0 * log_abs_Q)));
  }
  return out;
}

std::vector<SegmentCheck> audit_segment(std::size_t j, cdouble P, u64 ell, double k) {
  return audit_segment(j, P, trunc_exp(ell, k * P), trunc_exp(ell, (k - 1.0) * P),
                       log_abs_q_from_p(P, ell, ladder_c_k(k), ladder_r_k(k)), ell, k);
}

double ChainCheck::ratio() const { return std::exp(rhs_log - lhs_log); }

void InequalityAudit::add(const SegmentCheck& c) {
  auto it = std::find_if(pointwise.begin(), pointwise.end(), [&](const CheckTally& t) { return t.name == c.name; });
  if (it == pointwise.end()) {
    pointwise.push_back(CheckTally{c.name, c.asserted});
    it = std::prev(pointwise.end());
  }
  ++it->checked;
  if (c.pass) ++it->passed;
  if (c.lhs_log != kNegInf) it->min_log_margin = std::min(it->min_log_margin, c.rhs_log - c.lhs_log);
}

void InequalityAudit::add(const InequalityAudit& other) {
  characters += other.characters;
  for (const auto& t : other.pointwise) {
    auto it = std::find_if(pointwise.begin(), pointwise.end(), [&](const CheckTally& s) { return s.name == t.name; });
    if (it == pointwise.end()) {
      pointwise.push_back(t);
      continue;
    }
    it->checked += t.checked;
    it->passed += t.passed;
    it->min_log_margin = std::min(it->min_log_margin, t.min_log_margin);
  }
  chains.insert(chains.end(), other.chains.begin(), other.chains.end());
  if (other.upper_principle_min) {
    upper_principle_min = upper_principle_min ? std::min(*upper_principle_min, *other.upper_principle_min)
                                              : *other.upper_principle_min;
  }
}

bool InequalityAudit::all_pass() const {
  for (const auto& t : pointwise)
    if (t.asserted && t.passed != t.checked) return false;
  for (const auto& c : chains)
    if (c.asserted && !c.pass) return false;
  return true;
}

InequalityAudit pointwise_inequality_audit(const Mollifier& mollifier, const Character& chi) {
  const auto v = mollifier.evaluate(chi);
  InequalityAudit a;
  a.q = mollifier.ladder().q;
  a.k = mollifier.ladder().k;
  a.characters = 1;
  for (std::size_t j = 0; j < v.P.size(); ++j) {
    for (const auto& c : audit_segment(j, v.P[j], v.N_k[j], v.N_km1[j], v.log_abs_Q[j], mollifier.ladder().ell[j], a.k)) {
      a.add(c);
    }
  }
  return a;
}

InequalityAudit holder_chain_audit(const Family& family, const Mollifier& mollifier) {
  const double k = mollifier.ladder().k;
  const auto& ell = mollifier.ladder().ell;
  const auto mv = family.mollifier_values(mollifier);
  const auto logs = family_logs(family, mv);

  InequalityAudit a;
  a.q = family.q();
  a.k = k;
  a.characters = mv.size();
  for (const auto& v : mv) {
    for (std::size_t j = 0; j < v.P.size(); ++j) {
      for (const auto& c : audit_segment(j, v.P[j], v.N_k[j], v.N_km1[j], v.log_abs_Q[j], ell[j], k)) a.add(c);
    }
  }

  double guard_const = 0.0;
  double floor_log = 0.0;
  for (u64 l : ell) {
    const double delta = std::exp(-static_cast<double>(l));
    guard_const += guard_log_constant(k, delta);
    floor_log += 2.0 * std::log1p(-delta);
  }
  const double lhs = log_abs(twisted_sum(family, mv));
  LogSum s1, guard;
  for (const auto& c : logs) {
    s1.add(2.0 * k * c.L);
    guard.add(c.log_guard);
  }

  if (k < 1.0) {
    LogSum s2, s3;
    for (const auto& c : logs) {
      s2.add(2.0 * c.L + 2.0 * c.Nm_total);
      s3.add((2.0 / k) * c.Nk_total + 2.0 * c.Nm_total);
    }
    const double rhs = 0.5 * s1.value() + 0.5 * (1.0 - k) * s2.value() + 0.5 * k * s3.value();
    a.chains.push_back({"holder_lower", lhs, rhs, true, holds(lhs, rhs)});
    a.chains.push_back({"holder_lower_guard", s3.value(), guard_const + guard.value(), true,
                        holds(s3.value(), guard_const + guard.value())});

    LogSum up_lhs, la, lb;
    double min_ab = std::numeric_limits<double>::infinity();
    for (const auto& c : logs) {
      const double ab = k * c.log_A + (1.0 - k) * c.log_B;
      up_lhs.add(2.0 * k * c.L + ab);
      la.add(2.0 * c.L + c.log_A);
      lb.add(c.log_B);
      min_ab = std::min(min_ab, ab);
      a.add(make_check("upper_floor", ell.size(), Regime::small, floor_log, ab));
    }
    const double up_rhs = k * la.value() + (1.0 - k) * lb.value();
    a.chains.push_back({"holder_upper", up_lhs.value(), up_rhs, true, holds(up_lhs.value(), up_rhs)});
    if (!logs.empty()) a.upper_principle_min = std::exp(min_ab);
  } else {
    const double e = 2.0 * k / (2.0 * k - 1.0);
    LogSum t;
    for (const auto& c : logs) t.add(e * (c.Nk_total + c.Nm_total));
    const double rhs = s1.value() / (2.0 * k) + t.value() / e;
    a.chains.push_back({"holder_kbig", lhs, rhs, true, holds(lhs, rhs)});
    a.chains.push_back({"holder_kbig_guard", t.value(), guard_const + guard.value(), true,
                        holds(t.value(), guard_const + guard.value())});
  }
  return a;
}

Prop56Quantities prop56_quantities(const Family& family, const Mollifier& mollifier) {
  const double k = mollifier.ladder().k;
  const auto mv = family.mollifier_values(mollifier);
  const auto logs = family_logs(family, mv);
  Prop56Quantities p;
  p.q = family.q();
  p.k = k;
  p.scale = static_cast<double>(family.phi_star()) * std::pow(family.log_q(), k * k);
  LogSum a, b, c, d;
  for (const auto& l : logs) {
    a.add(2.0 * l.L + 2.0 * l.Nm_total);
    b.add(2.0 * l.L + l.log_A);
    c.add(l.log_guard);
    d.add(l.log_B);
  }
  const double ls = std::log(p.scale);
  p.mollified_sq = std::exp(a.value() - ls);
  p.guarded_sq = std::exp(b.value() - ls);
  p.guard_product = std::exp(c.value() - ls);
  p.guard_ladder = std::exp(d.value() - ls);
  return p;
}

ExponentFit exponent_fit(const std::vector<MomentReport>& reports) {
  if (reports.size() < 4) throw std::invalid_argument("exponent fit needs at least 4 reports");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    if (r.k != reports.front().k) throw std::invalid_argument("exponent fit needs reports with one k");
    if (i > 0 && r.q <= reports[i - 1].q) throw std::invalid_argument("exponent fit needs increasing q");
    if (r.q < 3) throw std::invalid_argument("exponent fit needs q >= 3");
    if (!(r.normalized > 0.0)) throw std::domain_error("exponent fit needs positive normalized moments");
    xs.push_back(std::log(std::log(static_cast<double>(r.q))));
    ys.push_back(std::log(r.normalized));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  ExponentFit f;
  f.points = xs.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (f.intercept + f.slope * xs[i]);
    ss_res += r * r;
  }
  f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

StirlingAudit stirling_audit(unsigned n_max) {
  StirlingAudit s{n_max, 0, {}};
  double log_fact = 0.0;
  for (unsigned n = 1; n <= n_max; ++n) {
    log_fact += std::log(static_cast<double>(n));
    const double base = n * std::log(static_cast<double>(n)) - n;
    if (holds(base, log_fact)) ++s.lower_passed;
    if (!holds(log_fact, std::log(static_cast<double>(n)) + base)) s.upper_failures.push_back(n);
  }
  return s;
}

}  // namespace twistmom

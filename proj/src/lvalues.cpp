#include "twistmom/lvalues.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "twistmom/parallel.hpp"
#include "twistmom/summation.hpp"

namespace twistmom {

namespace {

constexpr double kResidualFloor = 1e-6;
// The W2 sum is only a cross-check and W2 decays like exp(-4 pi sqrt(x)), so it is cut much deeper.
constexpr double kSqTailFactor = 1e-4;

u64 cap_from(double bound) {
  if (!(bound < 1e18)) throw std::overflow_error("truncation point overflows");
  return static_cast<u64>(std::ceil(bound));
}

void require_primitive(const Character& chi) {
  if (!chi.is_primitive()) {
    throw std::invalid_argument("character " + std::to_string(chi.index()) + " mod " +
                                std::to_string(chi.group().q()) + " is not primitive");
  }
}

}  // namespace

WeightPair make_weight_pair(unsigned kappa, bool with_grid) {
  auto w = std::make_shared<WeightEvaluator>(WeightKind::W, kappa);
  auto w2 = std::make_shared<WeightEvaluator>(WeightKind::W2, kappa);
  if (with_grid) {
    w->attach_grid();
    w2->attach_grid();
  }
  return {w, w2};
}

AfeCaps afe_caps(const WeightPair& weights, u64 q, double X, double tail_eps, double cap_scale) {
  if (!(cap_scale >= 1.0)) throw std::invalid_argument("cap_scale must be at least 1");
  if (!(X > 0.0)) throw std::invalid_argument("X must be positive");
  if (!(tail_eps > 0.0)) throw std::invalid_argument("tail_eps must be positive");
  AfeCaps caps{};
  caps.x_eps = weights.w->tail_start(tail_eps);
  caps.y_eps = weights.w2->tail_start(tail_eps * kSqTailFactor);
  const double qd = static_cast<double>(q);
  caps.n_direct = cap_from(cap_scale * caps.x_eps * qd / X);
  caps.n_dual = cap_from(cap_scale * caps.x_eps * qd * X);
  caps.m_sq = cap_from(cap_scale * caps.y_eps * qd * qd);
  return caps;
}

double sq_residual(cdouble value, double sq) {
  const double abs_sq = std::norm(value);
  return std::abs(abs_sq - sq) / std::max(abs_sq, kResidualFloor);
}

AfeEngine::AfeEngine(std::shared_ptr<const EigenformTable> table, GroupPtr group, WeightPair weights, AfeConfig cfg)
    : table_(std::move(table)), group_(std::move(group)), weights_(std::move(weights)), cfg_(cfg) {
  if (weights_.w->kappa() != table_->weight()) throw std::invalid_argument("weight evaluator kappa differs from the form");
  const u64 q = group_->q();
  caps_ = afe_caps(weights_, q, cfg_.X, cfg_.tail_eps, cfg_.cap_scale);
  const u64 need = std::max(caps_.n_direct, caps_.n_dual);
  if (need > table_->n_max()) {
    throw std::out_of_range("eigenform table too short for q = " + std::to_string(q) + ": need n_max >= " +
                            std::to_string(need) + ", have " + std::to_string(table_->n_max()));
  }
  const double qd = static_cast<double>(q);
  const auto& W = *weights_.w;
  direct_coeff_.assign(caps_.n_direct + 1, 0.0);
  dual_coeff_.assign(caps_.n_dual + 1, 0.0);
  for (u64 n = 1; n <= caps_.n_direct; ++n) {
    const double nd = static_cast<double>(n);
    direct_coeff_[n] = table_->lambda(n) / std::sqrt(nd) * W(nd * cfg_.X / qd);
  }
  for (u64 n = 1; n <= caps_.n_dual; ++n) {
    const double nd = static_cast<double>(n);
    dual_coeff_[n] = table_->lambda(n) / std::sqrt(nd) * W(nd / (qd * cfg_.X));
  }
}

cdouble AfeEngine::central_value(const Character& chi) const {
  require_primitive(chi);
  CompensatedComplexSum direct;
  CompensatedComplexSum dual;
  for (u64 n = 1; n < direct_coeff_.size(); ++n) direct += direct_coeff_[n] * chi(n);
  for (u64 n = 1; n < dual_coeff_.size(); ++n) dual += dual_coeff_[n] * std::conj(chi(n));
  return direct.value() + iota(chi, table_->weight()) * dual.value();
}

double AfeEngine::central_value_sq(const Character& chi) const {
  require_primitive(chi);
  const u64 q = group_->q();
  const u64 m_cap = caps_.m_sq;
  if (m_cap > table_->n_max()) {
    throw std::out_of_range("W2 sum needs n_max >= " + std::to_string(m_cap) + " for q = " + std::to_string(q) +
                            ", have " + std::to_string(table_->n_max()));
  }
  std::vector<cdouble> u(m_cap + 1);
  for (u64 a = 1; a <= m_cap; ++a) u[a] = table_->lambda(a) * chi(a);
  std::vector<cdouble> c(m_cap + 1);
  for (u64 a = 1; a <= m_cap; ++a) {
    if (u[a] == cdouble(0.0, 0.0)) continue;
    const u64 b_max = m_cap / a;
    for (u64 b = 1; b <= b_max; ++b) c[a * b] += u[a] * std::conj(u[b]);
  }
  const double q2 = static_cast<double>(q) * static_cast<double>(q);
  const auto& W2 = *weights_.w2;
  CompensatedComplexSum sum;
  for (u64 m = 1; m <= m_cap; ++m) {
    if (c[m] == cdouble(0.0, 0.0)) continue;
    const double md = static_cast<double>(m);
    sum += c[m] * (W2(md / q2) / std::sqrt(md));
  }
  const cdouble total = 2.0 * sum.value();
  if (std::abs(total.imag()) > 1e-8 * std::max(std::abs(total.real()), kResidualFloor)) {
    throw std::runtime_error("W2 sum for character " + std::to_string(chi.index()) + " is not real: imag " +
                             std::to_string(total.imag()));
  }
  return total.real();
}

std::vector<u64> AfeEngine::audit_indices() const {
  std::vector<u64> prim;
  for (const auto& chi : group_->primitive_characters()) prim.push_back(chi.index());
  std::mt19937_64 rng(cfg_.seed);
  // Fisher-Yates with an explicit modulo so the order does not depend on the standard library.
  for (std::size_t i = prim.size(); i > 1; --i) std::swap(prim[i - 1], prim[rng() % i]);
  prim.resize(std::min(prim.size(), cfg_.audit_count));
  std::sort(prim.begin(), prim.end());
  return prim;
}

std::vector<CentralValue> AfeEngine::family_values() const {
  const u64 q = group_->q();
  std::vector<CompensatedSum> bucket_direct(q);
  std::vector<CompensatedSum> bucket_dual(q);
  for (u64 n = 1; n < direct_coeff_.size(); ++n) bucket_direct[n % q] += direct_coeff_[n];
  for (u64 n = 1; n < dual_coeff_.size(); ++n) bucket_dual[n % q] += dual_coeff_[n];
  std::vector<double> a(q);
  std::vector<double> b(q);
  for (u64 r = 0; r < q; ++r) {
    a[r] = bucket_direct[r].value();
    b[r] = bucket_dual[r].value();
  }

  const auto prim = group_->primitive_characters();
  std::vector<CentralValue> out(prim.size());
  const auto& units = group_->units();
  parallel_for(prim.size(), cfg_.workers, [&](std::size_t i) {
    const Character& chi = prim[i];
    CompensatedComplexSum direct;
    CompensatedComplexSum dual;
    for (u64 r : units) {
      const cdouble v = chi(r);
      direct += a[r] * v;
      dual += b[r] * std::conj(v);
    }
    out[i] = CentralValue{chi.index(), chi.conjugate_index(), chi.conductor(),
                          direct.value() + iota(chi, table_->weight()) * dual.value(), std::nullopt, std::nullopt};
  });

  const auto audited = audit_indices();
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < prim.size(); ++i)
    if (std::binary_search(audited.begin(), audited.end(), prim[i].index())) positions.push_back(i);
  parallel_for(positions.size(), cfg_.workers, [&](std::size_t j) {
    auto& rec = out[positions[j]];
    const double sq = central_value_sq(prim[positions[j]]);
    rec.sq_direct = sq;
    rec.residual = sq_residual(rec.value, sq);
  });
  return out;
}

}  // namespace twistmom

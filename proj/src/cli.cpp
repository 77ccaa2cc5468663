#include "twistmom/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <variant>

#include "twistmom/cache.hpp"
#include "twistmom/moments.hpp"

namespace twistmom::cli {

namespace {

using json = nlohmann::json;

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::vector<u64> kDefaultSweep = {27, 53, 101, 125, 149, 211, 307, 343, 401, 503, 701, 1009, 1331};
constexpr u64 kTableQuantum = 10'000;

// ---------------------------------------------------------------- parsing

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

u64 parse_u64(const std::string& text, const std::string& what) {
  const std::string s = trim(text);
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (s.empty() || s[0] == '-') throw std::invalid_argument(s);
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    throw ValidationError(what + ": expected a non-negative integer, got '" + text + "'");
  }
  if (used != s.size()) throw ValidationError(what + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

double parse_double(const std::string& text, const std::string& what) {
  const std::string s = trim(text);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ValidationError(what + ": expected a number, got '" + text + "'");
  }
  if (used != s.size() || !std::isfinite(v)) throw ValidationError(what + ": expected a number, got '" + text + "'");
  return v;
}

template <typename T, typename Fn>
std::vector<T> parse_list(const std::string& text, const std::string& what, Fn&& one) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(one(item, what));
  }
  if (out.empty()) throw ValidationError(what + ": empty list");
  return out;
}

std::vector<u64> u64_list(const std::string& t, const std::string& w) { return parse_list<u64>(t, w, parse_u64); }
std::vector<double> double_list(const std::string& t, const std::string& w) {
  return parse_list<double>(t, w, parse_double);
}

// JSON config values: numbers, arrays of numbers, or comma strings.
std::vector<u64> json_u64_list(const json& v, const std::string& key) {
  if (v.is_string()) return u64_list(v.get<std::string>(), key);
  if (v.is_number_unsigned() || v.is_number_integer()) return {parse_u64(v.dump(), key)};
  if (v.is_array()) {
    std::vector<u64> out;
    for (const auto& e : v) out.push_back(parse_u64(e.dump(), key));
    return out;
  }
  throw ValidationError("config key '" + key + "' has the wrong type");
}

std::vector<double> json_double_list(const json& v, const std::string& key) {
  if (v.is_string()) return double_list(v.get<std::string>(), key);
  if (v.is_number()) return {v.get<double>()};
  if (v.is_array()) {
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ValidationError("config key '" + key + "' has a non-numeric entry");
      out.push_back(e.get<double>());
    }
    return out;
  }
  throw ValidationError("config key '" + key + "' has the wrong type");
}

// ---------------------------------------------------------------- reports

using Cell = std::variant<std::monostate, long long, unsigned long long, double, std::string>;

struct Report {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  json audits = json::object();
  std::vector<std::string> trailer;  // extra CSV comment lines
  std::optional<std::string> raw;    // verbatim output (tau files)
};

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else if constexpr (std::is_same_v<T, std::string>) {
          if (v.find_first_of(",\"\n") == std::string::npos) return v;
          std::string q = "\"";
          for (char ch : v) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
          return q + "\"";
        } else {
          return std::to_string(v);
        }
      },
      c);
}

json json_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(v)) return format_double(v);
          return v;
        } else {
          return v;
        }
      },
      c);
}

json finite_or_string(double v) { return std::isfinite(v) ? json(v) : json(format_double(v)); }

Cell u(u64 v) { return static_cast<unsigned long long>(v); }
Cell i(long long v) { return v; }
Cell d(double v) { return v; }
Cell s(std::string v) { return v; }
Cell b(bool v) { return static_cast<long long>(v ? 1 : 0); }

// ---------------------------------------------------------------- config

json config_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["q_list"] = c.q_list;
  j["k_list"] = c.k_list;
  j["kappa"] = c.kappa;
  j["X"] = c.X;
  j["tail_eps"] = c.tail_eps;
  j["ell"] = c.ell;
  j["N"] = c.N ? json(*c.N) : json(nullptr);
  j["M"] = c.M ? json(*c.M) : json(nullptr);
  j["prime_poly"] = c.prime_poly;
  j["format"] = c.format;
  j["in"] = c.in;
  j["seed"] = c.seed;
  j["audit_count"] = c.audit_count;
  j["fit"] = c.fit;
  j["n_max"] = c.n_max;
  j["alpha"] = c.alpha ? json(*c.alpha) : json(nullptr);
  j["samples"] = c.samples;
  return j;
}

void apply_config_file(RunConfig& c, const std::string& path, std::set<std::string>& set_keys) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ValidationError("config file must hold a JSON object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "q" || key == "q_list") {
        c.q_list = json_u64_list(v, key);
        set_keys.insert("q");
      } else if (key == "k" || key == "k_list") {
        c.k_list = json_double_list(v, key);
        set_keys.insert("k");
      } else if (key == "ell") {
        c.ell = json_u64_list(v, key);
        set_keys.insert("ell");
      } else if (key == "kappa") {
        c.kappa = static_cast<unsigned>(parse_u64(v.dump(), key));
      } else if (key == "X") {
        c.X = v.get<double>();
      } else if (key == "tail_eps") {
        c.tail_eps = v.get<double>();
        set_keys.insert("tail_eps");
      } else if (key == "N") {
        c.N = static_cast<unsigned>(parse_u64(v.dump(), key));
      } else if (key == "M") {
        c.M = static_cast<unsigned>(parse_u64(v.dump(), key));
      } else if (key == "prime_poly") {
        c.prime_poly = v.get<std::string>();
      } else if (key == "format") {
        c.format = v.get<std::string>();
      } else if (key == "out") {
        c.out = v.get<std::string>();
      } else if (key == "in") {
        c.in = v.get<std::string>();
      } else if (key == "cache_dir") {
        c.cache_dir = v.get<std::string>();
      } else if (key == "workers") {
        c.workers = static_cast<unsigned>(parse_u64(v.dump(), key));
        set_keys.insert("workers");
      } else if (key == "seed") {
        c.seed = parse_u64(v.dump(), key);
      } else if (key == "audit_count") {
        c.audit_count = parse_u64(v.dump(), key);
        set_keys.insert("audit_count");
      } else if (key == "fit") {
        c.fit = v.get<bool>();
      } else if (key == "n_max") {
        c.n_max = parse_u64(v.dump(), key);
      } else if (key == "alpha") {
        c.alpha = v.get<double>();
      } else if (key == "samples") {
        c.samples = parse_u64(v.dump(), key);
        set_keys.insert("samples");
      } else {
        throw ValidationError("unknown config key '" + key + "'");
      }
    } catch (const json::exception&) {
      throw ValidationError("config key '" + key + "' has the wrong type");
    }
  }
}

void validate(const RunConfig& c) {
  if (c.format != "csv" && c.format != "json") throw ValidationError("--format must be csv or json");
  if (c.kappa == 0 || c.kappa % 2 != 0) throw ValidationError("--kappa must be a positive even integer");
  if (!(c.X > 0.0)) throw ValidationError("--X must be positive");
  if (!(c.tail_eps > 0.0 && c.tail_eps < 1.0)) throw ValidationError("--tail-eps must lie in (0, 1)");
  if (c.workers == 0) throw ValidationError("--workers must be at least 1");
  if (c.prime_poly != "weighted" && c.prime_poly != "unweighted") {
    throw ValidationError("--prime-poly must be weighted or unweighted");
  }
  for (double k : c.k_list)
    if (!(k >= 0.0)) throw ValidationError("--k values must be >= 0");
  for (u64 q : c.q_list)
    if (q < 3) throw ValidationError("--q values must be at least 3");
}

// ---------------------------------------------------------------- shared setup

AfeConfig afe_config(const RunConfig& c) {
  AfeConfig a;
  a.X = c.X;
  a.tail_eps = c.tail_eps;
  a.workers = c.workers;
  a.audit_count = c.audit_count;
  a.seed = c.seed;
  return a;
}

void require_builtin_weight(const RunConfig& c) {
  if (c.kappa != 12) throw ValidationError("only the weight-12 form Delta is built in; use --kappa 12");
}

void require_odd_prime_power(u64 q) {
  const auto pp = as_prime_power(q);
  if (pp.prime < 3) throw ValidationError("q = " + std::to_string(q) + " is not a power of an odd prime");
}

LadderParams ladder_for(const RunConfig& c, u64 q, double k) {
  if (!c.ell.empty()) return build_ladder(q, c.N.value_or(0), c.M.value_or(0), k, c.ell);
  if (c.N && c.M) {
    if (*c.N == 0 || *c.M == 0) throw ValidationError("--N and --M must be positive");
    return build_ladder(q, *c.N, *c.M, k);
  }
  return build_ladder(q, 0, 0, k, std::vector<u64>{8, 2});
}

PrimePolyMode poly_mode(const RunConfig& c) {
  return c.prime_poly == "weighted" ? PrimePolyMode::weighted : PrimePolyMode::unweighted;
}

// Largest coefficient index any mollifier product for this ladder can touch.
u64 mollifier_reach(const LadderParams& ladder) {
  const auto segs = build_segments(ladder.q, ladder.ell);
  long double reach = 1.0L;
  for (std::size_t j = 0; j < ladder.R(); ++j) {
    if (segs.segments[j].empty()) continue;
    reach *= std::pow(static_cast<long double>(segs.segments[j].back()), static_cast<long double>(ladder.ell[j]));
  }
  return reach > 1e18L ? static_cast<u64>(1e18) : static_cast<u64>(reach);
}

u64 round_table(u64 n) { return std::max<u64>(kTableQuantum, (n + kTableQuantum - 1) / kTableQuantum * kTableQuantum); }

std::shared_ptr<const EigenformTable> table_for(const Cache& cache, u64 needed) {
  const u64 n = round_table(needed);
  if (n > kMaxTauIndex) {
    throw std::out_of_range("this run needs lambda(n) up to n = " + std::to_string(needed) + ", above the limit " +
                            std::to_string(kMaxTauIndex) + "; raise --tail-eps or lower --audit-count");
  }
  return cache.tau_table(n);
}

u64 family_reach(const WeightPair& w, u64 q, const RunConfig& c) {
  const auto caps = afe_caps(w, q, c.X, c.tail_eps);
  u64 n = std::max(caps.n_direct, caps.n_dual);
  if (c.audit_count > 0) n = std::max(n, caps.m_sq);
  return n;
}

std::vector<Family> build_families(const Cache& cache, const WeightPair& w,
                                   const std::shared_ptr<const EigenformTable>& table, const RunConfig& c) {
  std::vector<Family> out;
  for (u64 q : c.q_list) out.emplace_back(table, w, cache.group(q), afe_config(c));
  return out;
}

json fit_json(double k, const std::vector<MomentReport>& reps) {
  json j;
  j["k"] = k;
  j["points"] = reps.size();
  if (reps.size() < 4) {
    j["status"] = "insufficient_points";
    return j;
  }
  const auto f = exponent_fit(reps);
  j["status"] = "ok";
  j["slope"] = f.slope;
  j["intercept"] = f.intercept;
  j["r_squared"] = f.r_squared;
  return j;
}

std::string fit_line(const json& f) {
  std::string line = "# fit k=" + format_double(f["k"].get<double>()) + " points=" + std::to_string(f["points"].get<std::size_t>());
  if (f["status"] != "ok") return line + " status=" + f["status"].get<std::string>();
  return line + " slope=" + format_double(f["slope"].get<double>()) +
         " intercept=" + format_double(f["intercept"].get<double>()) +
         " r_squared=" + format_double(f["r_squared"].get<double>());
}

// ---------------------------------------------------------------- subcommands

Report cmd_tau(const RunConfig& c) {
  std::vector<i128> tau;
  if (!c.in.empty()) {
    tau = read_integer_coefficient_file(c.in);
    (void)EigenformTable::from_tau(tau);  // validates the imported coefficients
    if (c.n_max > 0) {
      if (c.n_max + 1 > tau.size()) throw ValidationError("--n-max exceeds the imported file length");
      tau.resize(c.n_max + 1);
    }
  } else {
    if (c.n_max == 0) throw ValidationError("tau needs --n-max (or --in)");
    if (c.n_max > kMaxTauIndex) throw ValidationError("--n-max is limited to " + std::to_string(kMaxTauIndex));
    tau = ramanujan_tau_table(c.n_max);
  }
  std::string text;
  for (std::size_t n = 1; n < tau.size(); ++n) text += std::to_string(n) + "\t" + to_string(tau[n]) + "\n";
  Report r;
  r.raw = text;
  return r;
}

Report cmd_chars(const RunConfig& c) {
  if (c.q_list.empty()) throw ValidationError("chars needs --q");
  Report r;
  r.columns = {"q", "chi_index", "conductor", "primitive", "parity", "order", "gauss_abs_sq_over_q", "iota_re", "iota_im"};
  json per_q = json::array();
  for (u64 q : c.q_list) {
    if (q % 4 == 2) throw ValidationError("q = 2 mod 4 has no primitive characters");
    if (q > 20000) throw ValidationError("chars lists every character; keep q <= 20000");
    const auto g = CharacterGroup::build(q, ModulusPolicy::any_admissible);
    std::size_t primitive = 0;
    for (const auto& chi : g->all_characters()) {
      const cdouble tau = gauss_sum(chi);
      std::vector<Cell> row{u(q), u(chi.index()), u(chi.conductor()), b(chi.is_primitive()), i(chi.parity()),
                            u(chi.order()), d(std::norm(tau) / static_cast<double>(q))};
      if (chi.is_primitive()) {
        ++primitive;
        const cdouble io = iota(chi, c.kappa);
        row.push_back(d(io.real()));
        row.push_back(d(io.imag()));
      } else {
        row.push_back(Cell{});
        row.push_back(Cell{});
      }
      r.rows.push_back(std::move(row));
    }
    per_q.push_back({{"q", q}, {"primitive", primitive}, {"phi_star", phi_star(q)}, {"match", primitive == phi_star(q)}});
  }
  r.audits["families"] = per_q;
  return r;
}

Report cmd_weights(const RunConfig& c, const Cache& cache) {
  const std::size_t n = c.samples == 0 ? 101 : c.samples;
  if (n < 2) throw ValidationError("--samples must be at least 2");
  const auto w = cache.weights(c.kappa);
  Report r;
  r.columns = {"x", "W", "W2"};
  const double lo = std::log(1e-6), hi = std::log(1e4);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = std::exp(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1));
    r.rows.push_back({d(x), d((*w.w)(x)), d((*w.w2)(x))});
  }
  r.audits["tail_start_W"] = w.w->tail_start(c.tail_eps);
  r.audits["tail_start_W2"] = w.w2->tail_start(c.tail_eps);
  return r;
}

Report cmd_lvalue(const RunConfig& c, const Cache& cache) {
  if (c.q_list.empty()) throw ValidationError("lvalue needs --q");
  require_builtin_weight(c);
  for (u64 q : c.q_list) require_odd_prime_power(q);
  const auto w = cache.weights(c.kappa);
  u64 need = 0;
  for (u64 q : c.q_list) need = std::max(need, family_reach(w, q, c));
  const auto table = table_for(cache, need);
  Report r;
  r.columns = {"q", "chi_index", "conductor", "re_L", "im_L", "abs_L_sq", "residual"};
  json per_q = json::array();
  for (u64 q : c.q_list) {
    const AfeEngine engine(table, cache.group(q), w, afe_config(c));
    std::size_t checked = 0, passed = 0;
    double worst = 0.0;
    for (const auto& v : engine.family_values()) {
      r.rows.push_back({u(q), u(v.chi_index), u(v.conductor), d(v.value.real()), d(v.value.imag()), d(std::norm(v.value)),
                        v.residual ? d(*v.residual) : Cell{}});
      if (v.residual) {
        ++checked;
        passed += *v.residual <= kSqTolerance;
        worst = std::max(worst, *v.residual);
      }
    }
    const auto& caps = engine.caps();
    per_q.push_back({{"q", q},
                     {"n_direct", caps.n_direct},
                     {"n_dual", caps.n_dual},
                     {"m_sq", caps.m_sq},
                     {"sq_checked", checked},
                     {"sq_passed", passed},
                     {"max_sq_residual", worst}});
  }
  r.audits["families"] = per_q;
  return r;
}

Report cmd_moments(const RunConfig& c, const Cache& cache, bool sweep) {
  if (c.q_list.empty()) throw ValidationError("moments needs --q");
  require_builtin_weight(c);
  for (u64 q : c.q_list) require_odd_prime_power(q);
  const auto w = cache.weights(c.kappa);
  u64 need = 0;
  for (u64 q : c.q_list) need = std::max(need, family_reach(w, q, c));
  const auto table = table_for(cache, need);
  const auto families = build_families(cache, w, table, c);

  Report r;
  r.columns = {"q", "k", "phi_star", "raw_moment", "normalized", "ratio_to_logq_pow_k2"};
  json per_q = json::array();
  std::map<double, std::vector<MomentReport>> by_k;
  for (const auto& fam : families) {
    std::vector<MomentReport> reps;
    for (double k : c.k_list) {
      const auto m = family_moment(fam, k);
      r.rows.push_back({u(m.q), d(m.k), u(m.phi_star), d(m.raw_moment), d(m.normalized), d(m.ratio_to_logq_pow_k2)});
      reps.push_back(m);
      by_k[k].push_back(m);
    }
    const auto& a = reps.front().audit;
    const auto& caps = fam.engine().caps();
    per_q.push_back({{"q", fam.q()},
                     {"n_direct", caps.n_direct},
                     {"n_dual", caps.n_dual},
                     {"sq_checked", a.sq_checked},
                     {"sq_passed", a.sq_passed},
                     {"max_sq_residual", a.max_sq_residual},
                     {"imag_ratio", a.imag_ratio},
                     {"imag_pass", a.imag_pass},
                     {"power_mean_monotone", power_mean_monotone(reps)}});
  }
  r.audits["families"] = per_q;
  if (sweep && c.fit) {
    json fits = json::array();
    for (double k : c.k_list) {
      auto reps = by_k[k];
      std::sort(reps.begin(), reps.end(), [](const auto& x, const auto& y) { return x.q < y.q; });
      const json f = fit_json(k, reps);
      r.trailer.push_back(fit_line(f));
      fits.push_back(f);
    }
    r.audits["fit"] = fits;
  }
  return r;
}

Report cmd_mollifier_verify(const RunConfig& c, const Cache& cache) {
  if (c.q_list.size() != 1) throw ValidationError("mollifier-verify needs exactly one --q");
  const u64 q = c.q_list.front();
  require_odd_prime_power(q);
  const std::size_t samples = c.samples == 0 ? 200 : c.samples;

  Report r;
  r.columns = {"check", "detail", "lhs", "rhs", "pass"};
  bool all = true;
  auto add = [&](const std::string& check, const std::string& detail, Cell lhs, Cell rhs, bool pass) {
    r.rows.push_back({s(check), s(detail), std::move(lhs), std::move(rhs), b(pass)});
    all = all && pass;
  };

  const auto group = cache.group(q);
  for (double k : c.k_list) {
    const std::string kd = "k=" + format_double(k);
    const auto ladder = ladder_for(c, q, k);
    std::string ell_text;
    for (u64 l : ladder.ell) ell_text += (ell_text.empty() ? "" : " ") + std::to_string(l);
    add("c_k", kd, d(ladder.c_k), d(ladder_c_k(k)), true);
    add("r_k", kd, u(ladder.r_k), u(ladder_r_k(k)), true);
    r.rows.push_back({s("ladder"), s(kd + " ell=" + ell_text), b(ladder.square_gap_holds), b(ladder.sum_condition_holds),
                      b(ladder.sum_condition_holds)});
    if (ladder.R() == 0) continue;

    const u64 reach = mollifier_reach(ladder);
    u64 need = 1000;
    for (const auto& seg : build_segments(q, ladder.ell).segments)
      if (!seg.empty()) need = std::max(need, seg.back());
    const bool diag = reach <= kMaxTauIndex;
    if (diag) need = std::max(need, reach);
    const auto table = table_for(cache, need);
    const Mollifier moll(table, ladder, poly_mode(c));

    for (std::size_t j = 0; j < ladder.R(); ++j) {
      const auto& seg = moll.segments().segments[j];
      std::string primes;
      for (u64 p : seg) primes += (primes.empty() ? "" : " ") + std::to_string(p);
      const auto sc = moll.segment_sum_checks()[j];
      r.rows.push_back({s("segment"), s(kd + " j=" + std::to_string(j + 1) + " primes=" + primes), d(sc.sum),
                        sc.skipped ? Cell{} : d(sc.upper), sc.skipped ? Cell{} : b(sc.pass)});
    }

    std::vector<double> alphas = c.alpha ? std::vector<double>{*c.alpha} : std::vector<double>{k - 1.0, k};
    const auto chars = group->primitive_characters();
    for (double alpha : alphas) {
      for (std::size_t j = 0; j < ladder.R(); ++j) {
        double worst = 0.0;
        for (const auto& chi : chars) {
          const cdouble e = moll.n_poly(chi, j, alpha, NPolyMode::exp);
          const cdouble dd = moll.n_poly(chi, j, alpha, NPolyMode::dirichlet);
          worst = std::max(worst, std::abs(e - dd) / std::max(1.0, std::abs(e)));
        }
        add("dual_representation", kd + " j=" + std::to_string(j + 1) + " alpha=" + format_double(alpha), d(worst),
            d(1e-10), worst <= 1e-10);
      }
    }
    if (diag) {
      const auto dc = diagonal_factorization_check(moll);
      add("diagonal_factorization", kd, d(dc.lhs), d(dc.rhs), dc.pass);
    } else {
      r.rows.push_back({s("diagonal_factorization"), s(kd + " skipped: support beyond table"), Cell{}, Cell{}, Cell{}});
    }
  }

  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst_ratio = 0.0;
  std::size_t passed = 0;
  for (std::size_t n = 0; n < samples; ++n) {
    const u64 K = 1 + rng() % 60;
    const double a = 2.0 * (1.0 - unif(rng));
    const double radius = unif(rng) * a * static_cast<double>(K) / 20.0;
    const auto e = ebound_check(K, std::polar(radius, 2.0 * M_PI * unif(rng)), a);
    passed += e.pass;
    worst_ratio = std::max(worst_ratio, e.error / e.bound);
  }
  add("ebound", std::to_string(passed) + "/" + std::to_string(samples) + " instances", d(worst_ratio), d(1.0),
      passed == samples);
  r.audits["all_pass"] = all;
  return r;
}

void audit_rows(Report& r, const InequalityAudit& a) {
  for (const auto& t : a.pointwise) {
    r.rows.push_back({u(a.q), d(a.k), s("pointwise"), s(t.name), u(t.checked), u(t.passed), Cell{}, Cell{},
                      d(t.min_log_margin), b(t.asserted), b(t.passed == t.checked)});
  }
  for (const auto& ch : a.chains) {
    r.rows.push_back({u(a.q), d(a.k), s("chain"), s(ch.name), u(1), u(ch.pass ? 1 : 0), d(ch.lhs_log), d(ch.rhs_log),
                      d(ch.rhs_log - ch.lhs_log), b(ch.asserted), b(ch.pass)});
  }
}

Report cmd_audit(const RunConfig& c, const Cache& cache) {
  if (c.q_list.empty()) throw ValidationError("audit needs --q");
  require_builtin_weight(c);
  for (u64 q : c.q_list) require_odd_prime_power(q);
  for (double k : c.k_list)
    if (!(k > 0.0)) throw ValidationError("audit needs k > 0");
  const auto w = cache.weights(c.kappa);
  u64 need = 0;
  for (u64 q : c.q_list) {
    need = std::max(need, family_reach(w, q, c));
    for (double k : c.k_list) {
      const u64 reach = mollifier_reach(ladder_for(c, q, k));
      if (reach <= kMaxTauIndex) need = std::max(need, reach);
    }
  }
  const auto table = table_for(cache, need);
  const auto families = build_families(cache, w, table, c);

  Report r;
  r.columns = {"q", "k", "kind", "name", "checked", "passed", "lhs", "rhs", "margin", "asserted", "pass"};
  bool all = true;
  json details = json::array();
  for (const auto& fam : families) {
    for (double k : c.k_list) {
      const auto ladder = ladder_for(c, fam.q(), k);
      const Mollifier moll(table, ladder, poly_mode(c));
      const auto a = holder_chain_audit(fam, moll);
      audit_rows(r, a);
      all = all && a.all_pass();

      const auto t = twisted_first_moment(fam, moll, true);
      const bool tw_pass = *t.rel_diff < 1e-8;
      r.rows.push_back({u(fam.q()), d(k), s("twisted"), s("brute_force_agreement"), u(1), u(tw_pass ? 1 : 0),
                        d(t.value.real()), d(t.brute->real()), d(*t.rel_diff), b(true), b(tw_pass)});
      all = all && tw_pass;

      json entry{{"q", fam.q()},
                 {"k", k},
                 {"twisted_re", t.value.real()},
                 {"twisted_im", t.value.imag()},
                 {"all_pass", a.all_pass() && tw_pass}};
      if (a.upper_principle_min) entry["upper_principle_min"] = *a.upper_principle_min;

      if (mollifier_reach(ladder) <= table->n_max()) {
        const auto dc = diagonal_factorization_check(moll);
        r.rows.push_back({u(fam.q()), d(k), s("diagonal"), s("factorization"), u(1), u(dc.pass ? 1 : 0), d(dc.lhs),
                          d(dc.rhs), d(dc.residual), b(true), b(dc.pass)});
        all = all && dc.pass;
        std::size_t lp = 0;
        for (const auto& l : dc.local) lp += l.pass;
        r.rows.push_back({u(fam.q()), d(k), s("diagonal"), s("local_factor"), u(dc.local.size()), u(lp), Cell{}, Cell{},
                          Cell{}, b(false), b(lp == dc.local.size())});
      }
      const auto p = prop56_quantities(fam, moll);
      entry["prop56"] = {{"scale", p.scale},
                         {"mollified_sq", finite_or_string(p.mollified_sq)},
                         {"guarded_sq", finite_or_string(p.guarded_sq)},
                         {"guard_product", finite_or_string(p.guard_product)},
                         {"guard_ladder", finite_or_string(p.guard_ladder)}};
      details.push_back(entry);
    }
  }
  const auto st = stirling_audit(170);
  r.rows.push_back({Cell{}, Cell{}, s("stirling"), s("lower"), u(st.n_max), u(st.lower_passed), Cell{}, Cell{}, Cell{},
                    b(true), b(st.lower_passed == st.n_max)});
  r.rows.push_back({Cell{}, Cell{}, s("stirling"), s("upper"), u(st.n_max), u(st.n_max - st.upper_failures.size()),
                    Cell{}, Cell{}, Cell{}, b(false), b(st.upper_failures.empty())});
  all = all && st.lower_passed == st.n_max;
  r.audits["details"] = details;
  r.audits["all_pass"] = all;
  r.trailer.push_back(std::string("# all_pass=") + (all ? "true" : "false"));
  return r;
}

Report cmd_fit(const RunConfig& c) {
  if (c.in.empty()) throw ValidationError("fit needs --in <moments csv>");
  std::ifstream in(c.in);
  if (!in) throw ValidationError("cannot open " + c.in);
  std::string line;
  std::vector<std::string> header;
  std::map<double, std::vector<MomentReport>> by_k;
  std::vector<double> order;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (header.empty()) {
      header = cells;
      continue;
    }
    auto col = [&](const std::string& name) {
      const auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) throw ValidationError("input lacks column '" + name + "'");
      const auto idx = static_cast<std::size_t>(it - header.begin());
      if (idx >= cells.size()) throw ValidationError("short row in " + c.in);
      return cells[idx];
    };
    MomentReport m;
    m.q = parse_u64(col("q"), "q");
    m.k = parse_double(col("k"), "k");
    m.normalized = parse_double(col("normalized"), "normalized");
    if (!by_k.count(m.k)) order.push_back(m.k);
    by_k[m.k].push_back(m);
  }
  if (header.empty()) throw ValidationError(c.in + " has no table");
  Report r;
  r.columns = {"k", "points", "slope", "intercept", "r_squared", "status"};
  for (double k : order) {
    auto reps = by_k[k];
    std::sort(reps.begin(), reps.end(), [](const auto& x, const auto& y) { return x.q < y.q; });
    const json f = fit_json(k, reps);
    if (f["status"] == "ok") {
      r.rows.push_back({d(k), u(reps.size()), d(f["slope"].get<double>()), d(f["intercept"].get<double>()),
                        d(f["r_squared"].get<double>()), s("ok")});
    } else {
      r.rows.push_back({d(k), u(reps.size()), Cell{}, Cell{}, Cell{}, s(f["status"].get<std::string>())});
    }
  }
  return r;
}

// ---------------------------------------------------------------- emission

std::string render(const RunConfig& c, const Report& r) {
  if (r.raw) return *r.raw;
  const json cfg = config_json(c);
  const std::string cfg_text = cfg.dump();
  const std::string hash = hex64(fnv1a64(cfg_text));
  if (c.format == "json") {
    json out;
    out["config"] = cfg;
    out["config_hash"] = hash;
    json rows = json::array();
    for (const auto& row : r.rows) {
      json o = json::object();
      for (std::size_t k = 0; k < r.columns.size(); ++k) o[r.columns[k]] = json_cell(row[k]);
      rows.push_back(o);
    }
    out["rows"] = rows;
    out["audits"] = r.audits;
    return out.dump(2) + "\n";
  }
  std::string text = "# config_hash=" + hash + " config=" + cfg_text + "\n";
  for (std::size_t k = 0; k < r.columns.size(); ++k) text += (k ? "," : "") + r.columns[k];
  text += "\n";
  for (const auto& row : r.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) text += (k ? "," : "") + csv_cell(row[k]);
    text += "\n";
  }
  for (const auto& t : r.trailer) text += t + "\n";
  if (!r.audits.empty()) text += "# audits=" + r.audits.dump() + "\n";
  return text;
}

// ---------------------------------------------------------------- flags

struct Flags {
  std::string q, q_list, k, k_list, ell, format, out, in, cache_dir, config, prime_poly;
  unsigned kappa = 12, N = 0, M = 0, workers = 1;
  double X = 1.0, tail_eps = 1e-8, alpha = 0.0;
  u64 seed = 0, n_max = 0;
  std::size_t audit_count = 8, samples = 0;
  bool fit = false;
};

struct Sub {
  CLI::App* app;
  std::vector<std::pair<std::string, CLI::Option*>> opts;
};

void add_flag(Sub& sub, Flags& f, const std::string& name) {
  CLI::App* a = sub.app;
  CLI::Option* o = nullptr;
  if (name == "q") o = a->add_option("--q", f.q, "modulus (comma list allowed)");
  else if (name == "q-list") o = a->add_option("--q-list", f.q_list, "comma-separated moduli");
  else if (name == "k") o = a->add_option("--k", f.k, "moment exponent (comma list allowed)");
  else if (name == "k-list") o = a->add_option("--k-list", f.k_list, "comma-separated exponents");
  else if (name == "kappa") o = a->add_option("--kappa", f.kappa, "weight of the form (default 12)");
  else if (name == "X") o = a->add_option("--X", f.X, "functional-equation balance (default 1)");
  else if (name == "tail-eps") o = a->add_option("--tail-eps", f.tail_eps, "weight tail tolerance (default 1e-8)");
  else if (name == "ell") o = a->add_option("--ell", f.ell, "ladder override, comma list (default 8,2)");
  else if (name == "N") o = a->add_option("--N", f.N, "ladder parameter N");
  else if (name == "M") o = a->add_option("--M", f.M, "ladder parameter M");
  else if (name == "prime-poly") o = a->add_option("--prime-poly", f.prime_poly, "weighted or unweighted");
  else if (name == "format") o = a->add_option("--format", f.format, "csv or json");
  else if (name == "out") o = a->add_option("--out", f.out, "output file (default stdout)");
  else if (name == "in") o = a->add_option("--in", f.in, "input file");
  else if (name == "cache-dir") o = a->add_option("--cache-dir", f.cache_dir, "cache directory");
  else if (name == "config") o = a->add_option("--config", f.config, "JSON config file");
  else if (name == "workers") o = a->add_option("--workers", f.workers, "worker threads");
  else if (name == "seed") o = a->add_option("--seed", f.seed, "seed for sampled audits");
  else if (name == "audit-count") o = a->add_option("--audit-count", f.audit_count, "characters per modulus with the |L|^2 cross-check");
  else if (name == "fit") o = a->add_flag("--fit", f.fit, "append the exponent fit");
  else if (name == "n-max") o = a->add_option("--n-max", f.n_max, "number of coefficients");
  else if (name == "alpha") o = a->add_option("--alpha", f.alpha, "single alpha for N_j(chi, alpha)");
  else if (name == "samples") o = a->add_option("--samples", f.samples, "sample count");
  else throw std::logic_error("unknown flag " + name);
  sub.opts.emplace_back(name, o);
}

void apply_flags(RunConfig& c, const Flags& f, const Sub& sub, std::set<std::string>& set_keys) {
  for (const auto& [name, o] : sub.opts) {
    if (o->count() == 0) continue;
    if (name == "q" || name == "q-list") {
      c.q_list = u64_list(name == "q" ? f.q : f.q_list, "--" + name);
      set_keys.insert("q");
    } else if (name == "k" || name == "k-list") {
      c.k_list = double_list(name == "k" ? f.k : f.k_list, "--" + name);
      set_keys.insert("k");
    } else if (name == "ell") {
      c.ell = u64_list(f.ell, "--ell");
      set_keys.insert("ell");
    } else if (name == "kappa") c.kappa = f.kappa;
    else if (name == "X") c.X = f.X;
    else if (name == "tail-eps") {
      c.tail_eps = f.tail_eps;
      set_keys.insert("tail_eps");
    }
    else if (name == "N") c.N = f.N;
    else if (name == "M") c.M = f.M;
    else if (name == "prime-poly") c.prime_poly = f.prime_poly;
    else if (name == "format") c.format = f.format;
    else if (name == "out") c.out = f.out;
    else if (name == "in") c.in = f.in;
    else if (name == "cache-dir") c.cache_dir = f.cache_dir;
    else if (name == "workers") {
      c.workers = f.workers;
      set_keys.insert("workers");
    }
    else if (name == "seed") c.seed = f.seed;
    else if (name == "audit-count") {
      c.audit_count = f.audit_count;
      set_keys.insert("audit_count");
    } else if (name == "fit") c.fit = f.fit;
    else if (name == "n-max") c.n_max = f.n_max;
    else if (name == "alpha") c.alpha = f.alpha;
    else if (name == "samples") {
      c.samples = f.samples;
      set_keys.insert("samples");
    }
  }
}

void apply_defaults(RunConfig& c, const std::set<std::string>& set_keys) {
  const bool has_k = set_keys.count("k") > 0;
  if (c.command == "sweep") {
    if (!set_keys.count("q")) c.q_list = kDefaultSweep;
    if (!has_k) c.k_list = {1.0};
    if (!set_keys.count("audit_count")) c.audit_count = 0;
    if (!set_keys.count("tail_eps")) c.tail_eps = 1e-6;
  } else if (c.command == "audit") {
    if (!has_k) c.k_list = {0.5, 2.0};
  } else if (c.command == "moments" || c.command == "mollifier-verify") {
    if (!has_k) c.k_list = {1.0};
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"central values and moments of twisted modular L-functions", "twistmom"};
  app.require_subcommand(1, 1);
  Flags f;
  std::map<std::string, Sub> subs;
  const std::vector<std::string> common = {"format", "out", "cache-dir", "config", "workers"};
  const std::map<std::string, std::pair<std::string, std::vector<std::string>>> commands = {
      {"tau", {"Ramanujan tau coefficients as n<TAB>tau(n) lines", {"n-max", "in"}}},
      {"chars", {"Dirichlet characters mod q with Gauss-sum data", {"q", "q-list", "kappa"}}},
      {"weights", {"W(x) and W2(x) on a log grid", {"kappa", "samples", "tail-eps"}}},
      {"lvalue",
       {"central values over the primitive family", {"q", "q-list", "kappa", "X", "tail-eps", "audit-count", "seed"}}},
      {"moments",
       {"family moments", {"q", "q-list", "k", "k-list", "kappa", "X", "tail-eps", "audit-count", "seed"}}},
      {"sweep",
       {"moments over many moduli", {"q", "q-list", "k", "k-list", "kappa", "X", "tail-eps", "audit-count", "seed", "fit"}}},
      {"mollifier-verify",
       {"mollifier identities and bounds", {"q", "ell", "N", "M", "k", "k-list", "alpha", "samples", "seed", "prime-poly"}}},
      {"audit",
       {"pointwise and Hölder inequality audits",
        {"q", "q-list", "k", "k-list", "ell", "N", "M", "kappa", "X", "tail-eps", "audit-count", "seed", "prime-poly"}}},
      {"fit", {"exponent fit of a moments table", {"in"}}},
  };
  for (const auto& [name, desc] : commands) {
    Sub sub{app.add_subcommand(name, desc.first), {}};
    for (const auto& flag : desc.second) add_flag(sub, f, flag);
    for (const auto& flag : common) add_flag(sub, f, flag);
    subs.emplace(name, std::move(sub));
  }

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    const CLI::App* shown = &app;
    for (const auto& [name, sub] : subs)
      if (sub.app->parsed()) shown = sub.app;
    err << shown->help();
    return kExitValidation;
  }

  RunConfig c;
  std::set<std::string> set_keys;
  const Sub* chosen = nullptr;
  for (const auto& [name, sub] : subs) {
    if (sub.app->parsed()) {
      c.command = name;
      chosen = &sub;
    }
  }
  try {
    for (const auto& [name, o] : chosen->opts)
      if (name == "config" && o->count() > 0) apply_config_file(c, f.config, set_keys);
    apply_flags(c, f, *chosen, set_keys);
    if (!set_keys.count("workers")) c.workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
    apply_defaults(c, set_keys);
    validate(c);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    const Cache cache(c.cache_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(c.cache_dir));
    Report report;
    if (c.command == "tau") report = cmd_tau(c);
    else if (c.command == "chars") report = cmd_chars(c);
    else if (c.command == "weights") report = cmd_weights(c, cache);
    else if (c.command == "lvalue") report = cmd_lvalue(c, cache);
    else if (c.command == "moments") report = cmd_moments(c, cache, false);
    else if (c.command == "sweep") report = cmd_moments(c, cache, true);
    else if (c.command == "mollifier-verify") report = cmd_mollifier_verify(c, cache);
    else if (c.command == "audit") report = cmd_audit(c, cache);
    else if (c.command == "fit") report = cmd_fit(c);
    const std::string text = render(c, report);
    if (c.out.empty()) {
      out << text;
    } else {
      atomic_write(c.out, text);
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "computation failed: " << e.what() << "\n";
    return kExitComputation;
  }
  return kExitOk;
}

int main_entry(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace twistmom::cli

#include "twistmom/cache.hpp"

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace twistmom {

namespace {

constexpr const char* kFormatVersion = "v1";

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string weight_key(WeightKind kind, unsigned kappa, const QuadratureParams& p, std::size_t points, double lo,
                       double hi) {
  std::ostringstream k;
  k << kFormatVersion << " weight kind=" << (kind == WeightKind::W ? "W" : "W2") << " kappa=" << kappa
    << " c=" << hexfloat(p.c) << " T=" << hexfloat(p.T) << " h=" << hexfloat(p.h) << " points=" << points
    << " lo=" << hexfloat(lo) << " hi=" << hexfloat(hi);
  return k.str();
}

}  // namespace

u64 fnv1a64(std::string_view data) {
  u64 h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(u64 value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Cache::Cache(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {
  if (dir_) std::filesystem::create_directories(*dir_);
}

std::filesystem::path Cache::entry_path(std::string_view prefix, std::string_view key, std::string_view ext) const {
  if (!dir_) throw std::logic_error("cache has no directory");
  return *dir_ / (std::string(prefix) + "-" + hex64(fnv1a64(key)) + std::string(ext));
}

std::shared_ptr<const EigenformTable> Cache::tau_table(u64 n_max) const {
  if (!dir_) return std::make_shared<const EigenformTable>(EigenformTable::builtin_delta(n_max));
  const std::string key = std::string(kFormatVersion) + " tau n_max=" + std::to_string(n_max);
  const auto path = entry_path("tau", key, ".tsv");
  if (std::filesystem::exists(path)) {
    try {
      auto tau = read_integer_coefficient_file(path);
      if (tau.size() == n_max + 1) return std::make_shared<const EigenformTable>(EigenformTable::from_tau(std::move(tau)));
    } catch (const std::exception&) {
      // unreadable or inconsistent entry: regenerate below
    }
  }
  auto tau = ramanujan_tau_table(n_max);
  write_coefficient_file(path, tau);
  return std::make_shared<const EigenformTable>(EigenformTable::from_tau(std::move(tau)));
}

GroupPtr Cache::group(u64 q) const {
  if (!dir_) return CharacterGroup::build(q);
  const std::string key = std::string(kFormatVersion) + " dlog q=" + std::to_string(q);
  const auto path = entry_path("dlog", key, ".tsv");
  if (std::filesystem::exists(path)) {
    try {
      return CharacterGroup::from_dlog_table(q, read_dlog_table(path));
    } catch (const std::exception&) {
    }
  }
  auto g = CharacterGroup::build(q);
  if (g->is_cyclic()) write_dlog_table(*g, path);
  return g;
}

std::shared_ptr<WeightEvaluator> Cache::weight(WeightKind kind, unsigned kappa) const {
  auto ev = std::make_shared<WeightEvaluator>(kind, kappa);
  constexpr std::size_t kPoints = 2048;
  constexpr double kLo = 1e-8, kHi = 1e6;
  if (!dir_) {
    ev->attach_grid(kPoints, kLo, kHi);
    return ev;
  }
  const std::string key = weight_key(kind, kappa, ev->params(), kPoints, kLo, kHi);
  const auto path = entry_path(kind == WeightKind::W ? "grid-W" : "grid-W2", key, ".txt");
  if (std::filesystem::exists(path)) {
    try {
      std::istringstream in(read_all(path));
      std::string stored_key;
      std::getline(in, stored_key);
      if (stored_key != key) throw std::runtime_error("grid cache key mismatch");
      std::vector<double> v(kPoints), s(kPoints), c(kPoints);
      for (std::size_t i = 0; i < kPoints; ++i) {
        std::string a, b, d;
        if (!(in >> a >> b >> d)) throw std::runtime_error("truncated grid cache");
        v[i] = std::strtod(a.c_str(), nullptr);
        s[i] = std::strtod(b.c_str(), nullptr);
        c[i] = std::strtod(d.c_str(), nullptr);
      }
      ev->attach_grid(kLo, kHi, std::move(v), std::move(s), std::move(c));
      return ev;
    } catch (const std::exception&) {
      ev = std::make_shared<WeightEvaluator>(kind, kappa);
    }
  }
  ev->attach_grid(kPoints, kLo, kHi);
  std::string out = key + "\n";
  for (std::size_t i = 0; i < ev->grid_values().size(); ++i) {
    out += hexfloat(ev->grid_values()[i]) + " " + hexfloat(ev->grid_slopes()[i]) + " " +
           hexfloat(ev->grid_curvatures()[i]) + "\n";
  }
  atomic_write(path, out);
  return ev;
}

WeightPair Cache::weights(unsigned kappa) const { return {weight(WeightKind::W, kappa), weight(WeightKind::W2, kappa)}; }

}  // namespace twistmom

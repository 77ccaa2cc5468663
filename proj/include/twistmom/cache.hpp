#pragma once

// Content-addressed on-disk caches for tau tables, dlog tables and weight grids.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "twistmom/characters.hpp"
#include "twistmom/hecke.hpp"
#include "twistmom/lvalues.hpp"

namespace twistmom {

/// 64-bit FNV-1a.
u64 fnv1a64(std::string_view data);
/// 16 lowercase hex digits.
std::string hex64(u64 value);

/// Writes `content` to a sibling temp file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);

/// Without a directory every request is computed fresh; with one, results are read back when present.
class Cache {
public:
  explicit Cache(std::optional<std::filesystem::path> dir = std::nullopt);

  const std::optional<std::filesystem::path>& dir() const { return dir_; }

  std::shared_ptr<const EigenformTable> tau_table(u64 n_max) const;
  GroupPtr group(u64 q) const;
  WeightPair weights(unsigned kappa) const;

  /// File that stores the entry with generation key `key`.
  std::filesystem::path entry_path(std::string_view prefix, std::string_view key, std::string_view ext) const;

private:
  std::shared_ptr<WeightEvaluator> weight(WeightKind kind, unsigned kappa) const;

  std::optional<std::filesystem::path> dir_;
};

}  // namespace twistmom

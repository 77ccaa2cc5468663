#pragma once

// Hecke eigenvalues of the fixed level-1 eigenform and related prime sums.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "twistmom/arith.hpp"

namespace twistmom {

using i128 = __int128;

/// Largest n_max for which the CRT reconstruction of tau(n) is guaranteed
/// unambiguous (|tau(n)| <= d(n) n^{11/2} stays below half the CRT modulus).
inline constexpr u64 kMaxTauIndex = 1'500'000;

/// Integer coefficients tau(1..n_max) of Delta = x prod (1 - x^n)^24; index 0 is unused (0).
std::vector<i128> ramanujan_tau_table(u64 n_max);

std::string to_string(i128 v);
i128 parse_i128(const std::string& text);

enum class EigenformSource { builtin_delta, file };

class EigenformTable {
public:
  /// Delta (weight 12) with lambda(n) = tau(n) / n^{11/2}.
  static EigenformTable builtin_delta(u64 n_max);
  /// Delta from precomputed tau(0..n_max) (index 0 ignored), e.g. a cached table.
  static EigenformTable from_tau(std::vector<i128> tau);
  /// Coefficients a(n) for n = 1..n_max of a weight-kappa form, normalised by n^{(kappa-1)/2}.
  static EigenformTable from_coefficients(unsigned weight, const std::vector<long double>& coeffs,
                                          EigenformSource source = EigenformSource::file);
  /// Reads an "n<TAB>a(n)" file (ascending n starting at 1, no header).
  static EigenformTable from_file(const std::filesystem::path& path, unsigned weight);

  unsigned weight() const { return weight_; }
  u64 n_max() const { return lambda_.size() - 1; }
  EigenformSource source() const { return source_; }

  /// Normalised eigenvalue; n must lie in [1, n_max].
  double lambda(u64 n) const { return lambda_[n]; }
  const std::vector<double>& lambdas() const { return lambda_; }
  /// Exact integer coefficients when the table came from integer data.
  const std::optional<std::vector<i128>>& exact() const { return exact_; }

private:
  EigenformTable() = default;
  void validate() const;

  unsigned weight_ = 12;
  EigenformSource source_ = EigenformSource::builtin_delta;
  std::vector<double> lambda_;
  std::optional<std::vector<i128>> exact_;
};

/// Writes tau-style coefficients (index 1..) as "n<TAB>value" lines via a temp file and rename.
void write_coefficient_file(const std::filesystem::path& path, const std::vector<i128>& coeffs);
/// Reads an integer coefficient file; result is indexed from 1 (index 0 is 0).
std::vector<i128> read_integer_coefficient_file(const std::filesystem::path& path);

/// Completely multiplicative extension: prod lambda(p)^a over n = prod p^a.
double lambda_tilde(const EigenformTable& table, u64 n);

/// sum_{p <= x} lambda(p)^2 / p.
double rankin_prime_sum(const EigenformTable& table, double x);

/// sum_{p <= x} log(p) / p.
double mertens_log_sum(double x);

}  // namespace twistmom

#pragma once

// Command-line front end: tau, chars, weights, lvalue, moments, sweep,
// mollifier-verify, audit and fit.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "twistmom/arith.hpp"

namespace twistmom::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitComputation = 2;

/// Resolved configuration. Defaults, then --config file values, then explicit flags.
struct RunConfig {
  std::string command;
  std::vector<u64> q_list;
  std::vector<double> k_list;
  unsigned kappa = 12;
  double X = 1.0;
  double tail_eps = 1e-8;
  std::vector<u64> ell;
  std::optional<unsigned> N;
  std::optional<unsigned> M;
  std::string prime_poly = "weighted";
  std::string format = "csv";
  std::string out;
  std::string in;
  std::string cache_dir;
  unsigned workers = 1;
  u64 seed = 0;
  std::size_t audit_count = 8;
  bool fit = false;
  u64 n_max = 0;
  std::optional<double> alpha;
  std::size_t samples = 0;
};

/// Runs one subcommand; args exclude the program name. Returns 0, 1 (validation) or 2 (computation).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main_entry(int argc, char** argv);

}  // namespace twistmom::cli

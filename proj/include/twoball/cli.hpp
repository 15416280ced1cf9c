#pragma once

// Command-line front end: run configuration, config files and subcommand dispatch.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "twoball/dynamics.hpp"
#include "twoball/group.hpp"

namespace twoball::cli {

enum class Format { Csv, Json };

struct RunConfig {
  std::optional<PolygonId> polygon;
  double radius = 0.1;
  std::uint64_t seed = 1;
  std::optional<std::size_t> events;  // default depends on the subcommand
  std::optional<double> time;
  std::string out;  // empty: data goes to stdout for `simulate`, nowhere otherwise
  Format format = Format::Csv;

  std::size_t window = 3;         // suff: islands per sliding window
  std::size_t seeds = 10;         // ergodicity: seeds seed, seed+1, ...
  int bins = 8;                   // ergodicity: occupancy bins per axis
  std::size_t batches = 20;       // lyapunov, ergodicity
  std::size_t renorm_every = 10;  // lyapunov
  double delta0 = 1e-9;           // lyapunov

  Tolerances tol;
  double tol_neutral = 1e-8;     // relative singular-value threshold
  double tol_semiconj = 1e-6;    // lift-check: max semi-conjugacy deviation
  double tol_conformity = 0.99;  // suff: minimum conforming fraction per class
};

/// Keys accepted in config files; the same names are long flags.
const std::vector<std::string>& config_keys();

/// Closest key by edit distance.
std::string nearest_key(std::string_view key);

/// Throws UnknownKey (naming the nearest key) or InvalidArgument for a bad value.
void set_key(RunConfig& cfg, std::string_view key, std::string_view value);

/// Flat `key = value` lines; `#` starts a comment. Throws ParseError with the
/// line number for malformed lines or values, UnknownKey for unknown keys.
RunConfig load_config(const std::string& path);
RunConfig parse_config(std::istream& in, RunConfig base = {});

/// Full command line without the program name. Returns the exit code:
/// 0 success, 1 validation error, 2 verification failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace twoball::cli

#ifndef NPMD_SCHEDULE_HPP
#define NPMD_SCHEDULE_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace npmd {

/// A schedule c * n^p. The text grammar is a '*'-separated product of
/// factors, each a number, "n", or "n^<number>" (e.g. "0.5*n^-0.25").
struct Schedule {
  double coefficient = 1.0;
  double exponent = 0.0;

  double operator()(double n) const;
  // Canonical text form; parse(to_string()) reproduces the schedule exactly.
  std::string to_string() const;
  static Schedule parse(std::string_view text);
  static Schedule constant(double v) { return {v, 0.0}; }

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

/// "a:b:log" (one point per decade), "a:b:log:k" (k points per decade),
/// "a:b:lin:step", or a comma-separated list. Values must be positive
/// integers; scientific notation ("1e6") is accepted.
std::vector<std::int64_t> parse_n_grid(std::string_view text);

/// Shortest round-trip decimal form of v.
std::string format_double(double v);

}  // namespace npmd

#endif  // NPMD_SCHEDULE_HPP

#include "npmd/schedule.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "npmd/errors.hpp"

namespace npmd {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double Schedule::operator()(double n) const {
  return exponent == 0.0 ? coefficient : coefficient * std::pow(n, exponent);
}

std::string Schedule::to_string() const {
  if (exponent == 0.0) return format_double(coefficient);
  const std::string pow = "n^" + format_double(exponent);
  if (coefficient == 1.0) return pow;
  return format_double(coefficient) + "*" + pow;
}

namespace {

std::string strip_spaces(std::string_view text) {
  std::string out;
  for (char ch : text) {
    if (ch != ' ' && ch != '\t') out.push_back(ch);
  }
  return out;
}

double parse_number(std::string_view s, std::string_view context) {
  if (!s.empty() && s.front() == '(' && s.back() == ')') {
    s = s.substr(1, s.size() - 2);
  }
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError("cannot parse number '" + std::string(s) + "' in '" +
                      std::string(context) + "'");
  }
  return v;
}

}  // namespace

Schedule Schedule::parse(std::string_view text) {
  const std::string src = strip_spaces(text);
  if (src.empty()) throw ConfigError("empty schedule expression");
  Schedule out;
  std::size_t pos = 0;
  while (pos <= src.size()) {
    const std::size_t star = src.find('*', pos);
    const std::string_view factor =
        std::string_view(src).substr(pos, star == std::string::npos ? std::string::npos
                                                                    : star - pos);
    if (factor.empty()) {
      throw ConfigError("empty factor in schedule '" + src + "'");
    }
    if (factor == "n") {
      out.exponent += 1.0;
    } else if (factor.starts_with("n^")) {
      out.exponent += parse_number(factor.substr(2), src);
    } else {
      out.coefficient *= parse_number(factor, src);
    }
    if (star == std::string::npos) break;
    pos = star + 1;
  }
  return out;
}

std::vector<std::int64_t> parse_n_grid(std::string_view text) {
  const std::string src = strip_spaces(text);
  if (src.empty()) throw ConfigError("empty n grid");

  const auto as_count = [&src](double v) {
    if (!(v >= 1.0) || v != std::floor(v) || v > 9.0e18) {
      throw ConfigError("n grid '" + src + "' has a value that is not a "
                        "positive integer");
    }
    return static_cast<std::int64_t>(v);
  };

  std::vector<std::string_view> parts;
  const char sep = src.find(':') != std::string::npos ? ':' : ',';
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = src.find(sep, pos);
    parts.push_back(std::string_view(src).substr(
        pos, next == std::string::npos ? std::string::npos : next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }

  std::vector<std::int64_t> grid;
  if (sep == ',') {
    for (auto p : parts) grid.push_back(as_count(parse_number(p, src)));
  } else {
    if (parts.size() < 3 || parts.size() > 4) {
      throw ConfigError("range grid must be a:b:log[:k] or a:b:lin:step, got '" +
                        src + "'");
    }
    const double lo = parse_number(parts[0], src);
    const double hi = parse_number(parts[1], src);
    as_count(lo);
    as_count(hi);
    if (!(lo <= hi)) throw ConfigError("n grid range must be increasing");
    if (parts[2] == "log") {
      const double per_decade = parts.size() == 4 ? parse_number(parts[3], src) : 1.0;
      if (!(per_decade >= 1.0)) throw ConfigError("points per decade must be >= 1");
      const double span = std::log10(hi / lo);
      const auto steps = static_cast<long>(std::floor(span * per_decade + 1e-9));
      std::set<std::int64_t> seen;
      for (long i = 0; i <= steps; ++i) {
        const double v = std::round(lo * std::pow(10.0, i / per_decade));
        seen.insert(as_count(v));
      }
      grid.assign(seen.begin(), seen.end());
    } else if (parts[2] == "lin") {
      const double step = parts.size() == 4 ? parse_number(parts[3], src) : 1.0;
      if (!(step >= 1.0)) throw ConfigError("linear grid step must be >= 1");
      for (double v = lo; v <= hi + 0.5; v += step) grid.push_back(as_count(v));
    } else {
      throw ConfigError("unknown grid spacing '" + std::string(parts[2]) + "'");
    }
  }
  if (!std::is_sorted(grid.begin(), grid.end()) ||
      std::adjacent_find(grid.begin(), grid.end()) != grid.end()) {
    throw ConfigError("n grid must be strictly increasing");
  }
  return grid;
}

}  // namespace npmd

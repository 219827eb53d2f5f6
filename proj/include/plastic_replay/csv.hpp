#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "plastic_replay/agent.hpp"
#include "plastic_replay/error.hpp"

namespace plastic_replay::csv {

inline constexpr std::string_view kMetricsHeader =
    "global_step,episode_return,grad_l1,grama_inactive_frac,sampler,seed";

/// Shortest representation that parses back to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

/// Quotes a field when it contains a comma, quote or line break.
inline std::string quote_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_metrics(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << kMetricsHeader << '\n';
  for (const auto& r : rows)
    os << r.global_step << ',' << format_double(r.episode_return) << ','
       << format_double(r.grad_l1) << ',' << format_double(r.grama_inactive_frac) << ','
       << quote_field(r.sampler) << ',' << r.seed << '\n';
}

inline void write_metrics_file(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open " + path + " for writing");
  write_metrics(os, rows);
  if (!os) throw InputError("write to " + path + " failed");
}

/// Splits one record into fields, honoring double-quoted fields.
inline std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field");
  return fields;
}

inline double parse_double(std::string_view s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("not a number: '" + std::string(s) + "'");
  return x;
}

inline std::uint64_t parse_uint(std::string_view s) {
  std::uint64_t x = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("not a non-negative integer: '" + std::string(s) + "'");
  return x;
}

/// Reads a metrics CSV; malformed content raises InputError naming the
/// source and line.
inline std::vector<MetricsRow> read_metrics(std::istream& is, const std::string& source) {
  std::vector<MetricsRow> rows;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) {
    throw InputError(source + ":" + std::to_string(lineno) + ": " + what);
  };
  if (!std::getline(is, line)) {
    lineno = 1;
    fail("empty file");
  }
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsHeader) fail("unexpected header '" + line + "'");
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      const auto f = split_record(line);
      if (f.size() != 6) fail("expected 6 fields, found " + std::to_string(f.size()));
      MetricsRow r;
      r.global_step = parse_uint(f[0]);
      r.episode_return = parse_double(f[1]);
      r.grad_l1 = parse_double(f[2]);
      r.grama_inactive_frac = parse_double(f[3]);
      r.sampler = f[4];
      r.seed = parse_uint(f[5]);
      rows.push_back(std::move(r));
    } catch (const ParseError& e) {
      fail(e.what());
    }
  }
  return rows;
}

inline std::vector<MetricsRow> read_metrics_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path);
  return read_metrics(is, path);
}

}  // namespace plastic_replay::csv

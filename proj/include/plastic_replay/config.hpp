#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "plastic_replay/agent.hpp"
#include "plastic_replay/csv.hpp"
#include "plastic_replay/envs/chain.hpp"
#include "plastic_replay/error.hpp"
#include "plastic_replay/samplers.hpp"

namespace plastic_replay {

/// Settings of a `train` invocation: one agent run per (sampler, seed).
struct RunConfig {
  std::string experiment = "chain";
  std::string out_dir = "out";
  std::uint64_t total_steps = 20'000;
  std::vector<SamplerKind> samplers{SamplerKind::swd, SamplerKind::uniform, SamplerKind::swa};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  envs::NonstationaryChain env;
  AgentConfig agent;

  void validate() const {
    if (experiment.empty() || experiment.find('/') != std::string::npos)
      throw ConfigError("experiment must be a non-empty name without '/'");
    if (total_steps == 0) throw ConfigError("total_steps must be positive");
    if (samplers.empty()) throw ConfigError("samplers must list at least one sampler");
    if (seeds.empty()) throw ConfigError("seeds must list at least one seed");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
      throw ConfigError("seeds must be distinct");
    if (std::set<SamplerKind>(samplers.begin(), samplers.end()).size() != samplers.size())
      throw ConfigError("samplers must be distinct");
    env.validate();
    agent.validate();
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    std::string item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v, auto&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += fmt(v[i]);
  }
  return out;
}

struct ConfigKey {
  std::string_view name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline std::string fmt_u(std::uint64_t x) { return std::to_string(x); }

inline const std::vector<ConfigKey>& config_keys() {
  using csv::format_double;
  using csv::parse_double;
  using csv::parse_uint;
#define PR_UINT(key, field)                                                      \
  ConfigKey{key, [](RunConfig& c, const std::string& v) { c.field = parse_uint(v); }, \
            [](const RunConfig& c) { return fmt_u(c.field); }}
#define PR_REAL(key, field)                                                        \
  ConfigKey{key, [](RunConfig& c, const std::string& v) { c.field = parse_double(v); }, \
            [](const RunConfig& c) { return format_double(c.field); }}
  static const std::vector<ConfigKey> keys{
      ConfigKey{"experiment", [](RunConfig& c, const std::string& v) { c.experiment = v; },
                [](const RunConfig& c) { return c.experiment; }},
      ConfigKey{"out_dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; },
                [](const RunConfig& c) { return c.out_dir; }},
      PR_UINT("total_steps", total_steps),
      ConfigKey{"samplers",
                [](RunConfig& c, const std::string& v) {
                  c.samplers.clear();
                  for (const auto& item : split_list(v)) {
                    const auto k = parse_sampler_kind(item);
                    if (!k) throw ParseError("unknown sampler '" + item + "'");
                    c.samplers.push_back(*k);
                  }
                },
                [](const RunConfig& c) {
                  return join(c.samplers, [](SamplerKind k) { return std::string(to_string(k)); });
                }},
      ConfigKey{"seeds",
                [](RunConfig& c, const std::string& v) {
                  c.seeds.clear();
                  for (const auto& item : split_list(v)) c.seeds.push_back(parse_uint(item));
                },
                [](const RunConfig& c) { return join(c.seeds, fmt_u); }},
      PR_UINT("chain_length", env.length),
      PR_UINT("shift_step", env.shift_step),
      PR_UINT("max_episode_steps", env.max_episode_steps),
      PR_REAL("gamma", agent.gamma),
      PR_UINT("batch_size", agent.batch_size),
      PR_UINT("learning_starts", agent.learning_starts),
      PR_UINT("train_frequency", agent.train_frequency),
      PR_UINT("target_update_interval", agent.target_update_interval),
      PR_UINT("utd", agent.utd),
      PR_REAL("epsilon_start", agent.epsilon.start),
      PR_REAL("epsilon_end", agent.epsilon.end),
      PR_REAL("epsilon_fraction", agent.epsilon.fraction),
      PR_UINT("buffer_capacity", agent.buffer_capacity),
      ConfigKey{"hidden",
                [](RunConfig& c, const std::string& v) {
                  c.agent.hidden.clear();
                  for (const auto& item : split_list(v)) c.agent.hidden.push_back(parse_uint(item));
                },
                [](const RunConfig& c) {
                  return join(c.agent.hidden, [](std::size_t x) { return std::to_string(x); });
                }},
      PR_REAL("learning_rate", agent.learning_rate),
      PR_UINT("log_interval", agent.log_interval),
      PR_UINT("grama_batch", agent.grama_batch),
      PR_REAL("grama_tau", agent.grama_tau),
      PR_UINT("decay_steps", agent.sampler.decay_steps),
      PR_REAL("min_weight", agent.sampler.min_weight),
      PR_REAL("tau", agent.sampler.tau),
      PR_REAL("power", agent.sampler.power),
      PR_UINT("buckets", agent.sampler.buckets),
      PR_REAL("per_alpha", agent.sampler.per.alpha),
      PR_REAL("per_beta", agent.sampler.per.beta),
      PR_REAL("per_beta_increment", agent.sampler.per.beta_increment),
      PR_REAL("per_epsilon", agent.sampler.per.epsilon),
  };
#undef PR_UINT
#undef PR_REAL
  return keys;
}

}  // namespace detail

/// Sets one key; unknown keys and unparsable values raise ParseError
/// naming the key.
inline void apply_setting(RunConfig& cfg, std::string_view key, const std::string& value) {
  for (const auto& k : detail::config_keys()) {
    if (k.name != key) continue;
    try {
      k.set(cfg, value);
    } catch (const ParseError& e) {
      throw ParseError("invalid value for key '" + std::string(key) + "': " + e.what());
    }
    return;
  }
  throw ParseError("unknown configuration key '" + std::string(key) + "'");
}

/// `key = value` lines; blank lines and lines starting with '#' are skipped.
inline void apply_config_text(RunConfig& cfg, std::istream& is, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    apply_setting(cfg, detail::trim(std::string_view(t).substr(0, eq)),
                  detail::trim(std::string_view(t).substr(eq + 1)));
  }
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open config " + path);
  RunConfig cfg;
  apply_config_text(cfg, is, path);
  return cfg;
}

/// Every key with its current value, one `key = value` line each, in a
/// fixed order.
inline std::string describe(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : detail::config_keys()) {
    out += k.name;
    out += " = ";
    out += k.get(cfg);
    out += '\n';
  }
  return out;
}

}  // namespace plastic_replay

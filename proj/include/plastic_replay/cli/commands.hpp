#pragma once

#include <glob.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "plastic_replay/agent.hpp"
#include "plastic_replay/bucket_index.hpp"
#include "plastic_replay/cli/verify.hpp"
#include "plastic_replay/config.hpp"
#include "plastic_replay/csv.hpp"
#include "plastic_replay/decay.hpp"
#include "plastic_replay/error.hpp"
#include "plastic_replay/replay_buffer.hpp"
#include "plastic_replay/rng.hpp"
#include "plastic_replay/sampling.hpp"
#include "plastic_replay/stats.hpp"

namespace plastic_replay::cli {

namespace detail {

inline std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

inline std::string sci(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

/// Worker count: PLASTIC_REPLAY_THREADS if set and positive, else the
/// hardware concurrency; never more than `jobs`.
inline std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PLASTIC_REPLAY_THREADS")) {
    try {
      const auto v = csv::parse_uint(env);
      if (v > 0) n = v;
    } catch (const ParseError&) {
      throw ConfigError("PLASTIC_REPLAY_THREADS must be a positive integer");
    }
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

}  // namespace detail

inline int cmd_verify(const VerifyOptions& opts, std::ostream& os) {
  const auto results = run_verify_suite(opts);
  bool all = true;
  os << "result  check                                        worst       time\n";
  for (const auto& r : results) {
    all = all && r.passed;
    std::string name = r.name;
    name.resize(std::max<std::size_t>(name.size(), 44), ' ');
    std::string worst = detail::sci(r.residual);
    worst.resize(std::max<std::size_t>(worst.size(), 10), ' ');
    os << (r.passed ? "PASS    " : "FAIL    ") << name << ' ' << worst << "  "
       << detail::fixed(r.seconds, 2) << "s\n";
    if (!r.passed) os << "        " << r.detail << '\n';
  }
  os << (all ? "all checks passed\n" : "some checks FAILED\n");
  return all ? 0 : 1;
}

/// Output file of one (sampler, seed) cell.
inline std::filesystem::path run_csv_path(const RunConfig& cfg, SamplerKind kind,
                                          std::uint64_t seed) {
  return std::filesystem::path(cfg.out_dir) / cfg.experiment /
         (std::string(to_string(kind)) + "_" + std::to_string(seed) + ".csv");
}

/// Runs every (sampler, seed) cell, possibly in parallel, and writes one
/// CSV per cell plus manifest.txt.
inline int cmd_train(const RunConfig& cfg, std::ostream& os) {
  cfg.validate();
  const std::filesystem::path dir = std::filesystem::path(cfg.out_dir) / cfg.experiment;
  std::filesystem::create_directories(dir);

  struct Cell {
    SamplerKind kind;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (SamplerKind k : cfg.samplers)
    for (std::uint64_t s : cfg.seeds) cells.push_back({k, s});

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        AgentConfig agent = cfg.agent;
        agent.sampler.kind = cells[i].kind;
        agent.seed = cells[i].seed;
        const RunResult r = run(agent, cfg.env, cfg.total_steps);
        csv::write_metrics_file(run_csv_path(cfg, cells[i].kind, cells[i].seed).string(), r.rows);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t workers = detail::worker_count(cells.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::ofstream manifest(dir / "manifest.txt", std::ios::binary);
  if (!manifest) throw InputError("cannot write " + (dir / "manifest.txt").string());
  manifest << "# configuration\n" << describe(cfg) << "# runs\n";
  for (const Cell& c : cells)
    manifest << run_csv_path(cfg, c.kind, c.seed).filename().string() << " sampler="
             << to_string(c.kind) << " seed=" << c.seed << '\n';
  os << "wrote " << cells.size() << " runs to " << dir.string() << '\n';
  return 0;
}

struct BenchOptions {
  std::size_t n = 1'000'000;
  std::size_t buckets = 2000;
  std::size_t batch = 256;
  std::size_t reps = 20;
  std::uint64_t seed = 0;
  std::string csv_path;  // empty: no file
};

struct BenchReport {
  double exact_weight_ms = 0.0;
  double bucketed_weight_ms = 0.0;
  double exact_total_ms = 0.0;
  double bucketed_total_ms = 0.0;
  double weight_speedup() const { return exact_weight_ms / bucketed_weight_ms; }
  double total_speedup() const { return exact_total_ms / bucketed_total_ms; }
};

namespace detail {

struct Stamp {
  std::uint64_t timestamp = 0;
};

}  // namespace detail

/// Mean per-batch time of exact and bucketed SWD sampling over `reps`
/// repetitions. The weight phase is the O(N) weights plus prefix sums for
/// the exact sampler and the O(B) median-weight rebuild for the bucketed one.
inline BenchReport run_bench(const BenchOptions& o) {
  if (o.n == 0 || o.buckets == 0 || o.buckets > o.n)
    throw ConfigError("bench needs N >= B >= 1");
  if (o.batch == 0 || o.reps == 0) throw ConfigError("bench needs positive batch and reps");
  ReplayBuffer<detail::Stamp> buffer(o.n);
  for (std::size_t i = 0; i < o.n; ++i) buffer.push({i});
  const BufferView view = buffer.view();
  const DecaySchedule schedule;
  Rng rng = make_rng(o.seed, "bench");

  using clock = std::chrono::steady_clock;
  auto ms = [](clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };
  BenchReport r;
  std::vector<double> scratch;
  std::size_t checksum = 0;
  for (std::size_t rep = 0; rep < o.reps; ++rep) {
    auto t0 = clock::now();
    compute_weights(view, schedule, scratch);
    for (std::size_t i = 1; i < scratch.size(); ++i) scratch[i] += scratch[i - 1];
    auto t1 = clock::now();
    const double total = scratch.back();
    for (std::size_t b = 0; b < o.batch; ++b)
      checksum += view.physical(find_in_prefix(scratch, uniform01(rng) * total));
    auto t2 = clock::now();
    r.exact_weight_ms += ms(t1 - t0);
    r.exact_total_ms += ms(t2 - t0);

    t0 = clock::now();
    const BucketIndex idx = bucket_rebuild(view, schedule, o.buckets);
    t1 = clock::now();
    for (std::size_t slot : sample_batch_bucketed(idx, view, o.batch, rng)) checksum += slot;
    t2 = clock::now();
    r.bucketed_weight_ms += ms(t1 - t0);
    r.bucketed_total_ms += ms(t2 - t0);
  }
  const double reps = static_cast<double>(o.reps);
  r.exact_weight_ms /= reps;
  r.exact_total_ms /= reps;
  r.bucketed_weight_ms /= reps;
  r.bucketed_total_ms /= reps;
  // Keeps the sampling loops observable.
  if (checksum == static_cast<std::size_t>(-1)) r.exact_total_ms += 1.0;
  return r;
}

inline int cmd_bench(const BenchOptions& o, std::ostream& os) {
  const BenchReport r = run_bench(o);
  os << "N=" << o.n << " B=" << o.buckets << " batch=" << o.batch << " reps=" << o.reps << '\n'
     << "exact    weight " << detail::fixed(r.exact_weight_ms, 4) << " ms  total "
     << detail::fixed(r.exact_total_ms, 4) << " ms\n"
     << "bucketed weight " << detail::fixed(r.bucketed_weight_ms, 4) << " ms  total "
     << detail::fixed(r.bucketed_total_ms, 4) << " ms\n"
     << "speedup  weight " << detail::fixed(r.weight_speedup(), 1) << "x  total "
     << detail::fixed(r.total_speedup(), 1) << "x\n";
  if (!o.csv_path.empty()) {
    std::ofstream f(o.csv_path, std::ios::binary);
    if (!f) throw InputError("cannot write " + o.csv_path);
    f << "n,b,batch,reps,exact_weight_ms,bucketed_weight_ms,exact_total_ms,bucketed_total_ms,"
         "weight_speedup,total_speedup\n"
      << o.n << ',' << o.buckets << ',' << o.batch << ',' << o.reps << ','
      << csv::format_double(r.exact_weight_ms) << ',' << csv::format_double(r.bucketed_weight_ms)
      << ',' << csv::format_double(r.exact_total_ms) << ','
      << csv::format_double(r.bucketed_total_ms) << ',' << csv::format_double(r.weight_speedup())
      << ',' << csv::format_double(r.total_speedup()) << '\n';
  }
  return 0;
}

struct StatsOptions {
  std::string pattern;
  double level = 0.95;
  std::size_t reps = kDefaultBootstrapReps;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

struct SamplerSummary {
  std::string sampler;
  std::size_t tasks = 0;
  std::size_t runs = 0;
  double iqm = 0.0;
  ConfidenceInterval ci;
};

inline std::vector<std::string> glob_paths(const std::string& pattern) {
  glob_t g{};
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  std::vector<std::string> out;
  if (rc == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  globfree(&g);
  if (rc != 0 && rc != GLOB_NOMATCH) throw InputError("glob failed for '" + pattern + "'");
  std::sort(out.begin(), out.end());
  return out;
}

/// Final score of each run (last row's episode_return), grouped by sampler
/// and by task (the run file's parent directory), then IQM and stratified
/// bootstrap CI per sampler.
inline std::vector<SamplerSummary> summarize_runs(const std::vector<std::string>& paths,
                                                  const StatsOptions& o) {
  if (paths.empty()) throw InputError("no run files match '" + o.pattern + "'");
  std::map<std::string, std::map<std::string, std::vector<double>>> groups;
  for (const auto& p : paths) {
    const auto rows = csv::read_metrics_file(p);
    if (rows.empty()) throw InputError(p + ": no data rows");
    const std::string task = std::filesystem::path(p).parent_path().filename().string();
    groups[rows.back().sampler][task].push_back(rows.back().episode_return);
  }
  std::vector<SamplerSummary> out;
  for (const auto& [sampler, tasks] : groups) {
    ScoreMatrix m;
    SamplerSummary s;
    s.sampler = sampler;
    for (const auto& [task, scores] : tasks) {
      m.tasks.push_back(task);
      m.scores.push_back(scores);
      s.runs += scores.size();
    }
    s.tasks = m.tasks.size();
    s.iqm = iqm(m);
    Rng rng = make_rng(o.seed, "bootstrap:" + sampler);
    s.ci = stratified_bootstrap_ci(m, o.reps, o.level, rng);
    out.push_back(std::move(s));
  }
  return out;
}

inline int cmd_stats(const StatsOptions& o, std::ostream& os) {
  const auto summaries = summarize_runs(glob_paths(o.pattern), o);
  std::filesystem::create_directories(o.out_dir);
  const auto dir = std::filesystem::path(o.out_dir);
  std::ofstream summary(dir / "summary.csv", std::ios::binary);
  std::ofstream plot(dir / "plot_data.csv", std::ios::binary);
  if (!summary || !plot) throw InputError("cannot write outputs under " + o.out_dir);
  summary << "sampler,tasks,runs,iqm,ci_lo,ci_hi,level\n";
  plot << "x,y,ylo,yhi\n";
  for (const auto& s : summaries) {
    summary << csv::quote_field(s.sampler) << ',' << s.tasks << ',' << s.runs << ','
            << csv::format_double(s.iqm) << ',' << csv::format_double(s.ci.lo) << ','
            << csv::format_double(s.ci.hi) << ',' << csv::format_double(o.level) << '\n';
    plot << csv::quote_field(s.sampler) << ',' << csv::format_double(s.iqm) << ','
         << csv::format_double(s.ci.lo) << ',' << csv::format_double(s.ci.hi) << '\n';
    os << s.sampler << ": IQM " << s.iqm << " [" << s.ci.lo << ", " << s.ci.hi << "] over "
       << s.runs << " runs\n";
  }
  return 0;
}

}  // namespace plastic_replay::cli

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "plastic_replay/cli/commands.hpp"
#include "plastic_replay/config.hpp"
#include "plastic_replay/error.hpp"

namespace pr = plastic_replay;

namespace {

// Applies `--key=value` arguments left over by the parser.
void apply_overrides(pr::RunConfig& cfg, const std::vector<std::string>& extras) {
  for (const auto& arg : extras) {
    const auto eq = arg.find('=');
    if (arg.rfind("--", 0) != 0 || eq == std::string::npos)
      throw pr::ParseError("override '" + arg + "' is not of the form --key=value");
    pr::apply_setting(cfg, arg.substr(2, eq - 2), arg.substr(eq + 1));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age-weighted replay sampling: theory checks, training, benchmarks, statistics"};
  app.require_subcommand(1);

  pr::cli::VerifyOptions verify;
  auto* v = app.add_subcommand("verify", "Run the tabular theory checks");
  v->add_flag("--quick", verify.quick, "Reduced instance counts");
  v->add_flag("--inject-shift-bug", verify.inject_shift_bug,
              "Drop the 1/k factor of the distribution-shift term (mutation test)");
  v->add_option("--seed", verify.seed, "Base seed");

  std::string config_path;
  auto* t = app.add_subcommand("train", "Train the agent for every (sampler, seed) pair");
  t->add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
  t->allow_extras();

  pr::cli::BenchOptions bench;
  auto* b = app.add_subcommand("bench", "Time exact against bucketed sampling");
  b->add_option("--n", bench.n, "Buffer size")->capture_default_str();
  b->add_option("--b", bench.buckets, "Bucket count")->capture_default_str();
  b->add_option("--batch", bench.batch, "Batch size")->capture_default_str();
  b->add_option("--reps", bench.reps, "Repetitions")->capture_default_str();
  b->add_option("--seed", bench.seed, "Seed");
  b->add_option("--csv", bench.csv_path, "Write results to this CSV file");

  pr::cli::StatsOptions stats;
  auto* s = app.add_subcommand("stats", "IQM and stratified bootstrap CIs over run CSVs");
  s->add_option("--glob", stats.pattern, "Run CSV pattern, e.g. 'out/*/*.csv'")->required();
  s->add_option("--level", stats.level, "Confidence level")->capture_default_str();
  s->add_option("--reps", stats.reps, "Bootstrap repetitions")->capture_default_str();
  s->add_option("--seed", stats.seed, "Bootstrap seed");
  s->add_option("--out", stats.out_dir, "Directory for summary.csv and plot_data.csv")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*v) return pr::cli::cmd_verify(verify, std::cout);
    if (*t) {
      pr::RunConfig cfg = config_path.empty() ? pr::RunConfig{} : pr::load_run_config(config_path);
      apply_overrides(cfg, t->remaining());
      return pr::cli::cmd_train(cfg, std::cout);
    }
    if (*b) return pr::cli::cmd_bench(bench, std::cout);
    if (*s) return pr::cli::cmd_stats(stats, std::cout);
  } catch (const pr::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

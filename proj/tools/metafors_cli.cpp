// Command-line harness: runs experiment configs or named presets, and
// aggregates result CSVs. Exit codes: 0 success, 2 configuration error,
// 3 numerical divergence of ground truth, 1 anything else.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "metafors/errors.hpp"
#include "metafors/experiment.hpp"
#include "metafors/threads.hpp"

namespace {

namespace fs = std::filesystem;
using namespace metafors;

// A run argument names either a config/manifest file or a preset.
ExperimentConfig resolve_config(const std::string& arg, PresetScale scale) {
  if (fs::exists(arg)) return parse_config_file(arg);
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), arg) != names.end())
    return preset_config(arg, scale);
  throw ConfigError("\"" + arg + "\" is neither a config file nor a preset; "
                    "see `metafors list-presets`");
}

fs::path default_out_dir() {
  if (const char* env = std::getenv("METAFORS_OUT")) return env;
  return "metafors_out";
}

int run_command(const std::string& config_arg, const std::string& out_arg,
                std::optional<std::uint64_t> seed, unsigned threads,
                const std::string& scale_name) {
  const PresetScale scale =
      scale_name == "paper" ? PresetScale::Paper : PresetScale::Desk;
  const ExperimentConfig config = resolve_config(config_arg, scale);

  RunOptions opts;
  opts.out_dir = out_arg.empty() ? default_out_dir() : fs::path(out_arg);
  opts.threads = threads == 0 ? default_thread_count() : threads;
  opts.seed_override = seed;

  const RunArtifacts artifacts = run_experiment(config, opts);
  std::cout << "experiment: " << experiment_kind_name(config.kind) << "\n"
            << "rows:       " << artifacts.rows.size() << "\n"
            << "results:    " << artifacts.results_csv.string() << "\n"
            << "manifest:   " << artifacts.manifest.string() << "\n"
            << "timings:    " << artifacts.timings_csv.string() << "\n";
  return 0;
}

int summarize_command(const std::string& csv, const std::string& stat_name,
                      const std::string& out_arg) {
  SummaryStat stat = SummaryStat::Mean;
  if (stat_name == "median") stat = SummaryStat::Median;
  else if (stat_name == "stderr") stat = SummaryStat::Stderr;
  else if (stat_name != "mean")
    throw ConfigError("unknown statistic \"" + stat_name + "\"");

  const auto rows = summarize_results(csv, stat);
  const fs::path out = out_arg.empty()
                           ? fs::path(csv).replace_extension(".summary.csv")
                           : fs::path(out_arg);
  write_summary_csv(rows, stat, out);
  std::cout << "groups:  " << rows.size() << "\n"
            << "summary: " << out.string() << "\n";
  return 0;
}

int list_presets_command() {
  for (const std::string& name : preset_names())
    std::cout << name << "\n    " << preset_description(name) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reservoir-computing meta-learning benchmark harness"};
  app.require_subcommand(1);

  std::string config_arg, out_arg, scale_name = "desk";
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  CLI::App* run = app.add_subcommand("run", "run an experiment config or preset");
  run->add_option("config", config_arg, "config file, manifest, or preset name")
      ->required();
  run->add_option("--out", out_arg, "output directory (or $METAFORS_OUT)");
  run->add_option("--seed", seed, "override the config's root seed");
  run->add_option("--threads", threads, "worker threads (default: hardware)");
  run->add_option("--preset", scale_name, "preset scale: desk or paper")
      ->check(CLI::IsMember({"desk", "paper"}));

  std::string csv_arg, stat_name = "mean", summary_out;
  CLI::App* summarize = app.add_subcommand("summarize", "aggregate a results CSV");
  summarize->add_option("csv", csv_arg, "results.csv from a run")->required();
  summarize->add_option("--stat", stat_name, "mean, median or stderr")
      ->check(CLI::IsMember({"mean", "median", "stderr"}));
  summarize->add_option("--out", summary_out, "summary CSV path");

  app.add_subcommand("list-presets", "list named experiment presets");

  try {
    app.parse(argc, argv);
    if (app.got_subcommand("run"))
      return run_command(config_arg, out_arg, seed, threads, scale_name);
    if (app.got_subcommand("summarize"))
      return summarize_command(csv_arg, stat_name, summary_out);
    return list_presets_command();
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const metafors::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const metafors::DivergenceError& e) {
    std::cerr << "ground truth diverged: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

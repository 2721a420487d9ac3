#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "stackgame/config.hpp"
#include "stackgame/harness.hpp"
#include "stackgame/validate.hpp"

namespace {

namespace fs = std::filesystem;
using stackgame::config::KeyValueFile;
using stackgame::harness::ExperimentConfig;
using stackgame::harness::LoadedExperiment;

// Exit statuses (documented in the README):
//   0 success, 1 runtime failure, 2 usage error / unknown verb,
//   3 unreadable or invalid config/input file, 4 invariant failure.
constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;
constexpr int kConfigError = 3;
constexpr int kInvariantFailure = 4;

struct CommonArgs {
  std::string config_path;
  std::string output_dir;
  std::string run_name;
  long seed = -1;
  std::vector<std::string> overrides;
};

std::string default_output_root() {
  if (const char* env = std::getenv("STACKGAME_OUTPUT_DIR")) return env;
  return "runs";
}

KeyValueFile merged_config(const CommonArgs& args) {
  KeyValueFile file = KeyValueFile::parse_file(args.config_path);
  for (const std::string& override_kv : args.overrides) {
    const std::size_t eq = override_kv.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("override must be section.key=value, got: " +
                               override_kv);
    }
    file.set(override_kv.substr(0, eq), override_kv.substr(eq + 1));
  }
  return file;
}

// Per-run timestamped directory under the output root.
fs::path make_run_dir(const CommonArgs& args, const KeyValueFile& file,
                      std::uint64_t seed) {
  std::string root = args.output_dir;
  if (root.empty()) root = file.get("run", "output", default_output_root());
  std::string name = args.run_name;
  if (name.empty()) name = file.get("run", "run_name", "");
  if (name.empty()) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", std::localtime(&t));
    name = std::string("run-") + stamp + "-seed" + std::to_string(seed);
  }
  fs::path dir = fs::path(root) / name;
  int suffix = 2;
  while (fs::exists(dir)) {
    dir = fs::path(root) / (name + "-" + std::to_string(suffix++));
  }
  fs::create_directories(dir);
  return dir;
}

void write_build_info(const fs::path& dir) {
  std::ofstream out(dir / "build_info.txt");
  out << "project = stackgame 1.0.0\n";
  out << "compiler = " << __VERSION__ << "\n";
  out << "cxx_standard = " << __cplusplus << "\n";
#ifdef NDEBUG
  out << "assertions = off\n";
#else
  out << "assertions = on\n";
#endif
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_run(const CommonArgs& args, bool sweep) {
  const KeyValueFile file = merged_config(args);
  const std::string base_dir = fs::path(args.config_path).parent_path().string();
  LoadedExperiment loaded = stackgame::harness::experiment_from_config(file, base_dir);
  if (args.seed >= 0) {
    loaded.config.master_seed = static_cast<std::uint64_t>(args.seed);
  }
  const fs::path dir = make_run_dir(args, file, loaded.config.master_seed);

  write_text(dir / "effective_config.txt",
             stackgame::harness::effective_config_text(loaded.config, loaded.grid));
  write_build_info(dir);

  if (sweep) {
    const stackgame::harness::SweepResult result =
        stackgame::harness::run_sweep(loaded.config, loaded.grid);
    std::ofstream csv(dir / "sweep.csv");
    stackgame::harness::write_sweep_csv(result, csv);
    std::size_t failed = 0;
    std::ostringstream errors;
    for (const auto& cell : result.cells) {
      if (cell.failed) {
        ++failed;
        errors << "cell " << cell.index << " (seed " << cell.seed
               << "): " << cell.error << '\n';
      }
    }
    if (failed > 0) write_text(dir / "sweep_errors.txt", errors.str());
    std::cout << "sweep: " << result.cells.size() << " cells (" << failed
              << " failed), results in " << dir.string() << '\n';
  } else {
    const auto records = stackgame::harness::run_experiment(loaded.config);
    std::ofstream csv(dir / "regret.csv");
    stackgame::harness::write_csv(records, csv);
    const auto& last = records.back();
    std::cout << "run: K=" << last.k << " leader_regret=" << last.leader_cum
              << " follower_regret=" << last.follower_cum << " results in "
              << dir.string() << '\n';
  }
  return kOk;
}

int cmd_validate() {
  const auto results = stackgame::validate::run_all();
  const bool passed = stackgame::validate::report(results, std::cout);
  return passed ? kOk : kInvariantFailure;
}

int cmd_fixture(double m, double epsilon, double alpha_f, double cap) {
  const auto report =
      stackgame::harness::greedy_failure_fixture(m, epsilon, alpha_f, cap);
  std::printf("greedy failure fixture: M=%g epsilon=%g alpha_f=%g H=%g\n",
              report.m, report.epsilon, report.alpha_f, report.value_cap);
  std::printf("greedy marginal-q discrepancy  = %.12g\n",
              report.greedy_discrepancy);
  std::printf("softmax marginal-q discrepancy = %.12g\n",
              report.softmax_discrepancy);
  std::printf("bound epsilon*(1+2*alpha_f*H)  = %.12g\n", report.bound);
  std::printf("softmax within bound: %s\n", report.within_bound ? "yes" : "no");
  return report.within_bound ? kOk : kInvariantFailure;
}

int cmd_report(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) {
    std::cerr << "error: io: cannot open " << csv_path << '\n';
    return kConfigError;
  }
  std::string header;
  if (!std::getline(in, header) ||
      header.rfind("k,leader_inc,leader_cum", 0) != 0) {
    std::cerr << "error: io: " << csv_path << " is not a stackgame regret CSV\n";
    return kConfigError;
  }
  std::vector<double> leader_cum, follower_cum;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() < 7) {
      std::cerr << "error: io: malformed CSV row: " << line << '\n';
      return kConfigError;
    }
    leader_cum.push_back(std::stod(fields[2]));
    follower_cum.push_back(std::stod(fields[4]));
  }
  if (leader_cum.empty()) {
    std::cerr << "error: io: CSV has no data rows\n";
    return kConfigError;
  }
  const std::size_t episodes = leader_cum.size();
  const std::size_t early = std::max<std::size_t>(1, episodes / 10);
  auto summarize = [&](const char* name, const std::vector<double>& cum) {
    const double final_avg = cum.back() / static_cast<double>(episodes);
    double early_avg = 0.0;
    for (std::size_t i = 0; i < early; ++i) {
      early_avg += cum[i] / static_cast<double>(i + 1);
    }
    early_avg /= static_cast<double>(early);
    std::printf(
        "%s: final_cum=%.6g final_per_episode=%.6g "
        "early_per_episode(first %zu)=%.6g sublinearity_ratio=%.4g\n",
        name, cum.back(), final_avg, early, early_avg,
        early_avg > 0 ? final_avg / early_avg : 0.0);
  };
  std::printf("episodes: %zu\n", episodes);
  summarize("leader", leader_cum);
  summarize("follower", follower_cum);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stackgame: episodic leader-follower linear MDP simulator"};
  app.require_subcommand(1);

  CommonArgs run_args, sweep_args;
  auto add_common = [](CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config file")
        ->required();
    cmd->add_option("--seed", args.seed, "override run.master_seed");
    cmd->add_option("--output", args.output_dir, "output root directory");
    cmd->add_option("--run-name", args.run_name, "fixed run directory name");
    cmd->add_option("--set", args.overrides,
                    "config override section.key=value (repeatable)");
  };
  CLI::App* run_cmd = app.add_subcommand("run", "run one experiment");
  add_common(run_cmd, run_args);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a hyperparameter sweep");
  add_common(sweep_cmd, sweep_args);

  CLI::App* validate_cmd =
      app.add_subcommand("validate", "run the property suites");

  double fixture_m = 10.0, fixture_eps = 0.01, fixture_alpha = 1.0,
         fixture_cap = 1.0;
  CLI::App* fixture_cmd =
      app.add_subcommand("fixture", "greedy-failure fixture report");
  fixture_cmd->add_option("--m", fixture_m, "large leader payoff M");
  fixture_cmd->add_option("--epsilon", fixture_eps, "perturbation size");
  fixture_cmd->add_option("--alpha-f", fixture_alpha, "follower temperature");
  fixture_cmd->add_option("--cap", fixture_cap, "value cap H in the bound");

  std::string report_csv;
  CLI::App* report_cmd = app.add_subcommand("report", "summarize a regret CSV");
  report_cmd->add_option("csv", report_csv, "regret CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_args, false);
    if (sweep_cmd->parsed()) return cmd_run(sweep_args, true);
    if (validate_cmd->parsed()) return cmd_validate();
    if (fixture_cmd->parsed()) {
      return cmd_fixture(fixture_m, fixture_eps, fixture_alpha, fixture_cap);
    }
    if (report_cmd->parsed()) return cmd_report(report_csv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    if (what.find("config") != std::string::npos ||
        what.find("cannot open") != std::string::npos ||
        what.find("model file") != std::string::npos ||
        what.find("override") != std::string::npos) {
      std::cerr << "error: config: " << what << '\n';
      return kConfigError;
    }
    std::cerr << "error: runtime: " << what << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}

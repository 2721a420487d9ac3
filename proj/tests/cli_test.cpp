#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = STACKGAME_CLI_PATH;

struct CommandResult {
  int status = -1;
  std::string output;
};

CommandResult run_cli(const std::string& args, const fs::path& workdir) {
  const fs::path out_file = workdir / "stdout.txt";
  const std::string command =
      kCli + " " + args + " > " + out_file.string() + " 2>&1";
  const int raw = std::system(command.c_str());
  CommandResult result;
  result.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(out_file);
  std::stringstream buffer;
  buffer << in.rdbuf();
  result.output = buffer.str();
  return result;
}

fs::path make_workdir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("stackgame_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_config(const fs::path& path, long episodes, std::uint64_t seed) {
  std::ofstream out(path);
  out << "[model]\n"
      << "source = tabular\n"
      << "seed = 3\n"
      << "num_states = 2\n"
      << "num_leader_actions = 2\n"
      << "num_follower_actions = 2\n"
      << "horizon = 2\n"
      << "\n[run]\n"
      << "episodes = " << episodes << "\n"
      << "master_seed = " << seed << "\n"
      << "\n[hyperparams]\n"
      << "c1 = 0.05\n";
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int count_lines(const std::string& text) {
  int lines = 0;
  for (char c : text) lines += c == '\n';
  return lines;
}

}  // namespace

TEST_CASE("unknown verb exits with status 2") {
  const fs::path dir = make_workdir("unknown_verb");
  CHECK(run_cli("frobnicate", dir).status == 2);
  CHECK(run_cli("", dir).status == 2);
  fs::remove_all(dir);
}

TEST_CASE("unreadable config exits with status 3") {
  const fs::path dir = make_workdir("bad_config");
  const auto result = run_cli("run --config " + (dir / "missing.cfg").string(), dir);
  CHECK(result.status == 3);
  CHECK(result.output.find("error: config:") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("report on a missing csv exits with status 3") {
  const fs::path dir = make_workdir("bad_report");
  CHECK(run_cli("report " + (dir / "missing.csv").string(), dir).status == 3);
  fs::remove_all(dir);
}

TEST_CASE("run happy path writes the expected artifacts") {
  const fs::path dir = make_workdir("run_happy");
  write_config(dir / "exp.cfg", 6, 9);
  const auto result =
      run_cli("run --config " + (dir / "exp.cfg").string() + " --output " +
                  (dir / "out").string() + " --run-name trial",
              dir);
  CHECK(result.status == 0);

  const fs::path run_dir = dir / "out" / "trial";
  REQUIRE(fs::exists(run_dir / "regret.csv"));
  REQUIRE(fs::exists(run_dir / "effective_config.txt"));
  REQUIRE(fs::exists(run_dir / "build_info.txt"));

  const std::string csv = slurp(run_dir / "regret.csv");
  CHECK(csv.rfind("k,leader_inc,leader_cum,follower_inc,follower_cum,a1,wall_ms",
                  0) == 0);
  CHECK(count_lines(csv) == 7);  // header + 6 episodes

  // Rerunning the same config keeps the CSV byte-identical.
  const auto second =
      run_cli("run --config " + (dir / "exp.cfg").string() + " --output " +
                  (dir / "out").string() + " --run-name trial2",
              dir);
  CHECK(second.status == 0);
  CHECK(slurp(dir / "out" / "trial2" / "regret.csv") == csv);

  // And the report command summarizes it.
  const auto report = run_cli("report " + (run_dir / "regret.csv").string(), dir);
  CHECK(report.status == 0);
  CHECK(report.output.find("episodes: 6") != std::string::npos);
  CHECK(report.output.find("leader:") != std::string::npos);
  CHECK(report.output.find("follower:") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("command-line overrides beat config-file values") {
  const fs::path dir = make_workdir("overrides");
  write_config(dir / "exp.cfg", 50, 1);
  const auto result = run_cli(
      "run --config " + (dir / "exp.cfg").string() + " --output " +
          (dir / "out").string() +
          " --run-name t --set run.episodes=3 --set hyperparams.c1=0.5 --seed 42",
      dir);
  CHECK(result.status == 0);

  const std::string effective = slurp(dir / "out" / "t" / "effective_config.txt");
  CHECK(effective.find("episodes = 3") != std::string::npos);
  CHECK(effective.find("c1 = 0.5") != std::string::npos);
  CHECK(effective.find("master_seed = 42") != std::string::npos);

  const std::string csv = slurp(dir / "out" / "t" / "regret.csv");
  CHECK(count_lines(csv) == 4);  // header + 3 episodes
  fs::remove_all(dir);
}

TEST_CASE("malformed override exits with status 3") {
  const fs::path dir = make_workdir("bad_override");
  write_config(dir / "exp.cfg", 3, 1);
  const auto result = run_cli("run --config " + (dir / "exp.cfg").string() +
                                  " --output " + (dir / "out").string() +
                                  " --set episodes=3",
                              dir);
  CHECK(result.status == 3);
  fs::remove_all(dir);
}

TEST_CASE("sweep writes the aggregated csv") {
  const fs::path dir = make_workdir("sweep");
  {
    std::ofstream out(dir / "exp.cfg");
    out << "[model]\nsource = tabular\nseed = 3\nnum_states = 2\nhorizon = 2\n"
        << "\n[run]\nepisodes = 4\nmaster_seed = 2\n"
        << "\n[hyperparams]\nc1 = 0.05\n"
        << "\n[sweep]\nc1 = 0.05 0.2\nseeds = 7 8\n";
  }
  const auto result =
      run_cli("sweep --config " + (dir / "exp.cfg").string() + " --output " +
                  (dir / "out").string() + " --run-name grid",
              dir);
  CHECK(result.status == 0);
  const std::string csv = slurp(dir / "out" / "grid" / "sweep.csv");
  CHECK(csv.rfind("alpha_l,alpha_f,c1,seed,k,", 0) == 0);
  CHECK(count_lines(csv) == 1 + 4 * 4);  // header + 4 cells x 4 episodes
  fs::remove_all(dir);
}

TEST_CASE("fixture prints the greedy and soft-max discrepancies") {
  const fs::path dir = make_workdir("fixture");
  const auto result = run_cli("fixture", dir);
  CHECK(result.status == 0);
  CHECK(result.output.find("9.99") != std::string::npos);
  CHECK(result.output.find("within bound: yes") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("validate runs the property suite") {
  const fs::path dir = make_workdir("validate");
  const auto result = run_cli("validate", dir);
  CHECK(result.status == 0);
  CHECK(result.output.find("[PASS]") != std::string::npos);
  CHECK(result.output.find("[FAIL]") == std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("environment variable provides the default output root") {
  const fs::path dir = make_workdir("env_output");
  write_config(dir / "exp.cfg", 2, 1);
  const fs::path out_file = dir / "stdout.txt";
  const std::string command = "STACKGAME_OUTPUT_DIR=" + (dir / "envout").string() +
                              " " + kCli + " run --config " +
                              (dir / "exp.cfg").string() +
                              " --run-name viaenv > " + out_file.string() +
                              " 2>&1";
  const int raw = std::system(command.c_str());
  CHECK(WEXITSTATUS(raw) == 0);
  CHECK(fs::exists(dir / "envout" / "viaenv" / "regret.csv"));
  fs::remove_all(dir);
}

TEST_CASE("help exits cleanly") {
  const fs::path dir = make_workdir("help");
  CHECK(run_cli("--help", dir).status == 0);
  fs::remove_all(dir);
}

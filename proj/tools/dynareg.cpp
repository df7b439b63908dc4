// dynareg run --config <path> --out <dir>
// dynareg bench --sizes 64,128,256 --n 32 --m 32 --seed 7
//
// Exit status: 0 success, 1 other failure, 2 configuration error,
// 3 numeric failure.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dynareg/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kOther = 1;
constexpr int kConfig = 2;
constexpr int kNumeric = 3;

namespace ex = dynareg::experiment;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ex::ConfigError("cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_command(const std::string& config_path, std::string out_dir) {
  const ex::RunConfig config = ex::parse_config(read_file(config_path));
  if (out_dir.empty()) out_dir = config.output;
  if (out_dir.empty()) {
    throw ex::ConfigError("no output directory: pass --out or set 'output'");
  }
  const int threads = ex::threads_from_env();
  const ex::RunResult result = ex::run(config, out_dir, threads);
  if (!result.notice.empty()) std::cerr << "notice: " << result.notice << '\n';
  std::cout << ex::kind_name(config.kind) << ": " << result.artifacts.size()
            << " artifacts in " << out_dir << '\n';
  for (const auto& [name, value] : result.metrics) {
    std::cout << "  " << name << " = " << value << '\n';
  }
  return kOk;
}

int bench_command(const ex::BenchOptions& opt) {
  const ex::BenchReport report = ex::bench_scaling(opt);
  if (!report.notice.empty()) std::cerr << "notice: " << report.notice << '\n';
  std::cout << ex::to_csv(report);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynareg experiment runner"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("--config", config_path, "JSON run configuration")->required();
  run->add_option("--out", out_dir, "output directory for artifacts");

  ex::BenchOptions bench_opt;
  bench_opt.sizes = {64, 128, 256, 512};
  auto* bench = app.add_subcommand("bench", "time the DP sweeps against n_T");
  bench->add_option("--sizes", bench_opt.sizes, "strictly increasing n_T values")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--n", bench_opt.n, "parameter dimension")->capture_default_str();
  bench->add_option("--m", bench_opt.m, "data dimension")->capture_default_str();
  bench->add_option("--seed", bench_opt.seed, "random seed")->required();
  bench->add_option("--reps", bench_opt.repetitions, "repetitions per size")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (run->parsed()) return run_command(config_path, out_dir);
    return bench_command(bench_opt);
  } catch (const ex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const dynareg::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kConfig;
  } catch (const dynareg::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
}

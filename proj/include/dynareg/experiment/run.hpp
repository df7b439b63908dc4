#pragma once

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dynareg/dynamic_dp.hpp"
#include "dynareg/eit/forward.hpp"
#include "dynareg/eit/io.hpp"
#include "dynareg/eit/mesh.hpp"
#include "dynareg/eit/reconstruction.hpp"
#include "dynareg/experiment/bench.hpp"
#include "dynareg/experiment/config.hpp"
#include "dynareg/experiment/output.hpp"
#include "dynareg/parallel.hpp"
#include "dynareg/random.hpp"
#include "dynareg/static_dp.hpp"
#include "dynareg/synthetic.hpp"

namespace dynareg::experiment {

inline constexpr const char* kThreadsVariable = "DYNAREG_THREADS";

/// Worker count from DYNAREG_THREADS (default 1). Results never depend on it.
inline int threads_from_env() {
  const char* v = std::getenv(kThreadsVariable);
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1 || n > 256) {
    throw ConfigError(std::string(kThreadsVariable) +
                      " must be an integer in [1, 256]");
  }
  return static_cast<int>(n);
}

struct RunResult {
  std::vector<Artifact> artifacts;
  json manifest;
  std::map<std::string, double> metrics;
  std::string notice;
};

// ---------------------------------------------------------------------------
// dyn-oracle-check

struct OracleCheckRow {
  int instance = 0;
  Index n = 0, m = 0;
  int steps = 0;
  double alpha = 0.0;
  bool weighted = false;
  double relative_error = 0.0;   // |U_dp - U_oracle|_F / |U_oracle|_F
  double el_interior = 0.0;      // max interior Euler-Lagrange residual
  double el_terminal = 0.0;
  double el_scale = 1.0;
};

/// Instance i: dimensions and steps uniform in [1, max], alpha cycling
/// through the list, random PSD weights on odd instances.
inline DynamicProblem oracle_instance(const OracleCheckParams& o,
                                      std::uint64_t seed, int i) {
  Rng rng = stream(seed, static_cast<std::uint64_t>(i));
  std::uniform_int_distribution<int> dim(1, o.max_dim);
  std::uniform_int_distribution<int> len(1, o.max_steps);
  const Index n = dim(rng), m = dim(rng);
  const int steps = len(rng);
  const double alpha = o.alphas[static_cast<std::size_t>(i) % o.alphas.size()];
  DynamicProblem p = random_dynamic_problem(rng, n, m, steps, alpha);
  if (i % 2 == 1) {
    for (int k = 0; k < steps; ++k) p.weights.push_back(random_psd(rng, m));
  }
  return p;
}

inline OracleCheckRow check_against_oracle(const DynamicProblem& p) {
  OracleCheckRow row;
  row.n = p.parameter_dim();
  row.m = p.data.front().size();
  row.steps = p.steps();
  row.alpha = p.alpha;
  row.weighted = !p.weights.empty();
  const ReconstructionSeries dp = dp_solve(p);
  const ReconstructionSeries oracle = tikhonov_oracle(p);
  double diff = 0.0, ref = 0.0;
  for (int k = 0; k < p.steps(); ++k) {
    diff += (dp.u[k] - oracle.u[k]).squaredNorm();
    ref += oracle.u[k].squaredNorm();
  }
  row.relative_error = ref > 0.0 ? std::sqrt(diff / ref) : std::sqrt(diff);
  // A single step has no interior Euler-Lagrange rows.
  if (p.steps() >= 2) {
    const EulerLagrangeReport el = euler_lagrange_residual(p, dp);
    row.el_interior = el.interior;
    row.el_terminal = el.terminal;
    row.el_scale = el.scale;
  }
  return row;
}

inline std::vector<OracleCheckRow> oracle_check(const OracleCheckParams& o,
                                                std::uint64_t seed,
                                                int threads = 1) {
  std::vector<OracleCheckRow> rows(o.instances);
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    rows[i] = check_against_oracle(oracle_instance(o, seed, static_cast<int>(i)));
    rows[i].instance = static_cast<int>(i);
  });
  return rows;
}

namespace detail {

inline std::string oracle_csv(const std::vector<OracleCheckRow>& rows,
                              double& worst_error, double& worst_el) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "instance,n,m,steps,alpha,weighted,relative_error,el_interior,"
         "el_terminal,el_scale\n";
  worst_error = 0.0;
  worst_el = 0.0;
  for (const auto& r : rows) {
    out << r.instance << ',' << r.n << ',' << r.m << ',' << r.steps << ','
        << r.alpha << ',' << (r.weighted ? 1 : 0) << ',' << r.relative_error
        << ',' << r.el_interior << ',' << r.el_terminal << ',' << r.el_scale
        << '\n';
    worst_error = std::max(worst_error, r.relative_error);
    worst_el = std::max(worst_el, r.el_interior / r.el_scale);
  }
  out << "# max_relative_error=" << worst_error << '\n';
  out << "# max_scaled_el_interior=" << worst_el << '\n';
  return out.str();
}

inline std::string frames_csv(const eit::EitReconstruction& rec) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "k,t,center_x,center_y,centroid_x,centroid_y,distance,residual,"
         "noise_norm\n";
  for (std::size_t k = 0; k < rec.distances.size(); ++k) {
    const auto& c = rec.data.moving_centers[k];
    out << k + 1 << ',' << rec.data.times[k] << ',' << c.x() << ',' << c.y()
        << ',';
    if (rec.centroids[k]) {
      out << rec.centroids[k]->x() << ',' << rec.centroids[k]->y() << ','
          << rec.distances[k];
    } else {
      out << "nan,nan,inf";
    }
    out << ',' << rec.series.residuals[k] << ',' << rec.data.noise_norms[k]
        << '\n';
  }
  return out.str();
}

inline std::string frame_name(std::size_t k, std::size_t count) {
  const int width = std::max<int>(3, static_cast<int>(std::to_string(count).size()));
  std::ostringstream name;
  name << "frames/frame_" << std::setw(width) << std::setfill('0') << k + 1
       << ".pgm";
  return name.str();
}

inline void run_static_rate(const RunConfig& c, OutputDirectory& out,
                            RunResult& result, int threads) {
  const auto& s = c.static_rate;
  const auto inst = SourceConditionInstance::geometric(
      s.dimension, s.smallest_singular_value, s.mu);
  const RateStudy study = rate_study(inst, s.deltas, c.seed, s.scale, threads);
  out.write("rate.csv", to_csv(study));
  result.metrics["slope"] = study.saturated ? 0.0 : study.slope;
  result.metrics["saturated"] = study.saturated ? 1.0 : 0.0;
}

inline void run_oracle_check(const RunConfig& c, OutputDirectory& out,
                             RunResult& result, int threads) {
  const auto rows = oracle_check(c.oracle, c.seed, threads);
  double worst_error = 0.0, worst_el = 0.0;
  out.write("oracle_check.csv", oracle_csv(rows, worst_error, worst_el));
  result.metrics["max_relative_error"] = worst_error;
  result.metrics["max_scaled_el_interior"] = worst_el;
}

inline void run_eit(const RunConfig& c, OutputDirectory& out,
                    RunResult& result, int threads) {
  eit::ReconstructionSettings settings = c.eit;
  settings.seed = c.seed;
  settings.threads = threads;
  const eit::FemSpace space(eit::build_disk_mesh(settings.n_rings));
  const eit::LinearizedForward linear(space);
  const eit::EitReconstruction rec = eit::reconstruct(space, linear, settings);

  std::ostringstream mesh;
  eit::write_mesh(mesh, space.mesh());
  out.write("mesh.txt", mesh.str());

  const eit::Rasterizer raster(space.mesh());
  for (std::size_t k = 0; k < rec.series.u.size(); ++k) {
    out.write(frame_name(k, rec.series.u.size()), raster.pgm(rec.series.u[k]));
  }
  out.write("residuals.csv", series_csv(rec.data.problem, rec.series));
  out.write("frames.csv", frames_csv(rec));
  std::ostringstream solution;
  write_matrix(solution, series_matrix(rec.series));
  out.write("solution.txt", solution.str());

  result.metrics["localized_frames"] = rec.localized_frames(0.2);
  result.metrics["residual_to_noise"] = rec.residual_to_noise_ratio();
  result.metrics["functional_value"] = rec.series.functional_value;
}

inline void run_bench(const RunConfig& c, OutputDirectory& out,
                      RunResult& result) {
  BenchOptions opt;
  opt.sizes = c.bench.sizes;
  opt.n = c.bench.n;
  opt.m = c.bench.m;
  opt.seed = c.seed;
  opt.repetitions = c.bench.repetitions;
  const BenchReport report = bench_scaling(opt);
  out.write("bench.csv", to_csv(report));
  result.metrics["exponent"] = report.exponent;
  result.metrics["max_doubling_ratio"] = report.max_doubling_ratio;
  result.notice = report.notice;
}

}  // namespace detail

/// Runs one experiment into `out_dir`. On any exception the files and
/// directories created by this call are removed before rethrowing.
inline RunResult run(const RunConfig& config, const std::filesystem::path& out_dir,
                     int threads = 1) {
  dynareg::detail::require(threads >= 1, "run: threads must be >= 1");
  OutputDirectory out(out_dir);
  RunResult result;
  switch (config.kind) {
    case Kind::static_rate:
      detail::run_static_rate(config, out, result, threads);
      break;
    case Kind::dyn_oracle_check:
      detail::run_oracle_check(config, out, result, threads);
      break;
    case Kind::eit_recon:
      detail::run_eit(config, out, result, threads);
      break;
    case Kind::bench_scaling:
      detail::run_bench(config, out, result);
      break;
  }
  result.manifest = out.commit(config.resolved());
  result.artifacts = out.artifacts();
  return result;
}

}  // namespace dynareg::experiment

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "dynareg/dynamic_dp.hpp"
#include "dynareg/error.hpp"
#include "dynareg/random.hpp"
#include "dynareg/static_dp.hpp"
#include "dynareg/synthetic.hpp"

namespace dynareg::experiment {

struct BenchRow {
  int steps = 0;
  double median_seconds = 0.0;  // per solve
  std::vector<double> samples;  // per solve, one per repetition
};

struct BenchReport {
  std::vector<BenchRow> rows;
  double exponent = 0.0;        // slope of log(time) against log(n_T)
  double max_doubling_ratio = 0.0;  // over consecutive sizes with ratio 2
  int batch = 1;                // solves per timing sample
  std::string notice;           // non-empty when batching kicked in
};

struct BenchOptions {
  std::vector<int> sizes;
  int n = 32;
  int m = 32;
  std::uint64_t seed = 0;
  int repetitions = 5;
  double min_sample_seconds = 0.01;
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline double time_solves(const DynamicProblem& p, int batch) {
  using clock = std::chrono::steady_clock;
  volatile double sink = 0.0;
  const auto start = clock::now();
  for (int r = 0; r < batch; ++r) {
    const auto series = forward_sweep(p, backward_sweep(p));
    sink = sink + series.functional_value;
  }
  const std::chrono::duration<double> elapsed = clock::now() - start;
  return elapsed.count() / batch;
}

}  // namespace detail

/// Wall time of backward_sweep + forward_sweep on synthetic problems with
/// time-varying F_k (so every step pays for F_k^T F_k) against n_T.
inline BenchReport bench_scaling(const BenchOptions& opt) {
  dynareg::detail::require(opt.sizes.size() >= 3,
                           "bench_scaling: need at least 3 sizes");
  for (std::size_t i = 0; i < opt.sizes.size(); ++i) {
    dynareg::detail::require(opt.sizes[i] >= 1,
                             "bench_scaling: sizes must be >= 1");
    dynareg::detail::require(i == 0 || opt.sizes[i] > opt.sizes[i - 1],
                             "bench_scaling: sizes must be strictly increasing");
  }
  dynareg::detail::require(opt.n >= 1 && opt.m >= 1,
                           "bench_scaling: n and m must be >= 1");
  dynareg::detail::require(opt.repetitions >= 3,
                           "bench_scaling: need at least 3 repetitions");

  std::vector<DynamicProblem> problems;
  for (std::size_t i = 0; i < opt.sizes.size(); ++i) {
    Rng rng = stream(opt.seed, i);
    problems.push_back(
        random_dynamic_problem(rng, opt.n, opt.m, opt.sizes[i], 1.0));
  }

  BenchReport report;
  // Warm-up, then size the batch so the smallest problem runs >= 10 ms per
  // sample. The same batch is used for every size.
  detail::time_solves(problems.front(), 1);
  const double single = detail::time_solves(problems.front(), 1);
  if (single < opt.min_sample_seconds) {
    report.batch = static_cast<int>(
        std::ceil(opt.min_sample_seconds / std::max(single, 1e-9)));
    std::ostringstream msg;
    msg << "timer resolution: one solve at n_T = " << opt.sizes.front()
        << " takes " << std::setprecision(3) << single * 1e3
        << " ms (< " << opt.min_sample_seconds * 1e3 << " ms); timing "
        << report.batch << " solves per sample";
    report.notice = msg.str();
  }

  // Repetitions are interleaved across sizes so slow drifts of the machine
  // affect every size alike.
  report.rows.resize(opt.sizes.size());
  for (std::size_t i = 0; i < opt.sizes.size(); ++i) {
    report.rows[i].steps = opt.sizes[i];
  }
  for (int r = 0; r < opt.repetitions; ++r) {
    for (std::size_t i = 0; i < problems.size(); ++i) {
      report.rows[i].samples.push_back(
          detail::time_solves(problems[i], report.batch));
    }
  }

  std::vector<double> x, y;
  for (BenchRow& row : report.rows) {
    row.median_seconds = detail::median(row.samples);
    x.push_back(row.steps);
    y.push_back(row.median_seconds);
  }
  report.exponent = loglog_slope(x, y);
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    if (report.rows[i].steps == 2 * report.rows[i - 1].steps) {
      report.max_doubling_ratio =
          std::max(report.max_doubling_ratio,
                   report.rows[i].median_seconds / report.rows[i - 1].median_seconds);
    }
  }
  return report;
}

inline std::string to_csv(const BenchReport& r) {
  std::ostringstream out;
  out << std::setprecision(6);
  out << "n_T,median_seconds\n";
  for (const BenchRow& row : r.rows) {
    out << row.steps << ',' << row.median_seconds << '\n';
  }
  out << "# exponent=" << r.exponent << '\n';
  out << "# max_doubling_ratio=" << r.max_doubling_ratio << '\n';
  out << "# batch=" << r.batch << '\n';
  return out.str();
}

}  // namespace dynareg::experiment

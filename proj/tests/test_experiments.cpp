#include <doctest.h>

#include <algorithm>
#include <random>

#include "purisim/experiments.h"

using namespace purisim;

namespace {

TrialOutcome delivered_at(Timestep t, Fidelity f) {
  TrialOutcome o;
  o.delivered = true;
  o.t_deliver = t;
  o.f_deliver = f;
  return o;
}

// Sort-based quantile oracle written with integer ranks.
double oracle_quantile(std::vector<double> xs, std::size_t num, std::size_t den) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  std::size_t rank = (num * n + den - 1) / den;  // ceil(num / den * n)
  if (rank == 0) rank = 1;
  return xs[rank - 1];
}

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.params = ChainParams::uniform(2, 0.99, 0.1, 0.9, MemoryModel::exponential(50.0));
  spec.trials = 300;
  spec.master_seed = 11;
  return spec;
}

}  // namespace

TEST_CASE("single delivered trial") {
  const std::vector<TrialOutcome> one{delivered_at(7, 0.9)};
  const MetricsSummary m = aggregate_metrics(one);
  CHECK(m.eta == 1.0);
  CHECK(m.time->median == 7.0);
  CHECK(m.fidelity->mean == 0.9);
}

TEST_CASE("censored trials count against eta") {
  const std::vector<TrialOutcome> two{delivered_at(3, 0.95), TrialOutcome{}};
  const MetricsSummary m = aggregate_metrics(two);
  CHECK(m.eta == 0.5);
  CHECK(m.delivered == 1);
  CHECK(m.censored == 1);
  CHECK(m.time->count == 1);
  CHECK_THROWS(aggregate_metrics(std::vector<TrialOutcome>{}));
  CHECK_FALSE(aggregate_metrics(std::vector<TrialOutcome>{TrialOutcome{}}).time.has_value());
}

TEST_CASE("quantiles match a sort-based oracle") {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<int> t(1, 5000);
  std::vector<TrialOutcome> outcomes;
  std::vector<double> times;
  for (int i = 0; i < 100000; ++i) {
    const auto x = t(gen);
    outcomes.push_back(delivered_at(x, 0.9));
    times.push_back(x);
  }
  const MetricsSummary m = aggregate_metrics(outcomes);
  CHECK(m.time->q1 == oracle_quantile(times, 1, 4));
  CHECK(m.time->median == oracle_quantile(times, 1, 2));
  CHECK(m.time->q3 == oracle_quantile(times, 3, 4));
  CHECK(m.time->min == *std::min_element(times.begin(), times.end()));
  CHECK(m.time->max == *std::max_element(times.begin(), times.end()));
}

TEST_CASE("nearest rank and whiskers on a small sample") {
  const std::vector<double> xs{1, 2, 3, 4, 100};
  CHECK(nearest_rank(xs, 0.0) == 1);
  CHECK(nearest_rank(xs, 0.5) == 3);
  CHECK(nearest_rank(xs, 1.0) == 100);
  const auto d = describe(xs);
  CHECK(d->q1 == 2);
  CHECK(d->q3 == 4);
  CHECK(d->whisker_low == 1);
  CHECK(d->whisker_high == 4);
  CHECK_FALSE(describe({}).has_value());
}

TEST_CASE("gain summary") {
  const std::vector<double> gains{0.1, -0.2, 0.3, -0.4};
  const GainStats g = summarize_gains(gains);
  CHECK(g.count == 4);
  CHECK(g.fraction_positive == 0.5);
  CHECK(g.mean == doctest::Approx(-0.05));
}

TEST_CASE("grid invariants") {
  ExperimentSpec spec = small_spec();
  spec.policies = {PolicyKind::kNoPur, PolicyKind::kSwapPurify, PolicyKind::kPurifySwap,
                   PolicyKind::kDeltaPurify};
  spec.f_th = {0.8, 0.9, 0.985};
  spec.budgets = {5, 20, 60, 200};
  spec.hops = {2, 3};
  const auto cells = run_grid(spec);
  CHECK(cells.size() == 2 * 3 * 4 * 4);
  for (const auto& c : cells) {
    CHECK(c.summary.delivered + c.summary.censored == c.summary.trials);
    CHECK(c.summary.eta >= 0.0);
    CHECK(c.summary.eta <= 1.0);
    if (c.policy == PolicyKind::kNoPur && c.stop.f_th > ChainParams::uniform(
            c.hops, 0.99, 0.1, 0.9, MemoryModel::constant()).fidelity_limit()) {
      CHECK(c.summary.eta == 0.0);
    }
  }
  // eta never falls as the budget grows, per (hops, f_th, policy).
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = i + 1; j < cells.size(); ++j) {
      const auto& a = cells[i];
      const auto& b = cells[j];
      if (a.hops == b.hops && a.policy == b.policy && a.stop.f_th == b.stop.f_th &&
          a.stop.budget < b.stop.budget) {
        CHECK(a.summary.eta <= b.summary.eta);
      }
    }
  }
}

TEST_CASE("grids are reproducible") {
  ExperimentSpec spec = small_spec();
  spec.policies = {PolicyKind::kSwapPurify, PolicyKind::kPurifySwap};
  spec.f_th = {0.85};
  const auto a = run_grid(spec);
  const auto b = run_grid(spec);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].summary == b[i].summary);
    CHECK(a[i].outcomes == b[i].outcomes);
  }
}

TEST_CASE("grid shapes") {
  ExperimentSpec spec = small_spec();
  spec.policies = {PolicyKind::kNoPur, PolicyKind::kDeltaPurify};
  CHECK_THROWS(run_grid(spec));
  spec.budgets = {10};
  const auto time_only = objective2_run(spec);
  REQUIRE(time_only.size() == 1);  // delta-purify needs a threshold
  CHECK(time_only[0].stop.mode == StopCondition::Mode::kTime);
  spec.budgets.clear();
  CHECK_THROWS(objective2_run(spec));
  CHECK_THROWS(scalability_sweep(spec));
  spec.f_th = {0.9};
  spec.hops = {1, 2};
  CHECK(scalability_sweep(spec).size() == 4);
  const auto eval = delta_purify_eval(spec);
  CHECK(eval.size() == 6);
}

TEST_CASE("gain experiment") {
  ExperimentSpec spec = small_spec();
  spec.trials = 2000;
  spec.memories = {MemoryModel::constant(), MemoryModel::exponential(50.0)};
  const auto reports = gain_distribution_experiment(spec);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].stats.count == 2000);
  CHECK(reports[0].stats.fraction_positive == 1.0);
  CHECK(reports[1].stats.fraction_positive < 0.5);
  CHECK(reports[1].stats.mean < 0.0);
}

TEST_CASE("calibration finds the target") {
  CalibrationSpec spec;
  spec.params = ChainParams::uniform(2, 0.99, 0.1, 0.9, MemoryModel::constant());
  spec.trials = 5000;
  spec.points = 5;
  const CalibrationResult r = calibrate_t_coh(spec);
  CHECK(r.within_tolerance);
  CHECK(std::abs(r.emm.stats.fraction_positive - 0.143) <= 0.02);
  CHECK(r.t_coh > spec.t_coh_min);
  CHECK(r.t_coh < spec.t_coh_max);
  CHECK(r.trace.size() >= 5);
  CHECK(r.lmm.t_coh == r.t_coh);
  CHECK(r.emm_alt.f0 == 0.9);

  spec.points = 1;
  CHECK_THROWS(calibrate_t_coh(spec));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>

#include "d2s/sched/orchestrator.hpp"
#include "d2s/sched/schedule.hpp"
#include "support/test_util.hpp"

using namespace d2s;
using namespace d2s_test;

namespace {

D2SConfig small_d2s(uint64_t delta, uint64_t horizon, int r, int p) {
  D2SConfig cfg;
  cfg.delta = delta;
  cfg.horizon = horizon;
  cfg.r = r;
  cfg.p = p;
  return cfg;
}

ExperimentConfig small_experiment() {
  ExperimentConfig cfg;
  cfg.model = toy_model_config();
  cfg.stream = toy_stream_config();
  cfg.stream.batch_size = 50;
  cfg.drift = toy_drift();
  cfg.drift.anchor_times = {0, 2000, 4000};
  cfg.d2s.delta = 500;
  cfg.d2s.horizon = 4000;
  cfg.d2s.r = 4;
  cfg.d2s.p = 2;
  cfg.eval.lookahead_window = 250;
  // strong enough to actually prune within the tiny mask-learning phase
  cfg.prune.lambda = 0.25;
  cfg.prune.aux_lr = 0.3;
  return cfg;
}

}  // namespace

TEST_CASE("d2s_schedule arithmetic") {
  SUBCASE("worked example: delta=1, r=4, p=1, second deployment") {
    const JobLog log = d2s_schedule(small_d2s(1, 16, 4, 1));
    const Job* prune2 = nullptr;
    int seen = 0;
    for (const auto& j : log.jobs)
      if (j.kind == JobKind::kPruneFinetune && ++seen == 2) prune2 = &j;
    REQUIRE(prune2 != nullptr);
    CHECK(prune2->source_time == 7);
    CHECK(prune2->window_begin == 7);
    CHECK(prune2->window_end == 8);
    CHECK(prune2->output_time == 8);
  }

  SUBCASE("horizon of exactly r*delta gives one sparse deployment") {
    const JobLog log = d2s_schedule(small_d2s(10, 40, 4, 2));
    int prunes = 0;
    for (const auto& j : log.jobs)
      if (j.kind == JobKind::kPruneFinetune) ++prunes;
    CHECK(prunes == 1);
  }

  SUBCASE("p = r gives three overlapping jobs in the handover window") {
    const JobLog log = d2s_schedule(small_d2s(1, 12, 3, 3));
    // during [3, 6) the dense job, the serving sparse job (lineage 1) and
    // the prune job for lineage 2 all hold data windows
    int overlapping = 0;
    for (const auto& j : log.jobs)
      if (j.window_begin < 6 && j.window_end > 3 &&
          j.window_end - j.window_begin <= 3)
        ++overlapping;
    // 3 dense-incr + 3 sparse-incr cover [3,6); the prune job spans it too
    bool prune_spans = false;
    for (const auto& j : log.jobs)
      if (j.kind == JobKind::kPruneFinetune && j.window_begin == 3 &&
          j.window_end == 6)
        prune_spans = true;
    CHECK(prune_spans);
    CHECK(overlapping >= 6);
  }

  SUBCASE("invalid configs are rejected") {
    CHECK_THROWS_AS(d2s_schedule(small_d2s(10, 35, 2, 1)),
                    std::invalid_argument);  // horizon not a multiple
    CHECK_THROWS_AS(d2s_schedule(small_d2s(10, 40, 0, 1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(d2s_schedule(small_d2s(10, 40, 2, 3)),
                    std::invalid_argument);  // p > r
  }
}

TEST_CASE("d2s_schedule properties, exhaustive over small grids") {
  for (uint64_t delta = 1; delta <= 4; ++delta) {
    for (int r = 1; r <= 5; ++r) {
      for (int p = 1; p <= r; ++p) {
        for (uint64_t m = static_cast<uint64_t>(r);
             m <= static_cast<uint64_t>(3 * r); ++m) {
          const uint64_t horizon = m * delta;
          const D2SConfig cfg = small_d2s(delta, horizon, r, p);
          const JobLog log = d2s_schedule(cfg);

          // (a) prune-source arithmetic: source + p*delta == deployment,
          //     and deployments sit at k*r*delta
          uint64_t k = 0;
          for (const auto& j : log.jobs) {
            if (j.kind != JobKind::kPruneFinetune) continue;
            ++k;
            CHECK(j.output_time == k * static_cast<uint64_t>(r) * delta);
            CHECK(j.source_time + static_cast<uint64_t>(p) * delta ==
                  j.output_time);
            CHECK(j.window_begin == j.source_time);
            CHECK(j.window_end == j.output_time);
          }
          CHECK(k == horizon / (static_cast<uint64_t>(r) * delta));

          // (b) per-lineage windows are disjoint, ordered, contiguous
          std::map<int, std::vector<std::pair<uint64_t, uint64_t>>> windows;
          for (const auto& j : log.jobs)
            if (j.kind != JobKind::kPruneFinetune)
              windows[j.lineage].emplace_back(j.window_begin, j.window_end);
          for (auto& [lineage, w] : windows) {
            for (size_t i = 0; i + 1 < w.size(); ++i) {
              CHECK(w[i].second == w[i + 1].first);  // ordered, no overlap
            }
          }

          // (c) single-pass accounting: the dense lineage consumes the
          //     horizon exactly once
          uint64_t dense_total = 0;
          for (const auto& j : log.jobs)
            if (j.kind == JobKind::kDenseIncr)
              dense_total += j.window_end - j.window_begin;
          CHECK(dense_total == horizon);

          // (d) sparse serving spans tile [deploy_k, min(deploy_{k+1}, T))
          for (const auto& [lineage, w] : windows) {
            if (lineage == 0) continue;
            const uint64_t deploy = static_cast<uint64_t>(lineage) *
                                    static_cast<uint64_t>(r) * delta;
            if (w.empty()) {
              CHECK(deploy == horizon);  // vacuous deployment at the end
              continue;
            }
            CHECK(w.front().first == deploy);
            const uint64_t next = std::min(
                horizon, (static_cast<uint64_t>(lineage) + 1) *
                             static_cast<uint64_t>(r) * delta);
            CHECK(w.back().second == next);
          }
        }
      }
    }
  }
}

TEST_CASE("divergence monitor debounce") {
  SUBCASE("identical models never trigger") {
    const Vector dense{0.5, 0.5, 0.5, 0.5};
    const auto out = divergence_monitor(dense, dense, 0.0);
    for (bool b : out) CHECK_FALSE(b);
  }
  SUBCASE("threshold 0 with any positive gap triggers at the second window") {
    const Vector dense{0.5, 0.5, 0.5};
    const Vector sparse{0.51, 0.51, 0.51};
    const auto out = divergence_monitor(dense, sparse, 0.0);
    CHECK_FALSE(out[0]);
    CHECK(out[1]);
  }
  SUBCASE("oscillation above/below never satisfies the debounce") {
    Vector dense(10, 0.5), sparse(10, 0.5);
    for (size_t i = 0; i < 10; i += 2) sparse[i] = 0.6;  // above on evens only
    const auto out = divergence_monitor(dense, sparse, 0.1);
    for (bool b : out) CHECK_FALSE(b);
  }
  SUBCASE("misaligned windows are a data error") {
    CHECK_THROWS_AS(divergence_monitor({0.5}, {0.5, 0.5}, 0.1),
                    std::runtime_error);
  }
}

TEST_CASE("incremental_step bookkeeping") {
  const ExperimentConfig cfg = small_experiment();
  const StreamGenerator stream(cfg.stream, cfg.drift);
  RecModel m = build_model(cfg.model, 4);
  ForwardCache cache;
  LineageTracker lineage;

  SUBCASE("empty window leaves the model untouched") {
    const RecModel before = m;
    incremental_step(m, stream, 0, 0, cache, lineage);
    CHECK(m.virtual_time == 0);
    CHECK(fc_weights(m.top[0]).v == fc_weights(before.top[0]).v);
  }

  SUBCASE("consecutive steps equal one concatenated step") {
    RecModel a = build_model(cfg.model, 4);
    RecModel b = build_model(cfg.model, 4);
    LineageTracker la, lb;
    // batch size 50 divides 500, so the batch boundaries align
    incremental_step(a, stream, 0, 500, cache, la);
    incremental_step(a, stream, 500, 1000, cache, la);
    incremental_step(b, stream, 0, 1000, cache, lb);
    for (size_t i = 0; i < a.top.size(); ++i)
      CHECK(fc_weights(a.top[i]).v == fc_weights(b.top[i]).v);
    CHECK(la.total == lb.total);
  }

  SUBCASE("window overlap within a lineage is a schedule error") {
    incremental_step(m, stream, 0, 500, cache, lineage);
    m.virtual_time = 250;  // forge a rewind
    CHECK_THROWS_AS(incremental_step(m, stream, 250, 750, cache, lineage),
                    std::runtime_error);
  }

  SUBCASE("model timestamp must match the window start") {
    CHECK_THROWS_AS(incremental_step(m, stream, 500, 1000, cache, lineage),
                    std::runtime_error);
  }
}

TEST_CASE("run_experiment variants on a small benchmark") {
  const ExperimentConfig cfg = small_experiment();

  SUBCASE("dense-only has identically zero relative CE") {
    const ExperimentResult res =
        run_experiment(cfg, Variant::kDenseOnly, 11);
    REQUIRE(!res.records.empty());
    for (const auto& r : res.records) {
      CHECK(r.lineage == "dense");
      CHECK(r.relative_ce == 0.0);
    }
    CHECK_FALSE(res.final_sparse.has_value());
    CHECK(res.final_dense.virtual_time == cfg.d2s.horizon);
  }

  SUBCASE("fixed-mask with ranked target 0 matches dense-only bit-for-bit") {
    ExperimentConfig zero = cfg;
    zero.prune.algorithm = PruneConfig::Algo::kMagnitude;
    zero.prune.target_sparsity = 0.0;
    const ExperimentResult dense = run_experiment(zero, Variant::kDenseOnly, 3);
    const ExperimentResult fixed = run_experiment(zero, Variant::kFixedMask, 3);
    // dense rows of both runs agree exactly, and the sparse lineage (an
    // all-alive mask) tracks the dense numbers bit-for-bit
    std::map<uint64_t, double> dense_ce;
    for (const auto& r : dense.records) dense_ce[r.virtual_time] = r.lookahead_ce;
    for (const auto& r : fixed.records) {
      if (r.lineage == "sparse") {
        CHECK(r.relative_ce == 0.0);
        CHECK(r.lookahead_ce == dense_ce.at(r.virtual_time));
        CHECK(r.overall_sparsity == 0.0);
      } else {
        CHECK(r.lookahead_ce == dense_ce.at(r.virtual_time));
      }
    }
    CHECK(fixed.summary.achieved_sparsity == 0.0);
  }

  SUBCASE("d2s with a single grid deployment equals fixed-mask") {
    ExperimentConfig one = cfg;
    one.d2s.r = 8;  // r * delta == horizon -> exactly one deployment
    const ExperimentResult fm = run_experiment(one, Variant::kFixedMask, 5);
    const ExperimentResult d2 = run_experiment(one, Variant::kD2s, 5);
    REQUIRE(fm.records.size() == d2.records.size());
    for (size_t i = 0; i < fm.records.size(); ++i) {
      CHECK(fm.records[i].lookahead_ce == d2.records[i].lookahead_ce);
      CHECK(fm.records[i].relative_ce == d2.records[i].relative_ce);
    }
  }

  SUBCASE("sparse lineage appears at the first deployment") {
    const ExperimentResult res = run_experiment(cfg, Variant::kFixedMask, 7);
    const uint64_t deploy =
        static_cast<uint64_t>(cfg.d2s.r) * cfg.d2s.delta;  // 2000
    for (const auto& r : res.records) {
      if (r.lineage == "sparse") CHECK(r.virtual_time >= deploy);
    }
    bool saw_sparse_at_deploy = false;
    for (const auto& r : res.records)
      if (r.lineage == "sparse" && r.virtual_time == deploy)
        saw_sparse_at_deploy = true;
    CHECK(saw_sparse_at_deploy);
    CHECK(res.summary.achieved_sparsity > 0.0);
    CHECK(res.final_sparse.has_value());
  }

  SUBCASE("explicit refresh times drive deployments") {
    ExperimentConfig ex = cfg;
    ex.d2s.refresh_times = {2000, 3000};
    const ExperimentResult res = run_experiment(ex, Variant::kD2s, 7);
    int prune_jobs = 0;
    for (const auto& j : res.joblog.jobs)
      if (j.kind == JobKind::kPruneFinetune) ++prune_jobs;
    CHECK(prune_jobs == 2);
    CHECK(res.summary.deployments == 2);
    // refresh replaces the serving model: mask flips recorded at t=3000
    bool flips_at_refresh = false;
    for (const auto& r : res.records)
      if (r.lineage == "sparse" && r.virtual_time == 3000 && r.mask_flips > 0)
        flips_at_refresh = true;
    CHECK(flips_at_refresh);
  }

  SUBCASE("runs are reproducible bit-for-bit") {
    const ExperimentResult a = run_experiment(cfg, Variant::kD2s, 13);
    const ExperimentResult b = run_experiment(cfg, Variant::kD2s, 13);
    REQUIRE(a.records.size() == b.records.size());
    for (size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].lookahead_ce == b.records[i].lookahead_ce);
      CHECK(a.records[i].relative_ce == b.records[i].relative_ce);
      CHECK(a.records[i].mask_flips == b.records[i].mask_flips);
    }
  }

  SUBCASE("dynamic monitor refreshes when the gap persists") {
    ExperimentConfig dyn = cfg;
    dyn.d2s.monitor_threshold = -1.0;  // static for the baseline
    const ExperimentResult stat = run_experiment(dyn, Variant::kD2s, 2);
    dyn.d2s.monitor_threshold = -0.5;  // triggers on any gap > -50%
    const ExperimentResult res = run_experiment(dyn, Variant::kD2s, 2);
    uint64_t stat_jobs = 0, dyn_jobs = 0;
    for (const auto& j : stat.joblog.jobs)
      if (j.kind == JobKind::kPruneFinetune) ++stat_jobs;
    for (const auto& j : res.joblog.jobs)
      if (j.kind == JobKind::kPruneFinetune) ++dyn_jobs;
    CHECK(dyn_jobs >= 2);  // initial deployment plus monitor-driven refresh
  }
}

TEST_CASE("snapshot store is write-once") {
  SnapshotStore store;
  RecModel m = build_model(toy_model_config(), 1);
  store.put("dense", 100, m);
  CHECK(store.contains("dense", 100));
  CHECK_FALSE(store.contains("dense", 200));
  CHECK_FALSE(store.contains("sparse", 100));
  CHECK_THROWS_AS(store.put("dense", 100, m), std::runtime_error);
  CHECK(store.get("dense", 100).virtual_time == m.virtual_time);
  CHECK_THROWS_AS(store.get("sparse", 100), std::runtime_error);
}

TEST_CASE("experiment config cross-validation") {
  ExperimentConfig cfg = small_experiment();
  cfg.stream.dense_dim = 5;  // model says 3
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_experiment();
  cfg.stream.table_rows = {10, 14};  // model says {10, 12}
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_experiment();
  cfg.d2s.refresh_times = {300};  // not a multiple of delta
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_experiment();
  cfg.d2s.refresh_times = {500};  // inside the p-period lead
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

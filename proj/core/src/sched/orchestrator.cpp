#include "d2s/sched/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "d2s/nn/loss.hpp"
#include "d2s/rng.hpp"

namespace d2s {

static const std::vector<std::string> kVariantNames = {
    "dense-only", "fixed-mask", "aux-adapt", "mop-adapt", "d2s"};

const std::vector<std::string>& variant_names() { return kVariantNames; }

Variant variant_from_string(const std::string& name) {
  for (size_t i = 0; i < kVariantNames.size(); ++i)
    if (kVariantNames[i] == name) return static_cast<Variant>(i);
  throw std::invalid_argument("usage error: unknown variant '" + name +
                              "' (expected one of: dense-only, fixed-mask, "
                              "aux-adapt, mop-adapt, d2s)");
}

std::string to_string(Variant v) {
  return kVariantNames[static_cast<size_t>(v)];
}

void EvalConfig::validate() const {
  if (lookahead_window == 0)
    throw std::invalid_argument(
        "configuration error: lookahead_window must be positive");
  if (!(post_horizon_fraction > 0.0 && post_horizon_fraction <= 1.0))
    throw std::invalid_argument(
        "configuration error: post_horizon_fraction must be in (0, 1]");
}

void ExperimentConfig::validate() const {
  model.validate();
  stream.validate();
  drift.validate();
  prune.validate();
  d2s.validate();
  eval.validate();
  if (stream.dense_dim != model.dense_dim)
    throw std::invalid_argument(
        "configuration error: stream dense_dim does not match the model");
  if (stream.table_rows.size() != model.embedding_rows.size())
    throw std::invalid_argument(
        "configuration error: stream and model table counts differ");
  for (size_t f = 0; f < stream.table_rows.size(); ++f)
    if (stream.table_rows[f] != model.embedding_rows[f])
      throw std::invalid_argument(
          "configuration error: stream and model table rows differ at table " +
          std::to_string(f));
}

// --- snapshot store ---

void SnapshotStore::put(const std::string& lineage, uint64_t time,
                        RecModel snapshot) {
  const auto key = std::make_pair(lineage, time);
  if (snaps_.count(key))
    throw std::runtime_error("state error: snapshot (" + lineage + ", " +
                             std::to_string(time) + ") already written");
  snaps_.emplace(key, std::move(snapshot));
}

const RecModel& SnapshotStore::get(const std::string& lineage,
                                   uint64_t time) const {
  const auto it = snaps_.find(std::make_pair(lineage, time));
  if (it == snaps_.end())
    throw std::runtime_error("state error: no snapshot (" + lineage + ", " +
                             std::to_string(time) + ")");
  return it->second;
}

bool SnapshotStore::contains(const std::string& lineage, uint64_t time) const {
  return snaps_.count(std::make_pair(lineage, time)) > 0;
}

// --- incremental training ---

static void check_window(const RecModel& model, const LineageTracker& lineage,
                         uint64_t begin, uint64_t end) {
  if (end < begin)
    throw std::invalid_argument("schedule error: window end precedes begin");
  if (begin < lineage.consumed_through)
    throw std::runtime_error(
        "schedule error: window overlaps data already consumed by this "
        "lineage");
  if (model.virtual_time != begin)
    throw std::runtime_error(
        "state error: model timestamp " + std::to_string(model.virtual_time) +
        " does not match window start " + std::to_string(begin));
}

void incremental_step(RecModel& model, const StreamGenerator& stream,
                      uint64_t begin, uint64_t end, ForwardCache& cache,
                      LineageTracker& lineage) {
  check_window(model, lineage, begin, end);
  const uint64_t bsz = static_cast<uint64_t>(stream.config().batch_size);
  for (uint64_t t = begin; t < end; t += bsz) {
    const int n = static_cast<int>(std::min(bsz, end - t));
    const Batch b = stream.batch(t, n);
    train_step(model, b, cache);
  }
  model.virtual_time = end;
  lineage.consumed_through = end;
  lineage.total += end - begin;
}

RecModel run_prune_job(const RecModel& source, const StreamGenerator& stream,
                       uint64_t begin, uint64_t end, const PruneConfig& pcfg,
                       double phase_fraction) {
  if (source.virtual_time != begin)
    throw std::runtime_error(
        "state error: prune source snapshot is not at the window start");
  if (end <= begin)
    throw std::invalid_argument("schedule error: empty prune window");
  RecModel model = to_masked(source);
  PruneConfig cfg = pcfg;
  cfg.prune_phase_samples = static_cast<uint64_t>(
      std::llround(phase_fraction * static_cast<double>(end - begin)));
  ForwardCache cache;
  const uint64_t bsz = static_cast<uint64_t>(stream.config().batch_size);
  uint64_t consumed = 0;
  for (uint64_t t = begin; t < end; t += bsz) {
    const int n = static_cast<int>(std::min(bsz, end - t));
    const Batch b = stream.batch(t, n);
    if (consumed < cfg.prune_phase_samples) {
      consumed += static_cast<uint64_t>(n);
      prune_phase_step(model, b, cache, cfg, consumed);
    } else {
      consumed += static_cast<uint64_t>(n);
      finetune_step_fixed_mask(model, b, cache);
    }
  }
  model.virtual_time = end;
  return model;
}

// --- experiment driver ---

namespace {

struct ServingState {
  uint64_t since_refresh = 0;
};

void serve_window(RecModel& sparse, const StreamGenerator& stream,
                  uint64_t begin, uint64_t end, Variant variant,
                  const PruneConfig& pcfg, ForwardCache& cache,
                  LineageTracker& lineage, ServingState& state) {
  check_window(sparse, lineage, begin, end);
  const uint64_t bsz = static_cast<uint64_t>(stream.config().batch_size);
  for (uint64_t t = begin; t < end; t += bsz) {
    const int n = static_cast<int>(std::min(bsz, end - t));
    const Batch b = stream.batch(t, n);
    switch (variant) {
      case Variant::kFixedMask:
      case Variant::kD2s:
        finetune_step_fixed_mask(sparse, b, cache);
        break;
      case Variant::kAuxAdapt:
        prune_phase_step(sparse, b, cache, pcfg, 0);
        break;
      case Variant::kMopAdapt: {
        forward(sparse, b, cache);
        backward(sparse, b, cache);
        for_each_masked(sparse, [&](MaskedLayer& l) {
          momentum_update(l, l.grad_masked, pcfg.momentum_decay);
        });
        optimizer_step(sparse);
        state.since_refresh += static_cast<uint64_t>(n);
        if (state.since_refresh >= pcfg.refresh_interval) {
          for_each_masked(sparse,
                          [&](MaskedLayer& l) { mop_refresh(l, pcfg); });
          state.since_refresh = 0;
        }
        break;
      }
      case Variant::kDenseOnly:
        throw std::logic_error("dense-only has no sparse lineage");
    }
  }
  sparse.virtual_time = end;
  lineage.consumed_through = end;
  lineage.total += end - begin;
}

uint64_t mask_hamming(const std::vector<uint8_t>& a,
                      const std::vector<uint8_t>& b) {
  if (a.size() != b.size()) return 0;
  uint64_t d = 0;
  for (size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, Variant variant,
                                uint64_t seed) {
  cfg.validate();

  // Per-seed derivation: each seed sees its own stream/drift realization
  // and its own init, all reproducible from the config seeds.
  StreamConfig scfg = cfg.stream;
  scfg.seed = mix_keys(cfg.stream.seed, seed);
  DriftSchedule dsch = cfg.drift;
  dsch.seed = mix_keys(cfg.drift.seed, seed);
  const StreamGenerator stream(scfg, dsch);
  const uint64_t model_seed = mix_keys(0x0DE11ull, seed);

  // Variant-specific pruning behavior: the adaptation variants pin their
  // algorithm; fixed-mask and d2s prune with whatever the config says.
  PruneConfig pcfg = cfg.prune;
  if (variant == Variant::kAuxAdapt) pcfg.algorithm = PruneConfig::Algo::kAux;
  if (variant == Variant::kMopAdapt)
    pcfg.algorithm = PruneConfig::Algo::kMomentum;

  const uint64_t delta = cfg.d2s.delta;
  const uint64_t horizon = cfg.d2s.horizon;
  const uint64_t lead = static_cast<uint64_t>(cfg.d2s.p) * delta;
  const uint64_t window = cfg.eval.lookahead_window;
  const bool dynamic =
      variant == Variant::kD2s && cfg.d2s.monitor_threshold >= 0.0;

  std::vector<uint64_t> deploys;
  if (variant != Variant::kDenseOnly) {
    deploys = deployment_times(cfg.d2s);
    if (variant != Variant::kD2s || dynamic) {
      // one pruning event; dynamic mode adds refreshes at runtime
      if (!deploys.empty()) deploys.resize(1);
    }
  }

  ExperimentResult result;
  RecModel dense = build_model(cfg.model, model_seed, false);
  std::optional<RecModel> sparse;
  std::optional<RecModel> pending;
  uint64_t pending_deploy = 0;
  size_t next_deploy = 0;
  LineageTracker dense_lin, sparse_lin;
  ForwardCache cache;
  ServingState serving;
  DivergenceMonitor monitor(cfg.d2s.monitor_threshold);
  std::vector<uint8_t> prev_mask;
  const std::string vname = to_string(variant);

  auto launch_prune = [&](uint64_t source_time, uint64_t deploy_time) {
    pending = run_prune_job(dense, stream, source_time, deploy_time, pcfg,
                            cfg.d2s.prune_phase_fraction);
    pending_deploy = deploy_time;
    result.joblog.jobs.push_back({JobKind::kPruneFinetune, source_time,
                                  source_time, deploy_time, deploy_time,
                                  static_cast<int>(++result.summary.deployments)});
  };

  for (uint64_t t = 0; t < horizon; t += delta) {
    // deployment of a finished prune job
    if (pending && pending_deploy == t) {
      sparse = std::move(*pending);
      pending.reset();
      sparse_lin.consumed_through = t;
      serving.since_refresh = 0;
      monitor.reset();
    }

    // look-ahead evaluation of every live lineage, before training on
    // [t, t + delta)
    const double dense_ce = lookahead_window_ce(dense, stream, t, window);
    MetricsRecord dr;
    dr.virtual_time = t;
    dr.variant = vname;
    dr.seed = seed;
    dr.lineage = "dense";
    dr.lookahead_ce = dense_ce;
    result.records.push_back(std::move(dr));

    double rel = 0.0;
    if (sparse) {
      const double sparse_ce =
          lookahead_window_ce(*sparse, stream, t, window);
      rel = relative_ce(sparse_ce, dense_ce);
      MetricsRecord sr;
      sr.virtual_time = t;
      sr.variant = vname;
      sr.seed = seed;
      sr.lineage = "sparse";
      sr.lookahead_ce = sparse_ce;
      sr.relative_ce = rel;
      sr.overall_sparsity = sparsity(*sparse);
      sr.layer_sparsity = per_layer_sparsity(*sparse);
      std::vector<uint8_t> bits = mask_bits(*sparse);
      sr.mask_flips = prev_mask.empty() ? 0 : mask_hamming(bits, prev_mask);
      prev_mask = std::move(bits);
      result.records.push_back(std::move(sr));
    }

    // refresh decisions
    if (dynamic && sparse && !pending) {
      if (monitor.observe(rel) && t + lead <= horizon) {
        launch_prune(t, t + lead);
        monitor.reset();
      }
    }
    if (next_deploy < deploys.size() && t == deploys[next_deploy] - lead) {
      launch_prune(t, deploys[next_deploy]);
      ++next_deploy;
    }

    // train
    incremental_step(dense, stream, t, t + delta, cache, dense_lin);
    result.joblog.jobs.push_back(
        {JobKind::kDenseIncr, t, t, t + delta, t + delta, 0});
    if (sparse) {
      serve_window(*sparse, stream, t, t + delta, variant, pcfg, cache,
                   sparse_lin, serving);
      result.joblog.jobs.push_back(
          {JobKind::kSparseIncr, t, t, t + delta, t + delta, 1});
    }
  }

  // frozen evaluation over the held-out slice right after the horizon
  const uint64_t post = std::max<uint64_t>(
      1, static_cast<uint64_t>(std::llround(
             cfg.eval.post_horizon_fraction * static_cast<double>(horizon))));
  result.summary.post_eval_ce_dense =
      lookahead_window_ce(dense, stream, horizon, post);
  if (sparse) {
    result.summary.post_eval_ce_sparse =
        lookahead_window_ce(*sparse, stream, horizon, post);
    result.summary.post_eval_relative_ce = relative_ce(
        result.summary.post_eval_ce_sparse, result.summary.post_eval_ce_dense);
    result.summary.achieved_sparsity = sparsity(*sparse);
    for (auto it = result.records.rbegin(); it != result.records.rend(); ++it) {
      if (it->lineage == "sparse") {
        result.summary.last_window_relative_ce = it->relative_ce;
        break;
      }
    }
  }

  result.final_dense = std::move(dense);
  result.final_sparse = std::move(sparse);
  return result;
}

}  // namespace d2s

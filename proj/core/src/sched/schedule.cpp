#include "d2s/sched/schedule.hpp"

#include <algorithm>
#include <stdexcept>

#include "d2s/metrics/metrics.hpp"

namespace d2s {

void D2SConfig::validate() const {
  if (delta == 0)
    throw std::invalid_argument("configuration error: delta must be positive");
  if (horizon == 0 || horizon % delta != 0)
    throw std::invalid_argument(
        "configuration error: horizon must be a positive multiple of delta");
  if (r < 1)
    throw std::invalid_argument("configuration error: r must be >= 1");
  if (p < 1 || p > r)
    throw std::invalid_argument(
        "configuration error: p must satisfy 1 <= p <= r");
  if (!(prune_phase_fraction > 0.0 && prune_phase_fraction <= 1.0))
    throw std::invalid_argument(
        "configuration error: prune_phase_fraction must be in (0, 1]");
  const uint64_t lead = static_cast<uint64_t>(p) * delta;
  uint64_t prev = 0;
  for (uint64_t t : refresh_times) {
    if (t % delta != 0)
      throw std::invalid_argument(
          "configuration error: refresh_times must be multiples of delta");
    if (t < lead)
      throw std::invalid_argument(
          "configuration error: refresh_times must leave room for the "
          "p-period prune window");
    if (t > horizon)
      throw std::invalid_argument(
          "configuration error: refresh_times must lie within the horizon");
    if (t <= prev)
      throw std::invalid_argument(
          "configuration error: refresh_times must be strictly increasing");
    if (prev != 0 && t - prev < lead)
      throw std::invalid_argument(
          "configuration error: refresh_times must sit at least p periods "
          "apart so prune jobs never overlap");
    prev = t;
  }
}

std::string to_string(JobKind k) {
  switch (k) {
    case JobKind::kDenseIncr:
      return "dense-incr";
    case JobKind::kSparseIncr:
      return "sparse-incr";
    case JobKind::kPruneFinetune:
      return "prune-finetune";
  }
  return "?";
}

std::vector<uint64_t> deployment_times(const D2SConfig& cfg) {
  if (!cfg.refresh_times.empty()) return cfg.refresh_times;
  std::vector<uint64_t> out;
  const uint64_t period = static_cast<uint64_t>(cfg.r) * cfg.delta;
  for (uint64_t t = period; t <= cfg.horizon; t += period) out.push_back(t);
  return out;
}

JobLog d2s_schedule(const D2SConfig& cfg) {
  cfg.validate();
  JobLog log;
  for (uint64_t t = 0; t < cfg.horizon; t += cfg.delta) {
    log.jobs.push_back(
        {JobKind::kDenseIncr, t, t, t + cfg.delta, t + cfg.delta, 0});
  }
  const std::vector<uint64_t> deploys = deployment_times(cfg);
  const uint64_t lead = static_cast<uint64_t>(cfg.p) * cfg.delta;
  for (size_t k = 0; k < deploys.size(); ++k) {
    const uint64_t d = deploys[k];
    const int lineage = static_cast<int>(k) + 1;
    log.jobs.push_back(
        {JobKind::kPruneFinetune, d - lead, d - lead, d, d, lineage});
    const uint64_t serve_end =
        k + 1 < deploys.size() ? std::min(deploys[k + 1], cfg.horizon)
                               : cfg.horizon;
    for (uint64_t t = d; t < serve_end; t += cfg.delta) {
      log.jobs.push_back(
          {JobKind::kSparseIncr, t, t, t + cfg.delta, t + cfg.delta, lineage});
    }
  }
  return log;
}

std::vector<bool> divergence_monitor(const Vector& dense_ce,
                                     const Vector& sparse_ce,
                                     double threshold) {
  if (dense_ce.size() != sparse_ce.size())
    throw std::runtime_error(
        "data error: divergence monitor needs aligned windows");
  DivergenceMonitor mon(threshold);
  std::vector<bool> out(dense_ce.size());
  for (size_t i = 0; i < dense_ce.size(); ++i) {
    out[i] = mon.observe(relative_ce(sparse_ce[i], dense_ce[i]));
  }
  return out;
}

}  // namespace d2s

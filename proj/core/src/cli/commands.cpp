#include "d2s/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "d2s/io/config_file.hpp"
#include "d2s/io/manifest.hpp"
#include "d2s/io/mask_bitset.hpp"
#include "d2s/io/metrics_io.hpp"
#include "d2s/io/snapshot.hpp"
#include "d2s/io/stream_file.hpp"
#include "d2s/io/svg.hpp"
#include "d2s/sched/orchestrator.hpp"

namespace d2s {

namespace fs = std::filesystem;

namespace {

std::string seed_tag(uint64_t seed) { return "seed" + std::to_string(seed); }

void write_joblog_csv(const JobLog& log, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("I/O error: cannot open " + path);
  os << "kind,source_time,window_begin,window_end,output_time,lineage\n";
  for (const auto& j : log.jobs) {
    os << to_string(j.kind) << ',' << j.source_time << ',' << j.window_begin
       << ',' << j.window_end << ',' << j.output_time << ',' << j.lineage
       << "\n";
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

int cmd_run(const RunOptions& opt) {
  const ExperimentConfig cfg = load_config_file(opt.config_path);
  cfg.validate();
  const Variant variant = variant_from_string(opt.variant);
  if (opt.format != "jsonl" && opt.format != "csv")
    throw std::invalid_argument("usage error: unknown format '" + opt.format +
                                "' (expected jsonl or csv)");
  if (opt.seeds.empty())
    throw std::invalid_argument("usage error: at least one seed is required");
  fs::create_directories(opt.out_dir);

  std::vector<ExperimentResult> results(opt.seeds.size());
  std::vector<std::string> errors(opt.seeds.size());
  {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const size_t workers =
        std::min<size_t>(opt.seeds.size(),
                         opt.threads > 0 ? static_cast<size_t>(opt.threads)
                                         : static_cast<size_t>(hw));
    std::atomic<size_t> next{0};
    auto work = [&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= opt.seeds.size()) return;
        try {
          results[i] = run_experiment(cfg, variant, opt.seeds[i]);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
    };
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (size_t i = 0; i < opt.seeds.size(); ++i)
    if (!errors[i].empty())
      throw std::runtime_error("seed " + std::to_string(opt.seeds[i]) +
                               " failed: " + errors[i]);

  RunManifest manifest;
  manifest.config_text = serialize_config(cfg);
  manifest.config_hash = hex64(fnv1a64(manifest.config_text));
  manifest.stream_hash = hex64(fnv1a64(serialize_stream_sections(cfg)));
  manifest.variant = opt.variant;
  manifest.seeds = opt.seeds;
  manifest.format = opt.format;

  for (size_t i = 0; i < opt.seeds.size(); ++i) {
    const auto& res = results[i];
    const std::string base =
        "metrics_" + opt.variant + "_" + seed_tag(opt.seeds[i]) + "." +
        opt.format;
    write_metrics_file(res.records, (fs::path(opt.out_dir) / base).string(),
                       opt.format);
    manifest.metrics_files.push_back(base);
    if (res.final_sparse) {
      const std::string snap =
          "snapshot_" + opt.variant + "_" + seed_tag(opt.seeds[i]) + ".bin";
      save_snapshot(*res.final_sparse,
                    (fs::path(opt.out_dir) / snap).string());
      manifest.snapshot_files.push_back(snap);
    }
    manifest.status.push_back("ok");
    manifest.last_window_relative_ce.push_back(
        res.summary.last_window_relative_ce);
    manifest.post_eval_relative_ce.push_back(
        res.summary.post_eval_relative_ce);
    manifest.achieved_sparsity.push_back(res.summary.achieved_sparsity);
  }
  manifest.joblog_file = "joblog_" + opt.variant + ".csv";
  write_joblog_csv(results.front().joblog,
                   (fs::path(opt.out_dir) / manifest.joblog_file).string());
  save_manifest(manifest,
                (fs::path(opt.out_dir) / "manifest.json").string());
  std::cout << "run complete: " << opt.variant << ", " << opt.seeds.size()
            << " seed(s), out=" << opt.out_dir << "\n";
  return 0;
}

int cmd_compare(const CompareOptions& opt) {
  if (opt.manifest_paths.empty())
    throw std::invalid_argument("usage error: compare needs >= 1 manifest");
  fs::create_directories(opt.out_dir);

  struct Loaded {
    RunManifest manifest;
    fs::path dir;
    std::vector<std::vector<MetricsRecord>> per_seed;
  };
  std::vector<Loaded> runs;
  for (const auto& mp : opt.manifest_paths) {
    Loaded l;
    l.manifest = load_manifest(mp);
    l.dir = fs::path(mp).parent_path();
    for (const auto& f : l.manifest.metrics_files)
      l.per_seed.push_back(read_metrics_file((l.dir / f).string()));
    runs.push_back(std::move(l));
  }
  for (const auto& r : runs)
    if (r.manifest.stream_hash != runs.front().manifest.stream_hash)
      throw std::runtime_error(
          "comparison error: manifests were produced on different streams");

  // mean relative look-ahead CE per variant over time
  std::vector<ChartSeries> curves;
  std::ofstream curve_csv(fs::path(opt.out_dir) / "relative_ce.csv");
  curve_csv << "variant,t,mean_relative_ce,seeds\n";
  for (const auto& r : runs) {
    std::map<uint64_t, std::pair<double, int>> acc;
    for (const auto& records : r.per_seed) {
      for (const auto& rec : records) {
        const bool is_sparse_row = rec.lineage == "sparse";
        const bool dense_only = r.manifest.variant == "dense-only";
        if (is_sparse_row || (dense_only && rec.lineage == "dense")) {
          auto& slot = acc[rec.virtual_time];
          slot.first += rec.relative_ce;
          slot.second += 1;
        }
      }
    }
    ChartSeries s;
    s.label = r.manifest.variant;
    for (const auto& [t, sum_n] : acc) {
      const double mean = sum_n.first / sum_n.second;
      s.points.emplace_back(static_cast<double>(t), mean);
      curve_csv << r.manifest.variant << ',' << t << ',' << fmt(mean) << ','
                << sum_n.second << "\n";
    }
    curves.push_back(std::move(s));
  }
  write_line_chart_svg((fs::path(opt.out_dir) / "relative_ce.svg").string(),
                       "Relative look-ahead CE vs virtual time",
                       "virtual time (samples)", "relative CE", curves);

  // last-window table
  std::ofstream table(fs::path(opt.out_dir) / "comparison.csv");
  table << "variant,seed,last_window_relative_ce,post_eval_relative_ce,"
           "achieved_sparsity\n";
  std::cout << "variant            last-rel-CE   post-rel-CE   sparsity\n";
  for (const auto& r : runs) {
    double lw = 0, pe = 0, sp = 0;
    const size_t n = r.manifest.seeds.size();
    for (size_t i = 0; i < n; ++i) {
      table << r.manifest.variant << ',' << r.manifest.seeds[i] << ','
            << fmt(r.manifest.last_window_relative_ce[i]) << ','
            << fmt(r.manifest.post_eval_relative_ce[i]) << ','
            << fmt(r.manifest.achieved_sparsity[i]) << "\n";
      lw += r.manifest.last_window_relative_ce[i];
      pe += r.manifest.post_eval_relative_ce[i];
      sp += r.manifest.achieved_sparsity[i];
    }
    std::printf("%-18s %11.5f %12.5f %10.4f\n", r.manifest.variant.c_str(),
                lw / n, pe / n, sp / n);
  }

  // sparsity structure from the final snapshots (first seed per run)
  std::vector<ChartSeries> by_size, by_depth;
  std::ofstream scsv(fs::path(opt.out_dir) / "sparsity_structure.csv");
  scsv << "variant,layer_depth,layer_size,sparsity\n";
  for (const auto& r : runs) {
    if (r.manifest.snapshot_files.empty()) continue;
    const RecModel model =
        load_snapshot((r.dir / r.manifest.snapshot_files.front()).string());
    const auto rows = sparsity_vs_structure_report(model);
    if (rows.empty()) continue;
    int64_t min_size = rows.front().size;
    for (const auto& row : rows) min_size = std::min(min_size, row.size);
    ChartSeries ss, sd;
    ss.label = r.manifest.variant;
    sd.label = r.manifest.variant;
    for (const auto& row : rows) {
      scsv << r.manifest.variant << ',' << row.depth << ',' << row.size << ','
           << fmt(row.sparsity) << "\n";
      ss.points.emplace_back(
          static_cast<double>(row.size) / static_cast<double>(min_size),
          row.sparsity);
      sd.points.emplace_back(static_cast<double>(row.depth), row.sparsity);
    }
    by_size.push_back(std::move(ss));
    by_depth.push_back(std::move(sd));
  }
  if (!by_size.empty()) {
    write_scatter_svg((fs::path(opt.out_dir) / "sparsity_vs_size.svg").string(),
                      "Layer sparsity vs relative layer size",
                      "weights relative to smallest layer", "sparsity",
                      by_size);
    write_scatter_svg(
        (fs::path(opt.out_dir) / "sparsity_vs_depth.svg").string(),
        "Layer sparsity vs depth", "layer depth", "sparsity", by_depth);
  }
  std::cout << "comparison written to " << opt.out_dir << "\n";
  return 0;
}

int cmd_bench(const BenchOptions& opt) {
  const std::vector<BenchResult> rows = run_bench(opt.bench);
  std::printf("%6s %9s %12s %12s %8s %14s %14s\n", "size", "sparsity",
              "dense_ns", "sparse_ns", "speedup", "flops_dense",
              "flops_sparse");
  for (const auto& r : rows) {
    std::printf("%6d %9.4f %12.1f %12.1f %8.2f %14lld %14lld\n", r.size,
                r.sparsity, r.dense_ns, r.sparse_ns, r.speedup,
                static_cast<long long>(r.flops_dense),
                static_cast<long long>(r.flops_sparse));
  }
  if (!opt.out_path.empty()) {
    std::ofstream os(opt.out_path, std::ios::binary);
    if (!os) throw std::runtime_error("I/O error: cannot open " + opt.out_path);
    os << "size,sparsity,dense_ns,sparse_ns,speedup,flops_dense,flops_sparse\n";
    for (const auto& r : rows) {
      os << r.size << ',' << fmt(r.sparsity) << ',' << fmt(r.dense_ns) << ','
         << fmt(r.sparse_ns) << ',' << fmt(r.speedup) << ',' << r.flops_dense
         << ',' << r.flops_sparse << "\n";
    }
  }
  return 0;
}

int cmd_gen_stream(const GenStreamOptions& opt) {
  const ExperimentConfig cfg = load_config_file(opt.config_path);
  cfg.stream.validate();
  cfg.drift.validate();
  if (opt.count == 0)
    throw std::invalid_argument("usage error: gen-stream needs --count > 0");
  const StreamGenerator stream(cfg.stream, cfg.drift);
  export_stream(stream, opt.t0, opt.count, opt.out_path);
  std::cout << "wrote " << opt.count << " samples starting at t=" << opt.t0
            << " to " << opt.out_path << "\n";
  return 0;
}

int cmd_inspect_snapshot(const InspectOptions& opt) {
  const RecModel model = load_snapshot(opt.snapshot_path);
  const auto& cfg = model.cfg;
  std::cout << "snapshot: " << opt.snapshot_path << "\n";
  std::cout << "  virtual_time: " << model.virtual_time << "\n";
  std::cout << "  dense_dim: " << cfg.dense_dim << ", embedding_dim: "
            << cfg.embedding_dim << ", tables: " << cfg.num_tables() << "\n";
  auto describe = [&](const char* name, const std::vector<FcLayer>& ls) {
    for (size_t i = 0; i < ls.size(); ++i) {
      std::cout << "  " << name << "[" << i << "]: " << fc_out_dim(ls[i])
                << "x" << fc_in_dim(ls[i]);
      if (fc_is_masked(ls[i])) {
        const auto& ml = std::get<MaskedLayer>(ls[i]);
        std::cout << " masked, sparsity " << fmt(sparsity(ml));
      }
      std::cout << "\n";
    }
  };
  describe("bottom", model.bottom);
  describe("top", model.top);
  for (size_t f = 0; f < model.tables.size(); ++f)
    std::cout << "  table[" << f << "]: " << model.tables[f].rows() << "x"
              << model.tables[f].dim() << "\n";
  std::cout << "  overall maskable sparsity: " << fmt(sparsity(model)) << "\n";

  if (!opt.dump_mask_path.empty()) {
    save_mask_bitset(model, opt.dump_mask_path);
    std::cout << "  mask bitset written to " << opt.dump_mask_path << "\n";
  }
  if (!opt.histogram_path.empty()) {
    const HistogramReport rep = histogram_report(model);
    std::ofstream os(opt.histogram_path, std::ios::binary);
    if (!os)
      throw std::runtime_error("I/O error: cannot open " + opt.histogram_path);
    os << "layer,bin,bin_lo,bin_hi,pruned,active\n";
    for (size_t l = 0; l < rep.layers.size(); ++l) {
      const auto& h = rep.layers[l];
      const double w = h.max_abs / HistogramReport::kBins;
      for (int b = 0; b < HistogramReport::kBins; ++b)
        os << l << ',' << b << ',' << fmt(b * w) << ',' << fmt((b + 1) * w)
           << ',' << h.pruned[b] << ',' << h.active[b] << "\n";
    }
    std::cout << "  histograms written to " << opt.histogram_path << "\n";
  }
  return 0;
}

}  // namespace d2s

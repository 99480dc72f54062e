#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "d2s/io/config_file.hpp"
#include "d2s/io/manifest.hpp"
#include "d2s/io/mask_bitset.hpp"
#include "d2s/io/metrics_io.hpp"
#include "d2s/io/snapshot.hpp"
#include "d2s/io/stream_file.hpp"
#include "d2s/prune/pruning.hpp"
#include "d2s/rng.hpp"
#include "support/test_util.hpp"

using namespace d2s;
using namespace d2s_test;

namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir =
      fs::temp_directory_path() / ("d2s_io_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

RecModel trained_masked_model() {
  RecModel m = build_model(toy_model_config(), 23, /*masked=*/true);
  const StreamGenerator stream(toy_stream_config(), toy_drift());
  ForwardCache cache;
  PruneConfig pcfg;
  pcfg.lambda = 0.25;
  pcfg.aux_lr = 0.3;
  uint64_t consumed = 0;
  for (int s = 0; s < 12; ++s) {
    const Batch b = stream.batch(static_cast<uint64_t>(s) * 16, 16);
    consumed += 16;
    prune_phase_step(m, b, cache, pcfg, consumed);
  }
  m.virtual_time = consumed;
  return m;
}

}  // namespace

TEST_CASE("snapshot round-trips bit-exactly") {
  const RecModel m = trained_masked_model();
  std::ostringstream os1;
  save_snapshot(m, os1);
  std::istringstream is(os1.str());
  const RecModel back = load_snapshot(is);
  std::ostringstream os2;
  save_snapshot(back, os2);
  CHECK(os1.str() == os2.str());
  CHECK(back.virtual_time == m.virtual_time);
  // masked state survives
  const auto& l0 = std::get<MaskedLayer>(m.bottom[0]);
  const auto& l0b = std::get<MaskedLayer>(back.bottom[0]);
  CHECK(l0.aux.v == l0b.aux.v);
  CHECK(l0.momentum.v == l0b.momentum.v);
  CHECK(l0.theta_acc.v == l0b.theta_acc.v);

  SUBCASE("dense snapshots round-trip too") {
    RecModel d = build_model(toy_model_config(), 5);
    std::ostringstream a;
    save_snapshot(d, a);
    std::istringstream i(a.str());
    const RecModel db = load_snapshot(i);
    std::ostringstream b;
    save_snapshot(db, b);
    CHECK(a.str() == b.str());
  }

  SUBCASE("corrupt magic is rejected") {
    std::string bytes = os1.str();
    bytes[0] = 'X';
    std::istringstream bad(bytes);
    CHECK_THROWS_AS(load_snapshot(bad), std::runtime_error);
  }

  SUBCASE("truncated files are rejected") {
    std::istringstream bad(os1.str().substr(0, os1.str().size() / 2));
    CHECK_THROWS_AS(load_snapshot(bad), std::runtime_error);
  }
}

TEST_CASE("config file parsing") {
  SUBCASE("echo round-trip is exact") {
    ExperimentConfig cfg;
    cfg.model.lr = 0.037;
    cfg.stream.zipf_exponent = 1.21;
    cfg.prune.lambda = 0.12345678901234567;
    cfg.d2s.refresh_times = {400000, 1000000};
    const std::string echo = serialize_config(cfg);
    const ExperimentConfig back = parse_config(echo);
    CHECK(serialize_config(back) == echo);
    CHECK(back.prune.lambda == cfg.prune.lambda);
    CHECK(back.d2s.refresh_times == cfg.d2s.refresh_times);
  }

  SUBCASE("defaults survive an empty config") {
    const ExperimentConfig cfg = parse_config("");
    CHECK(cfg.model.dense_dim == 16);
    CHECK(cfg.prune.w1 == 0.5);
  }

  SUBCASE("unknown keys carry the section and key in the message") {
    try {
      parse_config("[model]\nnot_a_key = 3\n");
      FAIL("expected an error");
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      CHECK(msg.find("model") != std::string::npos);
      CHECK(msg.find("not_a_key") != std::string::npos);
    }
  }

  SUBCASE("unknown section is an error") {
    CHECK_THROWS_AS(parse_config("[nope]\nx = 1\n"), std::invalid_argument);
  }

  SUBCASE("malformed numbers name the key") {
    try {
      parse_config("[prune]\nlambda = banana\n");
      FAIL("expected an error");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("lambda") != std::string::npos);
    }
  }

  SUBCASE("comments and blank lines are ignored") {
    const ExperimentConfig cfg =
        parse_config("# header\n[model]\n\ndense_dim = 8 # inline\n");
    CHECK(cfg.model.dense_dim == 8);
  }
}

TEST_CASE("metrics files") {
  std::vector<MetricsRecord> records;
  for (int i = 0; i < 5; ++i) {
    MetricsRecord r;
    r.virtual_time = static_cast<uint64_t>(i) * 100;
    r.variant = "fixed-mask";
    r.seed = 3;
    r.lineage = i % 2 ? "sparse" : "dense";
    r.lookahead_ce = 0.5 + 0.001 * i;
    r.relative_ce = 0.01 * i;
    r.overall_sparsity = 0.8;
    r.layer_sparsity = {0.7, 0.9};
    r.mask_flips = static_cast<uint64_t>(i);
    records.push_back(r);
  }

  SUBCASE("jsonl round-trip") {
    std::ostringstream os;
    write_metrics_jsonl(records, os);
    std::istringstream is(os.str());
    const auto back = read_metrics_jsonl(is);
    REQUIRE(back.size() == records.size());
    for (size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].virtual_time == records[i].virtual_time);
      CHECK(back[i].lookahead_ce == records[i].lookahead_ce);
      CHECK(back[i].relative_ce == records[i].relative_ce);
      CHECK(back[i].layer_sparsity == records[i].layer_sparsity);
      CHECK(back[i].lineage == records[i].lineage);
    }
  }

  SUBCASE("csv round-trip") {
    std::ostringstream os;
    write_metrics_csv(records, os);
    std::istringstream is(os.str());
    const auto back = read_metrics_csv(is);
    REQUIRE(back.size() == records.size());
    for (size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].lookahead_ce == records[i].lookahead_ce);
      CHECK(back[i].mask_flips == records[i].mask_flips);
    }
  }

  SUBCASE("jsonl writing is byte-stable") {
    std::ostringstream a, b;
    write_metrics_jsonl(records, a);
    write_metrics_jsonl(records, b);
    CHECK(a.str() == b.str());
  }
}

TEST_CASE("mask bitset files") {
  const RecModel m = trained_masked_model();
  const fs::path dir = temp_dir();
  const std::string path = (dir / "mask.bits").string();
  save_mask_bitset(m, path);
  const MaskBitset bits = load_mask_bitset(path);
  REQUIRE(bits.layers.size() == m.bottom.size() + m.top.size());

  SUBCASE("bits match the live mask") {
    size_t k = 0;
    for_each_masked(m, [&](const MaskedLayer& l) {
      const auto& layer = bits.layers[k++];
      for (size_t i = 0; i < l.aux.size(); ++i)
        CHECK(static_cast<bool>(layer.alive[i]) == (l.aux.v[i] > 0.0));
    });
  }

  SUBCASE("applying the bitset reproduces the same effective weights") {
    RecModel fresh = build_model(toy_model_config(), 23, /*masked=*/true);
    apply_mask_bitset(fresh, bits);
    size_t k = 0;
    for_each_masked(m, [&](const MaskedLayer& orig) {
      // walk the fresh model in lockstep
      size_t j = 0;
      for_each_masked(fresh, [&](const MaskedLayer& restored) {
        if (j++ != k) return;
        CHECK(pruned_count(restored) == pruned_count(orig));
      });
      ++k;
    });
  }
  fs::remove_all(dir);
}

TEST_CASE("stream record files") {
  const StreamGenerator stream(toy_stream_config(), toy_drift());
  const fs::path dir = temp_dir();
  const std::string path = (dir / "slice.stream").string();
  export_stream(stream, 100, 75, path);

  StreamFileHeader header;
  const std::vector<Batch> batches = read_stream_file(path, &header);
  CHECK(header.t0 == 100);
  CHECK(header.count == 75);
  REQUIRE(batches.size() == 5);  // batch size 16 -> 16*4 + 11

  uint64_t t = 100;
  size_t total = 0;
  for (const auto& b : batches) {
    CHECK(b.virtual_time == t);
    const Batch want = stream.batch(t, b.size());
    CHECK(b.dense.v == want.dense.v);
    CHECK(b.ids == want.ids);
    CHECK(b.labels == want.labels);
    t += static_cast<uint64_t>(b.size());
    total += static_cast<size_t>(b.size());
  }
  CHECK(total == 75);
  fs::remove_all(dir);
}

TEST_CASE("manifest round-trip and hashing") {
  RunManifest m;
  m.config_text = "[model]\ndense_dim = 16\n";
  m.config_hash = hex64(fnv1a64(m.config_text));
  m.stream_hash = "00ff";
  m.variant = "d2s";
  m.seeds = {1, 2, 3};
  m.format = "jsonl";
  m.metrics_files = {"a.jsonl", "b.jsonl", "c.jsonl"};
  m.snapshot_files = {"s1.bin"};
  m.joblog_file = "joblog.csv";
  m.status = {"ok", "ok", "ok"};
  m.last_window_relative_ce = {0.01, 0.02, 0.03};
  m.post_eval_relative_ce = {0.1, 0.2, 0.3};
  m.achieved_sparsity = {0.8, 0.81, 0.79};

  const fs::path dir = temp_dir();
  const std::string path = (dir / "manifest.json").string();
  save_manifest(m, path);
  const RunManifest back = load_manifest(path);
  CHECK(back.config_text == m.config_text);
  CHECK(back.seeds == m.seeds);
  CHECK(back.metrics_files == m.metrics_files);
  CHECK(back.last_window_relative_ce == m.last_window_relative_ce);

  SUBCASE("fnv1a64 is stable") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(hex64(0xdeadbeefull) == "00000000deadbeef");
  }
  fs::remove_all(dir);
}

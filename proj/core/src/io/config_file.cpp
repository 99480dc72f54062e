#include "d2s/io/config_file.hpp"

#include <charconv>
#include <cmath>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace d2s {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& section, const std::string& key,
                      const std::string& why) {
  throw std::invalid_argument("config error: [" + section + "] " + key + ": " +
                              why);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct KV {
  std::string section, key, value;
};

double as_double(const KV& kv) {
  try {
    size_t pos;
    double d = std::stod(kv.value, &pos);
    if (pos != kv.value.size()) throw std::invalid_argument("trailing junk");
    return d;
  } catch (const std::exception&) {
    bad(kv.section, kv.key, "expected a number, got '" + kv.value + "'");
  }
}

int64_t as_int(const KV& kv) {
  try {
    size_t pos;
    long long i = std::stoll(kv.value, &pos);
    if (pos != kv.value.size()) throw std::invalid_argument("trailing junk");
    return i;
  } catch (const std::exception&) {
    bad(kv.section, kv.key, "expected an integer, got '" + kv.value + "'");
  }
}

uint64_t as_u64(const KV& kv) {
  const int64_t i = as_int(kv);
  if (i < 0) bad(kv.section, kv.key, "must be nonnegative");
  return static_cast<uint64_t>(i);
}

bool as_bool(const KV& kv) {
  if (kv.value == "true" || kv.value == "1") return true;
  if (kv.value == "false" || kv.value == "0") return false;
  bad(kv.section, kv.key, "expected true/false, got '" + kv.value + "'");
}

std::vector<int> as_int_list(const KV& kv) {
  std::vector<int> out;
  for (const auto& s : split_list(kv.value)) {
    KV item{kv.section, kv.key, s};
    out.push_back(static_cast<int>(as_int(item)));
  }
  return out;
}

std::vector<uint64_t> as_u64_list(const KV& kv) {
  std::vector<uint64_t> out;
  for (const auto& s : split_list(kv.value)) {
    KV item{kv.section, kv.key, s};
    out.push_back(as_u64(item));
  }
  return out;
}

void apply(ExperimentConfig& cfg, const KV& kv) {
  const std::string& s = kv.section;
  const std::string& k = kv.key;
  if (s == "model") {
    auto& m = cfg.model;
    if (k == "dense_dim") m.dense_dim = static_cast<int>(as_int(kv));
    else if (k == "bottom_mlp") m.bottom_mlp = as_int_list(kv);
    else if (k == "embedding_rows") m.embedding_rows = as_int_list(kv);
    else if (k == "embedding_dim") m.embedding_dim = static_cast<int>(as_int(kv));
    else if (k == "top_mlp") m.top_mlp = as_int_list(kv);
    else if (k == "activation") {
      if (kv.value == "relu") m.activation = Activation::kRelu;
      else if (kv.value == "tanh") m.activation = Activation::kTanh;
      else bad(s, k, "expected relu or tanh");
    } else if (k == "lr") m.lr = as_double(kv);
    else if (k == "adagrad_eps") m.adagrad_eps = as_double(kv);
    else bad(s, k, "unknown key");
  } else if (s == "stream") {
    auto& st = cfg.stream;
    if (k == "dense_dim") st.dense_dim = static_cast<int>(as_int(kv));
    else if (k == "table_rows") st.table_rows = as_int_list(kv);
    else if (k == "multiplicity") st.multiplicity = as_int_list(kv);
    else if (k == "zipf_exponent") st.zipf_exponent = as_double(kv);
    else if (k == "label_noise") st.label_noise = as_double(kv);
    else if (k == "batch_size") st.batch_size = static_cast<int>(as_int(kv));
    else if (k == "seed") st.seed = as_u64(kv);
    else if (k == "teacher_embedding_dim")
      st.teacher_embedding_dim = static_cast<int>(as_int(kv));
    else if (k == "teacher_bottom") st.teacher_bottom = as_int_list(kv);
    else if (k == "teacher_top") st.teacher_top = as_int_list(kv);
    else if (k == "teacher_gain") st.teacher_gain = as_double(kv);
    else bad(s, k, "unknown key");
  } else if (s == "drift") {
    auto& d = cfg.drift;
    if (k == "anchor_times") d.anchor_times = as_u64_list(kv);
    else if (k == "drift_magnitude") d.drift_magnitude = as_double(kv);
    else if (k == "popularity_drift") d.popularity_drift = as_double(kv);
    else if (k == "seed") d.seed = as_u64(kv);
    else bad(s, k, "unknown key");
  } else if (s == "prune") {
    auto& p = cfg.prune;
    if (k == "algorithm") {
      if (kv.value == "aux") p.algorithm = PruneConfig::Algo::kAux;
      else if (kv.value == "mp") p.algorithm = PruneConfig::Algo::kMagnitude;
      else if (kv.value == "tp") p.algorithm = PruneConfig::Algo::kTaylor;
      else if (kv.value == "mop") p.algorithm = PruneConfig::Algo::kMomentum;
      else bad(s, k, "expected aux, mp, tp or mop");
    } else if (k == "lambda") p.lambda = as_double(kv);
    else if (k == "w1") p.w1 = as_double(kv);
    else if (k == "w2") p.w2 = as_double(kv);
    else if (k == "aux_lr") p.aux_lr = as_double(kv);
    else if (k == "ste") {
      if (kv.value == "linear") p.ste = PruneConfig::Ste::kLinear;
      else if (kv.value == "relu") p.ste = PruneConfig::Ste::kRelu;
      else bad(s, k, "expected linear or relu");
    } else if (k == "target_sparsity") p.target_sparsity = as_double(kv);
    else if (k == "prune_phase_samples") p.prune_phase_samples = as_u64(kv);
    else if (k == "rescale") p.rescale = as_bool(kv);
    else if (k == "signed_taylor") p.signed_taylor = as_bool(kv);
    else if (k == "momentum_decay") p.momentum_decay = as_double(kv);
    else if (k == "refresh_interval") p.refresh_interval = as_u64(kv);
    else bad(s, k, "unknown key");
  } else if (s == "d2s") {
    auto& d = cfg.d2s;
    if (k == "delta") d.delta = as_u64(kv);
    else if (k == "horizon") d.horizon = as_u64(kv);
    else if (k == "r") d.r = static_cast<int>(as_int(kv));
    else if (k == "p") d.p = static_cast<int>(as_int(kv));
    else if (k == "refresh_times") d.refresh_times = as_u64_list(kv);
    else if (k == "monitor_threshold") d.monitor_threshold = as_double(kv);
    else if (k == "prune_phase_fraction") d.prune_phase_fraction = as_double(kv);
    else bad(s, k, "unknown key");
  } else if (s == "eval") {
    auto& e = cfg.eval;
    if (k == "lookahead_window") e.lookahead_window = as_u64(kv);
    else if (k == "post_horizon_fraction") e.post_horizon_fraction = as_double(kv);
    else bad(s, k, "unknown key");
  } else {
    throw std::invalid_argument("config error: unknown section [" + s + "]");
  }
}

// shortest representation that still parses back to the same bits
std::string fmt_double(double v) {
  char buf[40];
  if (v == static_cast<double>(static_cast<long long>(v)) &&
      std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
    return buf;
  }
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::stod(buf) == v) break;
  }
  return buf;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config error: malformed section at line " +
                                    std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config error: expected key = value at line " +
                                  std::to_string(lineno));
    if (section.empty())
      throw std::invalid_argument(
          "config error: key outside any section at line " +
          std::to_string(lineno));
    KV kv{section, trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
    apply(cfg, kv);
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("I/O error: cannot open config " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_stream_sections(const ExperimentConfig& cfg) {
  std::string o;
  const auto& st = cfg.stream;
  o += "[stream]\n";
  o += "dense_dim = " + std::to_string(st.dense_dim) + "\n";
  o += "table_rows = " + join(st.table_rows) + "\n";
  o += "multiplicity = " + join(st.multiplicity) + "\n";
  o += "zipf_exponent = " + fmt_double(st.zipf_exponent) + "\n";
  o += "label_noise = " + fmt_double(st.label_noise) + "\n";
  o += "batch_size = " + std::to_string(st.batch_size) + "\n";
  o += "seed = " + std::to_string(st.seed) + "\n";
  o += "teacher_embedding_dim = " + std::to_string(st.teacher_embedding_dim) + "\n";
  o += "teacher_bottom = " + join(st.teacher_bottom) + "\n";
  o += "teacher_top = " + join(st.teacher_top) + "\n";
  o += "teacher_gain = " + fmt_double(st.teacher_gain) + "\n";
  const auto& dr = cfg.drift;
  o += "\n[drift]\n";
  o += "anchor_times = " + join(dr.anchor_times) + "\n";
  o += "drift_magnitude = " + fmt_double(dr.drift_magnitude) + "\n";
  o += "popularity_drift = " + fmt_double(dr.popularity_drift) + "\n";
  o += "seed = " + std::to_string(dr.seed) + "\n";
  return o;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string o;
  const auto& m = cfg.model;
  o += "[model]\n";
  o += "dense_dim = " + std::to_string(m.dense_dim) + "\n";
  o += "bottom_mlp = " + join(m.bottom_mlp) + "\n";
  o += "embedding_rows = " + join(m.embedding_rows) + "\n";
  o += "embedding_dim = " + std::to_string(m.embedding_dim) + "\n";
  o += "top_mlp = " + join(m.top_mlp) + "\n";
  o += std::string("activation = ") +
       (m.activation == Activation::kRelu ? "relu" : "tanh") + "\n";
  o += "lr = " + fmt_double(m.lr) + "\n";
  o += "adagrad_eps = " + fmt_double(m.adagrad_eps) + "\n";

  o += "\n" + serialize_stream_sections(cfg);

  const auto& p = cfg.prune;
  o += "\n[prune]\n";
  o += std::string("algorithm = ") +
       (p.algorithm == PruneConfig::Algo::kAux        ? "aux"
        : p.algorithm == PruneConfig::Algo::kMagnitude ? "mp"
        : p.algorithm == PruneConfig::Algo::kTaylor    ? "tp"
                                                       : "mop") +
       "\n";
  o += "lambda = " + fmt_double(p.lambda) + "\n";
  o += "w1 = " + fmt_double(p.w1) + "\n";
  o += "w2 = " + fmt_double(p.w2) + "\n";
  o += "aux_lr = " + fmt_double(p.aux_lr) + "\n";
  o += std::string("ste = ") +
       (p.ste == PruneConfig::Ste::kLinear ? "linear" : "relu") + "\n";
  o += "target_sparsity = " + fmt_double(p.target_sparsity) + "\n";
  o += "prune_phase_samples = " + std::to_string(p.prune_phase_samples) + "\n";
  o += std::string("rescale = ") + (p.rescale ? "true" : "false") + "\n";
  o += std::string("signed_taylor = ") + (p.signed_taylor ? "true" : "false") + "\n";
  o += "momentum_decay = " + fmt_double(p.momentum_decay) + "\n";
  o += "refresh_interval = " + std::to_string(p.refresh_interval) + "\n";

  const auto& d = cfg.d2s;
  o += "\n[d2s]\n";
  o += "delta = " + std::to_string(d.delta) + "\n";
  o += "horizon = " + std::to_string(d.horizon) + "\n";
  o += "r = " + std::to_string(d.r) + "\n";
  o += "p = " + std::to_string(d.p) + "\n";
  if (!d.refresh_times.empty())
    o += "refresh_times = " + join(d.refresh_times) + "\n";
  o += "monitor_threshold = " + fmt_double(d.monitor_threshold) + "\n";
  o += "prune_phase_fraction = " + fmt_double(d.prune_phase_fraction) + "\n";

  const auto& e = cfg.eval;
  o += "\n[eval]\n";
  o += "lookahead_window = " + std::to_string(e.lookahead_window) + "\n";
  o += "post_horizon_fraction = " + fmt_double(e.post_horizon_fraction) + "\n";
  return o;
}

}  // namespace d2s

#include "d2s/io/snapshot.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace d2s {

namespace {

constexpr char kMagic[8] = {'D', '2', 'S', 'S', 'N', 'A', 'P', '1'};
constexpr uint32_t kVersion = 1;

void wr(std::ostream& os, const void* p, size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
void wr_u32(std::ostream& os, uint32_t v) { wr(os, &v, sizeof v); }
void wr_u64(std::ostream& os, uint64_t v) { wr(os, &v, sizeof v); }
void wr_f64(std::ostream& os, double v) { wr(os, &v, sizeof v); }

void rd(std::istream& is, void* p, size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!is) throw std::runtime_error("snapshot error: truncated file");
}
uint32_t rd_u32(std::istream& is) {
  uint32_t v;
  rd(is, &v, sizeof v);
  return v;
}
uint64_t rd_u64(std::istream& is) {
  uint64_t v;
  rd(is, &v, sizeof v);
  return v;
}
double rd_f64(std::istream& is) {
  double v;
  rd(is, &v, sizeof v);
  return v;
}

void wr_matrix(std::ostream& os, const Matrix& m) {
  wr_u32(os, static_cast<uint32_t>(m.rows));
  wr_u32(os, static_cast<uint32_t>(m.cols));
  wr(os, m.v.data(), m.v.size() * sizeof(double));
}
Matrix rd_matrix(std::istream& is) {
  const uint32_t r = rd_u32(is), c = rd_u32(is);
  Matrix m(static_cast<int>(r), static_cast<int>(c));
  rd(is, m.v.data(), m.v.size() * sizeof(double));
  return m;
}

void wr_vector(std::ostream& os, const Vector& v) {
  wr_u64(os, v.size());
  wr(os, v.data(), v.size() * sizeof(double));
}
Vector rd_vector(std::istream& is) {
  Vector v(rd_u64(is));
  rd(is, v.data(), v.size() * sizeof(double));
  return v;
}

void wr_ints(std::ostream& os, const std::vector<int>& v) {
  wr_u32(os, static_cast<uint32_t>(v.size()));
  for (int x : v) wr_u32(os, static_cast<uint32_t>(x));
}
std::vector<int> rd_ints(std::istream& is) {
  std::vector<int> v(rd_u32(is));
  for (auto& x : v) x = static_cast<int>(rd_u32(is));
  return v;
}

void wr_fc(std::ostream& os, const FcLayer& l) {
  const uint8_t masked = fc_is_masked(l) ? 1 : 0;
  wr(os, &masked, 1);
  if (masked) {
    const auto& ml = std::get<MaskedLayer>(l);
    wr_matrix(os, ml.theta);
    wr_vector(os, ml.bias);
    wr_matrix(os, ml.theta_acc);
    wr_vector(os, ml.bias_acc);
    wr_matrix(os, ml.aux);
    wr_matrix(os, ml.momentum);
  } else {
    const auto& d = std::get<DenseParam>(l);
    wr_matrix(os, d.values);
    wr_vector(os, d.bias);
    wr_matrix(os, d.acc);
    wr_vector(os, d.bias_acc);
  }
}

FcLayer rd_fc(std::istream& is) {
  uint8_t masked;
  rd(is, &masked, 1);
  if (masked) {
    Matrix theta = rd_matrix(is);
    MaskedLayer ml(theta.rows, theta.cols);
    ml.theta = std::move(theta);
    ml.bias = rd_vector(is);
    ml.theta_acc = rd_matrix(is);
    ml.bias_acc = rd_vector(is);
    ml.aux = rd_matrix(is);
    ml.momentum = rd_matrix(is);
    return ml;
  }
  Matrix values = rd_matrix(is);
  DenseParam d(values.rows, values.cols);
  d.values = std::move(values);
  d.bias = rd_vector(is);
  d.acc = rd_matrix(is);
  d.bias_acc = rd_vector(is);
  return d;
}

}  // namespace

void save_snapshot(const RecModel& model, std::ostream& os) {
  wr(os, kMagic, sizeof kMagic);
  wr_u32(os, kVersion);
  const auto& cfg = model.cfg;
  wr_u32(os, static_cast<uint32_t>(cfg.dense_dim));
  wr_ints(os, cfg.bottom_mlp);
  wr_ints(os, cfg.embedding_rows);
  wr_u32(os, static_cast<uint32_t>(cfg.embedding_dim));
  wr_ints(os, cfg.top_mlp);
  wr_u32(os, cfg.activation == Activation::kRelu ? 0u : 1u);
  wr_f64(os, cfg.lr);
  wr_f64(os, cfg.adagrad_eps);
  wr_u64(os, model.virtual_time);

  wr_u32(os, static_cast<uint32_t>(model.bottom.size()));
  for (const auto& l : model.bottom) wr_fc(os, l);
  wr_u32(os, static_cast<uint32_t>(model.tables.size()));
  for (const auto& t : model.tables) {
    wr_matrix(os, t.table);
    wr_matrix(os, t.acc);
  }
  wr_u32(os, static_cast<uint32_t>(model.top.size()));
  for (const auto& l : model.top) wr_fc(os, l);
  wr_u32(os, 0xD25E17D2u);  // trailer sentinel
  if (!os) throw std::runtime_error("I/O error: snapshot write failed");
}

RecModel load_snapshot(std::istream& is) {
  char magic[8];
  rd(is, magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("snapshot error: bad magic");
  if (rd_u32(is) != kVersion)
    throw std::runtime_error("snapshot error: unsupported version");

  RecModel m;
  m.cfg.dense_dim = static_cast<int>(rd_u32(is));
  m.cfg.bottom_mlp = rd_ints(is);
  m.cfg.embedding_rows = rd_ints(is);
  m.cfg.embedding_dim = static_cast<int>(rd_u32(is));
  m.cfg.top_mlp = rd_ints(is);
  m.cfg.activation = rd_u32(is) == 0 ? Activation::kRelu : Activation::kTanh;
  m.cfg.lr = rd_f64(is);
  m.cfg.adagrad_eps = rd_f64(is);
  m.virtual_time = rd_u64(is);

  const uint32_t n_bottom = rd_u32(is);
  for (uint32_t i = 0; i < n_bottom; ++i) m.bottom.push_back(rd_fc(is));
  const uint32_t n_tables = rd_u32(is);
  for (uint32_t i = 0; i < n_tables; ++i) {
    Matrix table = rd_matrix(is);
    EmbeddingTable t(table.rows, table.cols);
    t.table = std::move(table);
    t.acc = rd_matrix(is);
    m.tables.push_back(std::move(t));
  }
  const uint32_t n_top = rd_u32(is);
  for (uint32_t i = 0; i < n_top; ++i) m.top.push_back(rd_fc(is));
  if (rd_u32(is) != 0xD25E17D2u)
    throw std::runtime_error("snapshot error: bad trailer");
  return m;
}

void save_snapshot(const RecModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("I/O error: cannot open " + path);
  save_snapshot(model, os);
}

RecModel load_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("I/O error: cannot open " + path);
  return load_snapshot(is);
}

}  // namespace d2s

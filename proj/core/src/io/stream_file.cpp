#include "d2s/io/stream_file.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace d2s {

namespace {
constexpr char kMagic[8] = {'D', '2', 'S', 'S', 'T', 'R', 'M', '1'};

void wr(std::ostream& os, const void* p, size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
template <class T>
void wr_pod(std::ostream& os, T v) {
  wr(os, &v, sizeof v);
}
void rd(std::istream& is, void* p, size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!is) throw std::runtime_error("stream file error: truncated file");
}
template <class T>
T rd_pod(std::istream& is) {
  T v;
  rd(is, &v, sizeof v);
  return v;
}
}  // namespace

void export_stream(const StreamGenerator& stream, uint64_t t0, uint64_t count,
                   const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("I/O error: cannot open " + path);
  const auto& cfg = stream.config();
  const uint32_t bsz = static_cast<uint32_t>(cfg.batch_size);
  wr(os, kMagic, sizeof kMagic);
  wr_pod<uint32_t>(os, 1);  // version
  wr_pod<uint32_t>(os, static_cast<uint32_t>(cfg.dense_dim));
  wr_pod<uint32_t>(os, static_cast<uint32_t>(cfg.table_rows.size()));
  wr_pod<uint64_t>(os, t0);
  wr_pod<uint64_t>(os, count);
  wr_pod<uint32_t>(os, bsz);
  for (uint64_t s = t0; s < t0 + count; s += bsz) {
    const int n = static_cast<int>(
        std::min<uint64_t>(bsz, t0 + count - s));
    const Batch b = stream.batch(s, n);
    wr_pod<uint64_t>(os, b.virtual_time);
    wr_pod<uint32_t>(os, static_cast<uint32_t>(n));
    wr(os, b.dense.v.data(), b.dense.v.size() * sizeof(double));
    for (size_t f = 0; f < b.ids.size(); ++f) {
      wr_pod<uint32_t>(os, static_cast<uint32_t>(b.ids[f].size()));
      wr(os, b.offsets[f].data(), b.offsets[f].size() * sizeof(uint32_t));
      wr(os, b.ids[f].data(), b.ids[f].size() * sizeof(uint32_t));
    }
    for (double y : b.labels) wr_pod<uint8_t>(os, y > 0.5 ? 1 : 0);
  }
  if (!os) throw std::runtime_error("I/O error: write failed for " + path);
}

std::vector<Batch> read_stream_file(const std::string& path,
                                    StreamFileHeader* header) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("I/O error: cannot open " + path);
  char magic[8];
  rd(is, magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("stream file error: bad magic");
  if (rd_pod<uint32_t>(is) != 1)
    throw std::runtime_error("stream file error: unsupported version");
  StreamFileHeader h;
  h.dense_dim = rd_pod<uint32_t>(is);
  h.n_tables = rd_pod<uint32_t>(is);
  h.t0 = rd_pod<uint64_t>(is);
  h.count = rd_pod<uint64_t>(is);
  h.batch_size = rd_pod<uint32_t>(is);
  if (header) *header = h;

  std::vector<Batch> out;
  uint64_t remaining = h.count;
  while (remaining > 0) {
    Batch b;
    b.virtual_time = rd_pod<uint64_t>(is);
    const uint32_t n = rd_pod<uint32_t>(is);
    b.dense.resize(static_cast<int>(n), static_cast<int>(h.dense_dim));
    rd(is, b.dense.v.data(), b.dense.v.size() * sizeof(double));
    b.ids.resize(h.n_tables);
    b.offsets.resize(h.n_tables);
    for (uint32_t f = 0; f < h.n_tables; ++f) {
      const uint32_t total = rd_pod<uint32_t>(is);
      b.offsets[f].resize(n + 1);
      rd(is, b.offsets[f].data(), b.offsets[f].size() * sizeof(uint32_t));
      b.ids[f].resize(total);
      rd(is, b.ids[f].data(), b.ids[f].size() * sizeof(uint32_t));
    }
    b.labels.resize(n);
    for (uint32_t i = 0; i < n; ++i)
      b.labels[i] = rd_pod<uint8_t>(is) ? 1.0 : 0.0;
    remaining -= n;
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace d2s

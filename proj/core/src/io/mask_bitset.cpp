#include "d2s/io/mask_bitset.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "d2s/prune/pruning.hpp"

namespace d2s {

namespace {
constexpr char kMagic[8] = {'D', '2', 'S', 'M', 'A', 'S', 'K', '1'};
}

MaskBitset extract_mask_bitset(const RecModel& model) {
  MaskBitset out;
  for_each_masked(model, [&](const MaskedLayer& l) {
    MaskBitset::Layer layer;
    layer.rows = l.theta.rows;
    layer.cols = l.theta.cols;
    layer.alive.resize(l.aux.size());
    for (size_t i = 0; i < l.aux.size(); ++i)
      layer.alive[i] = l.aux.v[i] > 0.0 ? 1 : 0;
    out.layers.push_back(std::move(layer));
  });
  return out;
}

void save_mask_bitset(const RecModel& model, const std::string& path) {
  const MaskBitset bits = extract_mask_bitset(model);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("I/O error: cannot open " + path);
  os.write(kMagic, sizeof kMagic);
  const uint32_t n = static_cast<uint32_t>(bits.layers.size());
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (const auto& l : bits.layers) {
    const uint32_t r = static_cast<uint32_t>(l.rows);
    const uint32_t c = static_cast<uint32_t>(l.cols);
    os.write(reinterpret_cast<const char*>(&r), sizeof r);
    os.write(reinterpret_cast<const char*>(&c), sizeof c);
    std::vector<uint8_t> packed((l.alive.size() + 7) / 8, 0);
    for (size_t i = 0; i < l.alive.size(); ++i)
      if (l.alive[i]) packed[i / 8] |= static_cast<uint8_t>(1u << (i % 8));
    os.write(reinterpret_cast<const char*>(packed.data()),
             static_cast<std::streamsize>(packed.size()));
  }
  if (!os) throw std::runtime_error("I/O error: write failed for " + path);
}

MaskBitset load_mask_bitset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("I/O error: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("mask file error: bad magic");
  uint32_t n = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof n);
  MaskBitset out;
  for (uint32_t k = 0; k < n; ++k) {
    uint32_t r = 0, c = 0;
    is.read(reinterpret_cast<char*>(&r), sizeof r);
    is.read(reinterpret_cast<char*>(&c), sizeof c);
    if (!is) throw std::runtime_error("mask file error: truncated file");
    MaskBitset::Layer layer;
    layer.rows = static_cast<int>(r);
    layer.cols = static_cast<int>(c);
    const size_t count = static_cast<size_t>(r) * c;
    std::vector<uint8_t> packed((count + 7) / 8);
    is.read(reinterpret_cast<char*>(packed.data()),
            static_cast<std::streamsize>(packed.size()));
    if (!is) throw std::runtime_error("mask file error: truncated file");
    layer.alive.resize(count);
    for (size_t i = 0; i < count; ++i)
      layer.alive[i] = (packed[i / 8] >> (i % 8)) & 1u;
    out.layers.push_back(std::move(layer));
  }
  return out;
}

void apply_mask_bitset(RecModel& model, const MaskBitset& bits) {
  size_t k = 0;
  for_each_masked(model, [&](MaskedLayer& l) {
    if (k >= bits.layers.size())
      throw std::runtime_error("mask file error: too few layers");
    const auto& layer = bits.layers[k++];
    if (layer.rows != l.theta.rows || layer.cols != l.theta.cols)
      throw std::runtime_error("mask file error: layer shape mismatch");
    for (size_t i = 0; i < l.aux.size(); ++i)
      l.aux.v[i] = layer.alive[i] ? 1.0 : -1.0;
  });
  if (k != bits.layers.size())
    throw std::runtime_error("mask file error: too many layers");
}

}  // namespace d2s

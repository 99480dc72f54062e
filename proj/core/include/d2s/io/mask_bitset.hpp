#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "d2s/nn/model.hpp"

namespace d2s {

/// Packed per-layer mask bits (1 = alive), row-major flat order.
struct MaskBitset {
  struct Layer {
    int rows = 0;
    int cols = 0;
    std::vector<uint8_t> alive;  // unpacked, rows * cols entries
  };
  std::vector<Layer> layers;
};

MaskBitset extract_mask_bitset(const RecModel& model);
void save_mask_bitset(const RecModel& model, const std::string& path);
MaskBitset load_mask_bitset(const std::string& path);

/// Overwrites the aux parameters of the model's masked layers with +/-1
/// sentinels matching the bitset. Shapes must agree.
void apply_mask_bitset(RecModel& model, const MaskBitset& bits);

}  // namespace d2s

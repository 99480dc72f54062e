#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "d2s/stream/stream.hpp"

namespace d2s {

struct StreamFileHeader {
  uint32_t dense_dim = 0;
  uint32_t n_tables = 0;
  uint64_t t0 = 0;
  uint64_t count = 0;
  uint32_t batch_size = 0;
};

/// Record file of generated batches so another implementation can consume
/// identical bytes. One record per batch; layout documented in the README.
void export_stream(const StreamGenerator& stream, uint64_t t0, uint64_t count,
                   const std::string& path);

std::vector<Batch> read_stream_file(const std::string& path,
                                    StreamFileHeader* header = nullptr);

}  // namespace d2s

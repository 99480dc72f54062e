#pragma once

#include <iosfwd>
#include <string>

#include "d2s/nn/model.hpp"

namespace d2s {

/// Versioned little-endian binary container: config echo, every parameter
/// tensor, auxiliary mask parameters, optimizer and momentum state, and the
/// virtual-time counter. Round-trips bit-exactly.
void save_snapshot(const RecModel& model, std::ostream& os);
void save_snapshot(const RecModel& model, const std::string& path);
RecModel load_snapshot(std::istream& is);
RecModel load_snapshot(const std::string& path);

}  // namespace d2s

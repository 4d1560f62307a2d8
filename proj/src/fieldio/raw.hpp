#pragma once

#include <string>
#include <variant>

#include "fieldio/field.hpp"

namespace flint {

using Field = std::variant<Grid, FlowGrid>;

// FLG1 raw format: magic "FLG1", u8 spatial rank, u8 component count,
// little-endian u32 extents, then float32 little-endian values in
// component-major, row-major spatial order.
void write_raw(const Field& field, const std::string& path);
Field read_raw(const std::string& path);

Grid read_raw_grid(const std::string& path);
FlowGrid read_raw_flow(const std::string& path);

}  // namespace flint

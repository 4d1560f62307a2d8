#pragma once

#include <string>

#include "fieldio/field.hpp"

namespace flint {

// Plain-text manifest, one comma-separated line per member: the numeric
// sim-param vector first, then scalar field paths in time order, then
// optional flow paths prefixed "flow:". Paths are relative to the manifest.
// Field files use the FLG1 raw format.
void write_ensemble(const EnsembleSet& es, const std::string& dir,
                    const std::string& manifest_name = "ensemble.csv");

EnsembleSet read_ensemble(const std::string& manifest_path);

}  // namespace flint

// Binary field snapshots and their JSON manifests.
//
// A block is the line "PRANDTL-LAB/1 field", a line "nx ny", then nx*ny little-endian float64
// values in row-major order. A snapshot file is a sequence of blocks.
#pragma once

#include <string>
#include <vector>

#include "prandtl_lab/core_grid.hpp"

namespace plab {

struct NamedField {
    std::string name;
    const Field2D* field;
};

// Writes the blocks back to back and returns the byte offset of each block.
std::vector<std::size_t> write_snapshot(const std::string& path, const std::vector<NamedField>& fields);
std::vector<Field2D> read_snapshot(const std::string& path);

// Snapshot plus "<path>.json" naming each block with its offset and shape. extra_json, when
// not empty, must be a JSON object; its keys are merged into the manifest.
void write_snapshot_with_manifest(const std::string& path, const std::vector<NamedField>& fields,
                                  const std::string& extra_json = "");

void write_text(const std::string& path, const std::string& text);

}  // namespace plab

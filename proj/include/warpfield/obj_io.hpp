// ASCII OBJ reader/writer. Only `v` and `f` records are interpreted; faces
// with more than three vertices are fan-split. Indices are 1-based on disk,
// 0-based in memory.
#pragma once

#include <string>

#include "warpfield/mesh.hpp"

namespace warpfield {

// Throws std::runtime_error with the offending line number on parse errors.
TriMesh load_obj(const std::string& path);

// Coordinates are written with enough digits to round-trip within 1e-6.
void save_obj(const TriMesh& mesh, const std::string& path);

}  // namespace warpfield

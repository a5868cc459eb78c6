// Correspondence-preserving pair decimation. Quadrics and the collapse order
// are computed on the canonical mesh only; the identical collapse sequence is
// replayed on the deformed mesh so the output is still a valid PosedPair.
#pragma once

#include "warpfield/mesh.hpp"

namespace warpfield {

struct DecimateResult {
    PosedPair pair;
    CorrespondenceMap correspondence;  // partitions the original vertex range
};

// Edge-collapse simplification down to at most `target_faces` faces.
// Collapse placement is the optimal quadric position on the canonical mesh
// and the endpoint midpoint on the deformed mesh. Collapses that would break
// the manifold (link condition) or flip canonical face normals are skipped.
// Throws if the mesh would drop below 4 faces or no further collapse can
// reach the target.
DecimateResult decimate_pair(const PosedPair& pair, int target_faces);

}  // namespace warpfield

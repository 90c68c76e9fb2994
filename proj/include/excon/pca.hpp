#pragma once

#include <array>
#include <vector>

#include "excon/types.hpp"

namespace excon {

// Deterministic 2-D projection for inspecting embeddings: centered data
// projected onto the top two principal directions found by power iteration
// (fixed init, 1000 iterations or 1e-10 tolerance). The largest-magnitude
// loading of each direction is made positive. Zero-variance data projects to
// the origin.
std::vector<std::array<double, 2>> project_pca(const std::vector<std::vector<double>>& vectors);

std::vector<std::array<double, 2>> project_pca(const std::vector<FeatureVector>& vectors);

}  // namespace excon

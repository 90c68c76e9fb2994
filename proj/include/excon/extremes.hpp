#pragma once

#include <filesystem>
#include <span>
#include <map>
#include <string>
#include <vector>

#include "excon/types.hpp"

namespace excon {

// One extreme per class: the member feature vector attaining the
// complete-linkage maximum against the union of all other classes.
struct ExtremeSet {
    struct Extreme {
        std::string source_id;
        double distance = 0.0;  // attained max distance to the other classes
        std::vector<double> vector;
    };
    std::map<std::string, Extreme> by_class;

    const Extreme& of(const std::string& label) const;
    std::size_t dim() const { return by_class.empty() ? 0 : by_class.begin()->second.vector.size(); }
};

double euclidean_distance(std::span<const double> a, std::span<const double> b);

// Exhaustive one-vs-all scan over the training features; ties break toward
// the smallest dataset index so models are reproducible.
ExtremeSet derive_extremes(const std::vector<FeatureVector>& features);

void save_extremes(const ExtremeSet& extremes, const std::filesystem::path& path);
ExtremeSet load_extremes(const std::filesystem::path& path);

}  // namespace excon

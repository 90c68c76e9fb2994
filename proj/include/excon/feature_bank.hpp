#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "excon/types.hpp"

namespace excon {

// A named set of 22 scalar series features. Pluggable so a simplified,
// fully auditable bank can stand in during oracle testing; pipelines use the
// canonical catch22 bank.
struct FeatureBank {
    using Evaluator = std::function<double(std::span<const double>)>;

    std::string name;
    std::vector<std::string> feature_names;  // exactly 22
    std::vector<Evaluator> evaluators;

    std::size_t size() const { return evaluators.size(); }

    static const FeatureBank& catch22();
    static FeatureBank by_name(const std::string& name);
};

// 22 features of one channel. The series is z-scored first (reference
// convention); constant channels and non-finite feature outputs sanitize
// to 0, so every result is finite. Throws DataError for series shorter
// than 2.
std::vector<double> extract_channel_features(std::span<const double> series, const FeatureBank& bank);

// Channel-major concatenation: entries [22n .. 22n+21] belong to channel n.
FeatureVector extract_instance_features(const MvtsInstance& instance, const FeatureBank& bank);

// One vector per instance, dataset order preserved; parallel across
// instances with output identical to sequential evaluation.
std::vector<FeatureVector> extract_dataset_features(const LabeledDataset& data, const FeatureBank& bank);

}  // namespace excon

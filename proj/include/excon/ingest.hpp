#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "excon/types.hpp"

namespace excon {

// Manifest JSON (schema_version 1) describing a dataset on disk: a list of
// {id, path, category, label} entries plus the common shape and channel
// names. Per-instance files are headerless CSV, one row per timestamp,
// N columns; missing values are empty fields or the literal NaN.
struct DatasetManifest {
    int schema_version = 1;
    struct Entry {
        std::string id;
        std::string path;  // relative to the manifest file
        std::string category;
        std::string label;  // may be empty; then derived from category
    };
    std::vector<Entry> entries;
    std::size_t tau = 0;
    std::size_t n_channels = 0;
    std::vector<std::string> channel_names;
};

// Config for the deterministic synthetic imbalanced generator. Negatives are
// per-channel AR(1) processes; positives additionally carry a sinusoid, so
// the classes differ in autocorrelation and periodicity.
struct SynthConfig {
    std::size_t n_instances = 400;
    double imbalance = 0.05;  // positive-class fraction, in (0,1)
    std::size_t tau = 64;
    std::size_t n_channels = 4;
    double ar_neg = 0.2;
    double ar_pos = 0.9;
    double sin_amp_pos = 1.0;
    double sin_period_pos = 20.0;
    double noise_std = 1.0;
    std::uint64_t seed = 42;
    std::string positive_label = "F";
    std::string negative_label = "NF";
    std::string positive_category = "M";
    std::string negative_category = "FQ";

    void validate() const;
};

LabeledDataset load_manifest_dataset(const std::filesystem::path& manifest_path,
                                     const LabelScheme& scheme = LabelScheme::flare_default());

// Writes manifest + per-instance CSV files under dir; returns manifest path.
std::filesystem::path save_manifest_dataset(const LabeledDataset& data,
                                            const std::filesystem::path& dir,
                                            const std::string& name = "dataset");

// Cuts a long recording into fixed windows starting at 0, step, 2*step, ...
// Each slice is an exact submatrix copy; labels are not assigned here.
std::vector<MvtsInstance> slice_windows(const Matrix& long_series, std::size_t obs_len,
                                        std::size_t step, const std::string& id_prefix = "slice");

LabeledDataset generate_synthetic(const SynthConfig& cfg);

void write_features_csv(const std::vector<FeatureVector>& features, const std::filesystem::path& path);
std::vector<FeatureVector> read_features_csv(const std::filesystem::path& path);

}  // namespace excon

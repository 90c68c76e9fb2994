#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "excon/embedder.hpp"
#include "excon/heads.hpp"
#include "excon/ingest.hpp"
#include "excon/metrics.hpp"
#include "excon/types.hpp"

namespace excon {

struct PipelineConfig {
    std::filesystem::path train_manifest;
    std::filesystem::path test_manifest;
    std::filesystem::path out_dir;
    LabelScheme scheme = LabelScheme::flare_default();
    std::string bank_name = "c22";
    TrainConfig train;
    std::string head_kind = "lr";  // lr | knn
    std::size_t knn_k = 5;
    double lr_lambda = 1e-4;
    std::size_t lr_max_iter = 1000;
    double lr_tol = 1e-6;
    std::string positive_class = "F";
    std::set<std::string> keep_categories;  // train-side filter; empty = keep all
    std::size_t impute_k = 3;
    std::uint64_t seed = 42;
};

struct Prediction {
    std::string id;
    std::string true_label;
    std::string pred_label;
    std::vector<double> scores;  // per class, in `classes` order
};

struct PredictionSet {
    std::vector<std::string> classes;
    std::vector<Prediction> rows;
};

void write_predictions_csv(const PredictionSet& preds, const std::filesystem::path& path);
PredictionSet read_predictions_csv(const std::filesystem::path& path);

// Binary-vs-positive-class evaluation of a prediction set, AUC from the
// positive-class score column.
MetricReport evaluate_predictions(const PredictionSet& preds, const std::string& positive_class);

struct PipelineResult {
    MetricReport report;
    std::filesystem::path report_json;
    std::filesystem::path run_manifest;
};

// preprocess -> extract -> extremes -> train -> embed -> fit head -> predict
// -> report, with every stage artifact written under cfg.out_dir. Any stage
// error aborts with the stage name; completed/failed stages are flagged in
// run_manifest.json.
PipelineResult run_pipeline(const PipelineConfig& cfg);

// Preprocessing as the pipeline applies it (category filter is train-only).
LabeledDataset preprocess_dataset(const LabeledDataset& data, const std::set<std::string>& keep_categories,
                                  std::size_t impute_k, bool is_train);

}  // namespace excon

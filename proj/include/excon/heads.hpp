#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "excon/embedder.hpp"
#include "excon/matrix.hpp"
#include "excon/types.hpp"

namespace excon {

// Per-dimension standardization with training-set statistics; zero-variance
// dimensions pass through as 0.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> std;

    static Standardizer fit(const std::vector<FeatureVector>& x);
    std::vector<double> apply(std::span<const double> v) const;
};

struct LogisticModel {
    std::vector<std::string> classes;  // sorted; argmax ties resolve to the first
    Matrix weights;                    // K x d, in standardized space
    std::vector<double> intercepts;    // K, unregularized
    Standardizer standardizer;
    double lambda = 1e-4;
    std::size_t iterations = 0;        // accepted line-search steps
};

// Full-batch gradient descent with Armijo backtracking on
// mean cross-entropy + (lambda/2)*||W||^2, zero init, so fits are
// deterministic. Stops when the gradient norm drops below tol.
LogisticModel fit_logistic(const std::vector<FeatureVector>& x, double lambda = 1e-4,
                           std::size_t max_iter = 1000, double tol = 1e-6);

// Rows of per-class probabilities (classes in model order), each summing to 1.
Matrix predict_logistic(const LogisticModel& model, const std::vector<FeatureVector>& x);

struct KnnModel {
    std::size_t k = 5;
    std::vector<std::string> classes;
    std::vector<std::vector<double>> train_vectors;  // standardized
    std::vector<std::string> train_labels;
    Standardizer standardizer;
};

KnnModel fit_knn(const std::vector<FeatureVector>& x, std::size_t k = 5);

struct KnnPrediction {
    std::vector<std::string> labels;
    Matrix scores;  // per-class vote fractions, classes in model order
};

// Majority vote among the k nearest by Euclidean distance; distance ties
// break toward the smaller training index, vote ties toward the smallest
// label.
KnnPrediction knn_predict(const KnnModel& model, const std::vector<FeatureVector>& x);

// Baseline representations.
std::vector<double> flatten_mvts(const MvtsInstance& instance);      // MVTS2V, time-major
std::vector<double> last_timestamp(const MvtsInstance& instance);    // LPVV

// ROCKET: random dilated convolution kernels, each assigned one channel;
// features are (ppv, max) per kernel.
struct RocketKernel {
    int length = 9;
    std::vector<double> weights;  // mean-centered gaussian draws
    double bias = 0.0;
    int dilation = 1;
    bool padding = false;
    std::size_t channel = 0;
};

struct RocketTransform {
    std::vector<RocketKernel> kernels;
    std::uint64_t seed = 42;

    std::size_t feature_count() const { return 2 * kernels.size(); }
};

RocketTransform make_rocket(std::size_t n_kernels, std::size_t tau, std::size_t n_channels,
                            std::uint64_t seed);

// Features ordered kernel-major (ppv, max). Kernels that do not fit the
// (possibly padded) series are skipped with (0,0) features; skipped counts
// how many.
std::vector<double> rocket_transform(const RocketTransform& t, const MvtsInstance& instance,
                                     std::size_t* skipped = nullptr);

std::vector<FeatureVector> rocket_transform_dataset(const RocketTransform& t, const LabeledDataset& data,
                                                    std::size_t* skipped = nullptr);

// SEQ baseline: recurrent cell + softmax head trained end-to-end with
// class-weighted cross-entropy; reuses the embedder's cell and optimizer.
struct SeqClassifier {
    CellParams cell;
    Matrix head_weights;  // K x H
    std::vector<double> head_bias;
    std::vector<std::string> classes;
    double dropout = 0.0;
    std::uint64_t seed = 42;
    std::vector<double> training_log;  // per-epoch eval-mode weighted CE
};

SeqClassifier train_seq_classifier(const LabeledDataset& data, const TrainConfig& cfg);

// Rows of softmax probabilities per instance, classes in model order.
Matrix seq_predict(const SeqClassifier& model, const LabeledDataset& data);

// Head model files: JSON with schema_version, kind and parameters.
void save_logistic(const LogisticModel& model, const std::filesystem::path& path);
LogisticModel load_logistic(const std::filesystem::path& path);
void save_knn(const KnnModel& model, const std::filesystem::path& path);
KnnModel load_knn(const std::filesystem::path& path);

}  // namespace excon

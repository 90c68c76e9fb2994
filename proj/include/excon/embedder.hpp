#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "excon/extremes.hpp"
#include "excon/matrix.hpp"
#include "excon/rng.hpp"
#include "excon/types.hpp"

namespace excon {

enum class CellKind { kLstm, kGru, kRnn };

CellKind cell_kind_from_string(const std::string& s);
std::string to_string(CellKind kind);

// Single recurrent layer. Gate order: lstm [input, forget, output, candidate],
// gru [update, reset, candidate], rnn [candidate].
struct CellParams {
    CellKind kind = CellKind::kLstm;
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    std::vector<Matrix> w;               // per gate, H x N
    std::vector<Matrix> u;               // per gate, H x H
    std::vector<std::vector<double>> b;  // per gate, H

    std::size_t n_gates() const;
};

// Everything the backward pass needs from one forward pass.
struct CellCache {
    std::vector<std::vector<double>> h;      // per timestep
    std::vector<std::vector<double>> c;      // lstm cell state
    std::vector<std::vector<std::vector<double>>> gates;  // [t][gate][unit]
};

struct TrainConfig {
    std::size_t epochs = 30;
    double learning_rate = 1e-2;
    std::size_t batch_size = 64;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double dropout = 0.5;
    std::size_t hidden_dim = 128;
    CellKind cell_kind = CellKind::kLstm;
    std::uint64_t seed = 42;
    bool shuffle = true;
    double clip_norm = 5.0;

    void validate() const;
};

struct EmbedderModel {
    CellParams cell;
    Matrix projection;                   // d x H
    std::vector<double> projection_bias; // d
    double dropout = 0.5;
    std::size_t output_dim = 0;
    std::uint64_t seed = 42;
    std::vector<double> training_log;  // eval-mode full-dataset loss, epoch 0..E
    std::vector<int> clip_log;         // batches clipped per epoch
    ExtremeSet extremes;
};

// Mutable views over every parameter tensor, in a fixed order shared with
// gradients and Adam state.
std::vector<std::span<double>> cell_param_views(CellParams& cell);
std::vector<std::span<double>> model_param_views(EmbedderModel& model);

struct GradBag {
    std::vector<std::vector<double>> tensors;

    static GradBag like(const std::vector<std::span<double>>& views);
    void zero();
    double l2_norm() const;
    void scale(double s);
};

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    long step = 0;

    static AdamState like(const std::vector<std::span<double>>& views);
};

// One Adam transition: bias-corrected moments, params -= lr * m^ / (sqrt(v^)+eps).
void adam_step(std::vector<std::span<double>> params, const GradBag& grads, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

// Runs the recurrence over x_seq (tau x N) from zero initial state; returns
// the final hidden state. Cache is optional and only needed for backward.
std::vector<double> cell_forward(const CellParams& cell, const Matrix& x_seq, CellCache* cache);

// Accumulates cell gradients (gate order as in cell_param_views) given the
// loss gradient at the final hidden state.
void cell_backward(const CellParams& cell, const Matrix& x_seq, const CellCache& cache,
                   std::span<const double> d_h_final, GradBag& grads, std::size_t grad_offset = 0);

enum class ForwardMode { kTrain, kEval };

struct ModelCache {
    CellCache cell;
    std::vector<double> h_final;
    std::vector<double> dropout_scale;  // per unit: 0 or 1/(1-p); empty in eval
    std::vector<double> embedding;
};

// e = P * dropout(h_final) + b. Train mode draws an inverted-dropout mask
// from mask_rng; eval mode uses h_final exactly.
std::vector<double> model_forward(const EmbedderModel& model, const Matrix& x_seq, ForwardMode mode,
                                  CounterRng* mask_rng, ModelCache* cache);

// Eq.-style extreme reconstruction loss: sum over classes of the mean squared
// distance between each embedding and its class extreme.
double extreme_reconstruction_loss(const std::vector<std::pair<std::vector<double>, std::string>>& embeddings,
                                   const ExtremeSet& extremes);

// Accumulates gradients of sum_m weight(label_m) * ||e_m - E_label||^2 for one
// batch; caches must come from matching train-mode forwards. Returns the batch
// loss.
double model_backward(const EmbedderModel& model, const std::vector<const MvtsInstance*>& batch,
                      const ExtremeSet& extremes, const std::vector<ModelCache>& caches,
                      const std::map<std::string, double>& class_weights, GradBag& grads);

EmbedderModel train_embedder(const LabeledDataset& data, const ExtremeSet& extremes, const TrainConfig& cfg);

// Eval-mode embedding of every instance, order preserved.
std::vector<FeatureVector> embed_dataset(const EmbedderModel& model, const LabeledDataset& data);

void save_model(const EmbedderModel& model, const std::filesystem::path& path);
EmbedderModel load_model(const std::filesystem::path& path);

}  // namespace excon

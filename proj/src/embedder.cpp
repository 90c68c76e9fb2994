#include "excon/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "excon/errors.hpp"
#include "excon/parallel.hpp"

namespace excon {

using nlohmann::json;

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool all_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace

CellKind cell_kind_from_string(const std::string& s) {
    if (s == "lstm") return CellKind::kLstm;
    if (s == "gru") return CellKind::kGru;
    if (s == "rnn") return CellKind::kRnn;
    throw ConfigError("unknown cell kind '" + s + "' (expected lstm, gru or rnn)");
}

std::string to_string(CellKind kind) {
    switch (kind) {
        case CellKind::kLstm: return "lstm";
        case CellKind::kGru: return "gru";
        case CellKind::kRnn: return "rnn";
    }
    return "lstm";
}

std::size_t CellParams::n_gates() const {
    switch (kind) {
        case CellKind::kLstm: return 4;
        case CellKind::kGru: return 3;
        case CellKind::kRnn: return 1;
    }
    return 1;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("train: dropout must be in [0,1)");
    if (hidden_dim < 1) throw ConfigError("train: hidden_dim must be >= 1");
    if (!(clip_norm > 0.0)) throw ConfigError("train: clip_norm must be > 0");
}

std::vector<std::span<double>> cell_param_views(CellParams& cell) {
    std::vector<std::span<double>> views;
    for (auto& m : cell.w) views.emplace_back(m.data());
    for (auto& m : cell.u) views.emplace_back(m.data());
    for (auto& v : cell.b) views.emplace_back(v);
    return views;
}

std::vector<std::span<double>> model_param_views(EmbedderModel& model) {
    auto views = cell_param_views(model.cell);
    views.emplace_back(model.projection.data());
    views.emplace_back(model.projection_bias);
    return views;
}

GradBag GradBag::like(const std::vector<std::span<double>>& views) {
    GradBag g;
    g.tensors.reserve(views.size());
    for (const auto& v : views) g.tensors.emplace_back(v.size(), 0.0);
    return g;
}

void GradBag::zero() {
    for (auto& t : tensors) std::fill(t.begin(), t.end(), 0.0);
}

double GradBag::l2_norm() const {
    double s = 0.0;
    for (const auto& t : tensors) {
        for (double v : t) s += v * v;
    }
    return std::sqrt(s);
}

void GradBag::scale(double s) {
    for (auto& t : tensors) {
        for (double& v : t) v *= s;
    }
}

AdamState AdamState::like(const std::vector<std::span<double>>& views) {
    AdamState a;
    a.m.reserve(views.size());
    a.v.reserve(views.size());
    for (const auto& view : views) {
        a.m.emplace_back(view.size(), 0.0);
        a.v.emplace_back(view.size(), 0.0);
    }
    return a;
}

void adam_step(std::vector<std::span<double>> params, const GradBag& grads, AdamState& state,
               double lr, double beta1, double beta2, double epsilon) {
    if (params.size() != grads.tensors.size() || params.size() != state.m.size()) {
        throw NumericError("adam_step: parameter/gradient/state tensor count mismatch");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t t = 0; t < params.size(); ++t) {
        auto& p = params[t];
        const auto& g = grads.tensors[t];
        auto& m = state.m[t];
        auto& v = state.v[t];
        if (p.size() != g.size()) throw NumericError("adam_step: tensor shape mismatch");
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p[i] -= lr * m_hat / (std::sqrt(v_hat) + epsilon);
        }
    }
}

std::vector<double> cell_forward(const CellParams& cell, const Matrix& x_seq, CellCache* cache) {
    const std::size_t tau = x_seq.rows();
    const std::size_t h_dim = cell.hidden_dim;
    const std::size_t n_gates = cell.n_gates();
    if (x_seq.cols() != cell.input_dim) {
        throw DataError("cell_forward: input has " + std::to_string(x_seq.cols()) +
                        " channels, cell expects " + std::to_string(cell.input_dim));
    }

    std::vector<double> h(h_dim, 0.0), c(h_dim, 0.0);
    std::vector<std::vector<double>> pre(n_gates, std::vector<double>(h_dim, 0.0));
    if (cache) {
        cache->h.assign(tau, {});
        cache->c.assign(cell.kind == CellKind::kLstm ? tau : 0, {});
        cache->gates.assign(tau, {});
    }

    for (std::size_t t = 0; t < tau; ++t) {
        const double* x_t = x_seq.row_ptr(t);
        for (std::size_t g = 0; g < n_gates; ++g) {
            auto& p = pre[g];
            std::copy(cell.b[g].begin(), cell.b[g].end(), p.begin());
            matvec_acc(cell.w[g], x_t, p.data());
            if (cell.kind != CellKind::kGru || g != 2) {
                matvec_acc(cell.u[g], h.data(), p.data());
            }
        }
        switch (cell.kind) {
            case CellKind::kLstm: {
                auto &pi = pre[0], &pf = pre[1], &po = pre[2], &pg = pre[3];
                for (std::size_t i = 0; i < h_dim; ++i) {
                    const double gi = logistic(pi[i]);
                    const double gf = logistic(pf[i]);
                    const double go = logistic(po[i]);
                    const double gg = std::tanh(pg[i]);
                    pi[i] = gi;
                    pf[i] = gf;
                    po[i] = go;
                    pg[i] = gg;
                    c[i] = gf * c[i] + gi * gg;
                    h[i] = go * std::tanh(c[i]);
                }
                break;
            }
            case CellKind::kGru: {
                // candidate gets U_h * (r o h_prev); the r-gated product is
                // folded in here rather than in the generic matvec above
                auto &pz = pre[0], &pr = pre[1], &ph = pre[2];
                std::vector<double> rh(h_dim);
                for (std::size_t i = 0; i < h_dim; ++i) {
                    pz[i] = logistic(pz[i]);
                    pr[i] = logistic(pr[i]);
                    rh[i] = pr[i] * h[i];
                }
                matvec_acc(cell.u[2], rh.data(), ph.data());
                for (std::size_t i = 0; i < h_dim; ++i) {
                    ph[i] = std::tanh(ph[i]);
                    h[i] = pz[i] * h[i] + (1.0 - pz[i]) * ph[i];
                }
                break;
            }
            case CellKind::kRnn: {
                for (std::size_t i = 0; i < h_dim; ++i) {
                    pre[0][i] = std::tanh(pre[0][i]);
                    h[i] = pre[0][i];
                }
                break;
            }
        }
        if (cache) {
            cache->h[t] = h;
            if (cell.kind == CellKind::kLstm) cache->c[t] = c;
            cache->gates[t] = pre;
        }
    }
    if (!all_finite(h) || (cell.kind == CellKind::kLstm && !all_finite(c))) {
        throw NumericError("cell_forward: non-finite activation (overflow in recurrence)");
    }
    return h;
}

void cell_backward(const CellParams& cell, const Matrix& x_seq, const CellCache& cache,
                   std::span<const double> d_h_final, GradBag& grads, std::size_t grad_offset) {
    const std::size_t tau = x_seq.rows();
    const std::size_t h_dim = cell.hidden_dim;
    const std::size_t n_dim = cell.input_dim;
    const std::size_t n_gates = cell.n_gates();
    if (cache.h.size() != tau) throw NumericError("cell_backward: cache does not match the input sequence");

    auto w_grad = [&](std::size_t g) { return grads.tensors[grad_offset + g].data(); };
    auto u_grad = [&](std::size_t g) { return grads.tensors[grad_offset + n_gates + g].data(); };
    auto b_grad = [&](std::size_t g) { return grads.tensors[grad_offset + 2 * n_gates + g].data(); };

    auto acc_outer = [&](double* target, const double* rows, const double* cols, std::size_t n_rows,
                         std::size_t n_cols) {
        for (std::size_t r = 0; r < n_rows; ++r) {
            const double a = rows[r];
            double* row = target + r * n_cols;
            for (std::size_t c2 = 0; c2 < n_cols; ++c2) row[c2] += a * cols[c2];
        }
    };

    std::vector<double> dh(d_h_final.begin(), d_h_final.end());
    std::vector<double> dc(h_dim, 0.0);
    std::vector<double> dh_prev(h_dim), dpre(h_dim), tmp(h_dim);
    const std::vector<double> zeros(h_dim, 0.0);

    for (std::size_t ti = tau; ti-- > 0;) {
        const double* x_t = x_seq.row_ptr(ti);
        const std::vector<double>& h_prev = ti > 0 ? cache.h[ti - 1] : zeros;
        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);

        switch (cell.kind) {
            case CellKind::kLstm: {
                const auto& gi = cache.gates[ti][0];
                const auto& gf = cache.gates[ti][1];
                const auto& go = cache.gates[ti][2];
                const auto& gg = cache.gates[ti][3];
                const auto& c_t = cache.c[ti];
                const std::vector<double>& c_prev = ti > 0 ? cache.c[ti - 1] : zeros;
                // output gate, then cell-state path
                for (std::size_t i = 0; i < h_dim; ++i) {
                    const double tc = std::tanh(c_t[i]);
                    dpre[i] = dh[i] * tc * go[i] * (1.0 - go[i]);
                    dc[i] += dh[i] * go[i] * (1.0 - tc * tc);
                }
                acc_outer(w_grad(2), dpre.data(), x_t, h_dim, n_dim);
                acc_outer(u_grad(2), dpre.data(), h_prev.data(), h_dim, h_dim);
                for (std::size_t i = 0; i < h_dim; ++i) b_grad(2)[i] += dpre[i];
                matvec_transpose_acc(cell.u[2], dpre.data(), dh_prev.data());
                // input gate
                for (std::size_t i = 0; i < h_dim; ++i) dpre[i] = dc[i] * gg[i] * gi[i] * (1.0 - gi[i]);
                acc_outer(w_grad(0), dpre.data(), x_t, h_dim, n_dim);
                acc_outer(u_grad(0), dpre.data(), h_prev.data(), h_dim, h_dim);
                for (std::size_t i = 0; i < h_dim; ++i) b_grad(0)[i] += dpre[i];
                matvec_transpose_acc(cell.u[0], dpre.data(), dh_prev.data());
                // forget gate
                for (std::size_t i = 0; i < h_dim; ++i) dpre[i] = dc[i] * c_prev[i] * gf[i] * (1.0 - gf[i]);
                acc_outer(w_grad(1), dpre.data(), x_t, h_dim, n_dim);
                acc_outer(u_grad(1), dpre.data(), h_prev.data(), h_dim, h_dim);
                for (std::size_t i = 0; i < h_dim; ++i) b_grad(1)[i] += dpre[i];
                matvec_transpose_acc(cell.u[1], dpre.data(), dh_prev.data());
                // candidate
                for (std::size_t i = 0; i < h_dim; ++i) dpre[i] = dc[i] * gi[i] * (1.0 - gg[i] * gg[i]);
                acc_outer(w_grad(3), dpre.data(), x_t, h_dim, n_dim);
                acc_outer(u_grad(3), dpre.data(), h_prev.data(), h_dim, h_dim);
                for (std::size_t i = 0; i < h_dim; ++i) b_grad(3)[i] += dpre[i];
                matvec_transpose_acc(cell.u[3], dpre.data(), dh_prev.data());
                for (std::size_t i = 0; i < h_dim; ++i) dc[i] *= gf[i];
                break;
            }
            case CellKind::kGru: {
                const auto& gz = cache.gates[ti][0];
                const auto& gr = cache.gates[ti][1];
                const auto& gh = cache.gates[ti][2];
                // candidate: h_t = z o h_prev + (1-z) o h_cand
                for (std::size_t i = 0; i < h_dim; ++i) {
                    dpre[i] = dh[i] * (1.0 - gz[i]) * (1.0 - gh[i] * gh[i]);
                }
                acc_outer(w_grad(2), dpre.data(), x_t, h_dim, n_dim);
                for (std::size_t i = 0; i < h_dim; ++i) tmp[i] = gr[i] * h_prev[i];
                acc_outer(u_grad(2), dpre.data(), tmp.data(), h_dim, h_dim);
                for (std::size_t i = 0; i < h_dim; ++i) b_grad(2)[i] += dpre[i];
                std::fill(tmp.begin(), tmp.end(), 0.0);
                matvec_transpose_acc(cell.u[2], dpre.data(), tmp.data());  // d(r o h_prev)
                for (std::size_t i = 0; i < h_dim; ++i) dh_prev[i] += tmp[i] * gr[i];
                // reset gate
                for (std::size_t i = 0; i < h_dim; ++i) {
                    dpre[i] = tmp[i] * h_prev[i] * gr[i] * (1.0 - gr[i]);
                }
                acc_outer(w_grad(1), dpre.data(), x_t, h_dim, n_dim);
                acc_outer(u_grad(1), dpre.data(), h_prev.data(), h_dim, h_dim);
                for (std::size_t i = 0; i < h_dim; ++i) b_grad(1)[i] += dpre[i];
                matvec_transpose_acc(cell.u[1], dpre.data(), dh_prev.data());
                // update gate
                for (std::size_t i = 0; i < h_dim; ++i) {
                    dpre[i] = dh[i] * (h_prev[i] - gh[i]) * gz[i] * (1.0 - gz[i]);
                    dh_prev[i] += dh[i] * gz[i];
                }
                acc_outer(w_grad(0), dpre.data(), x_t, h_dim, n_dim);
                acc_outer(u_grad(0), dpre.data(), h_prev.data(), h_dim, h_dim);
                for (std::size_t i = 0; i < h_dim; ++i) b_grad(0)[i] += dpre[i];
                matvec_transpose_acc(cell.u[0], dpre.data(), dh_prev.data());
                break;
            }
            case CellKind::kRnn: {
                const auto& gh = cache.gates[ti][0];
                for (std::size_t i = 0; i < h_dim; ++i) dpre[i] = dh[i] * (1.0 - gh[i] * gh[i]);
                acc_outer(w_grad(0), dpre.data(), x_t, h_dim, n_dim);
                acc_outer(u_grad(0), dpre.data(), h_prev.data(), h_dim, h_dim);
                for (std::size_t i = 0; i < h_dim; ++i) b_grad(0)[i] += dpre[i];
                matvec_transpose_acc(cell.u[0], dpre.data(), dh_prev.data());
                break;
            }
        }
        dh = dh_prev;
    }
}

std::vector<double> model_forward(const EmbedderModel& model, const Matrix& x_seq, ForwardMode mode,
                                  CounterRng* mask_rng, ModelCache* cache) {
    CellCache* cell_cache = cache ? &cache->cell : nullptr;
    std::vector<double> h = cell_forward(model.cell, x_seq, cell_cache);

    const double p = model.dropout;
    std::vector<double> scale;
    if (mode == ForwardMode::kTrain && p > 0.0) {
        if (!mask_rng) throw ConfigError("model_forward: train mode with dropout requires a mask source");
        scale.resize(h.size());
        const double keep = 1.0 - p;
        for (std::size_t i = 0; i < h.size(); ++i) {
            scale[i] = mask_rng->next_double() < p ? 0.0 : 1.0 / keep;
            h[i] *= scale[i];
        }
    }

    std::vector<double> e(model.output_dim);
    std::copy(model.projection_bias.begin(), model.projection_bias.end(), e.begin());
    matvec_acc(model.projection, h.data(), e.data());

    if (cache) {
        if (cell_cache && !cell_cache->h.empty()) {
            cache->h_final = cell_cache->h.back();
        } else {
            cache->h_final = h;
        }
        cache->dropout_scale = std::move(scale);
        cache->embedding = e;
    }
    return e;
}

double extreme_reconstruction_loss(
    const std::vector<std::pair<std::vector<double>, std::string>>& embeddings,
    const ExtremeSet& extremes) {
    std::map<std::string, std::pair<double, std::size_t>> per_class;  // sum, count
    for (const auto& [e, label] : embeddings) {
        const auto& ex = extremes.of(label);
        if (e.size() != ex.vector.size()) {
            throw DataError("extreme_reconstruction_loss: embedding dim " + std::to_string(e.size()) +
                            " does not match extreme dim " + std::to_string(ex.vector.size()));
        }
        double s = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i) {
            double d = e[i] - ex.vector[i];
            s += d * d;
        }
        auto& acc = per_class[label];
        acc.first += s;
        acc.second += 1;
    }
    double loss = 0.0;
    for (const auto& [label, acc] : per_class) {
        loss += acc.first / static_cast<double>(acc.second);
    }
    return loss;
}

double model_backward(const EmbedderModel& model, const std::vector<const MvtsInstance*>& batch,
                      const ExtremeSet& extremes, const std::vector<ModelCache>& caches,
                      const std::map<std::string, double>& class_weights, GradBag& grads) {
    if (batch.size() != caches.size()) {
        throw NumericError("model_backward: cache/batch mismatch (" + std::to_string(caches.size()) +
                           " caches for " + std::to_string(batch.size()) + " instances)");
    }
    const std::size_t n_gates = model.cell.n_gates();
    const std::size_t proj_idx = 3 * n_gates;
    const std::size_t bias_idx = proj_idx + 1;
    const std::size_t h_dim = model.cell.hidden_dim;

    double total_loss = 0.0;
    std::vector<double> d_e(model.output_dim);
    std::vector<double> d_h(h_dim);
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const MvtsInstance& inst = *batch[s];
        const ModelCache& cache = caches[s];
        const auto& extreme = extremes.of(inst.label);
        auto wit = class_weights.find(inst.label);
        if (wit == class_weights.end()) {
            throw DataError("model_backward: no class weight for label '" + inst.label + "'");
        }
        const double weight = wit->second;

        // h after dropout scaling, as seen by the projection
        std::vector<double> h_tilde = cache.h_final;
        if (!cache.dropout_scale.empty()) {
            for (std::size_t i = 0; i < h_dim; ++i) h_tilde[i] *= cache.dropout_scale[i];
        }

        double sample_loss = 0.0;
        for (std::size_t i = 0; i < model.output_dim; ++i) {
            const double diff = cache.embedding[i] - extreme.vector[i];
            sample_loss += diff * diff;
            d_e[i] = 2.0 * weight * diff;
        }
        total_loss += weight * sample_loss;

        double* p_grad = grads.tensors[proj_idx].data();
        double* pb_grad = grads.tensors[bias_idx].data();
        for (std::size_t r = 0; r < model.output_dim; ++r) {
            const double g = d_e[r];
            pb_grad[r] += g;
            double* row = p_grad + r * h_dim;
            for (std::size_t c = 0; c < h_dim; ++c) row[c] += g * h_tilde[c];
        }

        std::fill(d_h.begin(), d_h.end(), 0.0);
        matvec_transpose_acc(model.projection, d_e.data(), d_h.data());
        if (!cache.dropout_scale.empty()) {
            for (std::size_t i = 0; i < h_dim; ++i) d_h[i] *= cache.dropout_scale[i];
        }
        cell_backward(model.cell, inst.values, cache.cell, d_h, grads, 0);
    }
    return total_loss;
}

namespace {

CellParams init_cell(CellKind kind, std::size_t input_dim, std::size_t hidden_dim, CounterRng& rng) {
    CellParams cell;
    cell.kind = kind;
    cell.input_dim = input_dim;
    cell.hidden_dim = hidden_dim;
    const std::size_t n_gates = cell.n_gates();
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    for (std::size_t g = 0; g < n_gates; ++g) {
        Matrix w(hidden_dim, input_dim);
        for (double& v : w.data()) v = rng.next_uniform(-bound, bound);
        cell.w.push_back(std::move(w));
    }
    for (std::size_t g = 0; g < n_gates; ++g) {
        Matrix u(hidden_dim, hidden_dim);
        for (double& v : u.data()) v = rng.next_uniform(-bound, bound);
        cell.u.push_back(std::move(u));
    }
    for (std::size_t g = 0; g < n_gates; ++g) {
        // lstm forget-gate bias starts at 1, the usual stabilizer
        double fill = (kind == CellKind::kLstm && g == 1) ? 1.0 : 0.0;
        cell.b.emplace_back(hidden_dim, fill);
    }
    return cell;
}

double full_eval_loss(const EmbedderModel& model, const LabeledDataset& data) {
    std::vector<std::pair<std::vector<double>, std::string>> embeddings(data.size());
    parallel_for(data.size(), [&](std::size_t i) {
        embeddings[i] = {model_forward(model, data.instances[i].values, ForwardMode::kEval, nullptr, nullptr),
                         data.instances[i].label};
    });
    return extreme_reconstruction_loss(embeddings, model.extremes);
}

}  // namespace

EmbedderModel train_embedder(const LabeledDataset& data, const ExtremeSet& extremes, const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw DataError("train_embedder: empty dataset");
    std::map<std::string, std::size_t> class_counts;
    for (const auto& inst : data.instances) class_counts[inst.label] += 1;
    for (const auto& [label, count] : class_counts) {
        extremes.of(label);  // throws if a label has no extreme
    }
    const std::size_t d = extremes.dim();

    EmbedderModel model;
    model.seed = cfg.seed;
    model.dropout = cfg.dropout;
    model.output_dim = d;
    model.extremes = extremes;
    {
        CounterRng init_rng(cfg.seed, rng_stream::kWeightInit);
        model.cell = init_cell(cfg.cell_kind, data.n_channels(), cfg.hidden_dim, init_rng);
        const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim));
        model.projection = Matrix(d, cfg.hidden_dim);
        for (double& v : model.projection.data()) v = init_rng.next_uniform(-bound, bound);
        // projection bias starts at the class-mean of the extremes, the
        // loss-optimal constant embedding; a zero start spends most of the
        // step budget refitting that offset and stalls the optimizer
        model.projection_bias.assign(d, 0.0);
        for (const auto& [label, extreme] : extremes.by_class) {
            for (std::size_t i = 0; i < d; ++i) model.projection_bias[i] += extreme.vector[i];
        }
        for (double& v : model.projection_bias) v /= static_cast<double>(extremes.by_class.size());
    }

    std::map<std::string, double> class_weights;
    for (const auto& [label, count] : class_counts) {
        class_weights[label] = 1.0 / static_cast<double>(count);
    }

    auto views = model_param_views(model);
    GradBag grads = GradBag::like(views);
    AdamState adam = AdamState::like(views);

    model.training_log.push_back(full_eval_loss(model, data));

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (cfg.shuffle) {
            std::iota(order.begin(), order.end(), 0);
            CounterRng shuffle_rng(cfg.seed, rng_stream::kShuffle, epoch);
            shuffle_rng.shuffle(order);
        }
        int clipped = 0;
        for (std::size_t start = 0; start < data.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, data.size());
            std::vector<const MvtsInstance*> batch;
            std::vector<ModelCache> caches(end - start);
            batch.reserve(end - start);
            try {
                for (std::size_t i = start; i < end; ++i) {
                    const std::size_t idx = order[i];
                    const MvtsInstance& inst = data.instances[idx];
                    batch.push_back(&inst);
                    CounterRng mask_rng(cfg.seed, rng_stream::kDropout, epoch, idx);
                    model_forward(model, inst.values, ForwardMode::kTrain, &mask_rng, &caches[i - start]);
                }
                grads.zero();
                double loss = model_backward(model, batch, extremes, caches, class_weights, grads);
                if (!std::isfinite(loss)) {
                    throw NumericError("non-finite loss");
                }
                double norm = grads.l2_norm();
                if (norm > cfg.clip_norm) {
                    grads.scale(cfg.clip_norm / norm);
                    ++clipped;
                }
                adam_step(views, grads, adam, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
            } catch (const NumericError& e) {
                throw NumericError("training failed at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(start / cfg.batch_size) + ": " + e.what());
            }
        }
        model.clip_log.push_back(clipped);
        model.training_log.push_back(full_eval_loss(model, data));
    }
    return model;
}

std::vector<FeatureVector> embed_dataset(const EmbedderModel& model, const LabeledDataset& data) {
    std::vector<FeatureVector> out(data.size());
    parallel_for(data.size(), [&](std::size_t i) {
        const auto& inst = data.instances[i];
        out[i].id = inst.id;
        out[i].label = inst.label;
        out[i].values = model_forward(model, inst.values, ForwardMode::kEval, nullptr, nullptr);
    });
    return out;
}

void save_model(const EmbedderModel& model, const std::filesystem::path& path) {
    json j;
    j["schema_version"] = 1;
    j["cell_kind"] = to_string(model.cell.kind);
    j["input_dim"] = model.cell.input_dim;
    j["hidden_dim"] = model.cell.hidden_dim;
    j["output_dim"] = model.output_dim;
    j["dropout"] = model.dropout;
    j["seed"] = model.seed;
    j["training_log"] = model.training_log;
    j["clip_log"] = model.clip_log;
    json params;
    params["w"] = json::array();
    params["u"] = json::array();
    params["b"] = json::array();
    for (const auto& m : model.cell.w) params["w"].push_back(m.data());
    for (const auto& m : model.cell.u) params["u"].push_back(m.data());
    for (const auto& v : model.cell.b) params["b"].push_back(v);
    params["projection"] = model.projection.data();
    params["projection_bias"] = model.projection_bias;
    j["params"] = params;
    json classes = json::object();
    for (const auto& [label, e] : model.extremes.by_class) {
        classes[label] = {{"id", e.source_id}, {"distance", e.distance}, {"vector", e.vector}};
    }
    j["extremes"] = {{"classes", classes}};
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

EmbedderModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("model file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    EmbedderModel model;
    try {
        model.cell.kind = cell_kind_from_string(j.at("cell_kind").get<std::string>());
        model.cell.input_dim = j.at("input_dim").get<std::size_t>();
        model.cell.hidden_dim = j.at("hidden_dim").get<std::size_t>();
        model.output_dim = j.at("output_dim").get<std::size_t>();
        model.dropout = j.at("dropout").get<double>();
        model.seed = j.at("seed").get<std::uint64_t>();
        model.training_log = j.at("training_log").get<std::vector<double>>();
        model.clip_log = j.at("clip_log").get<std::vector<int>>();
        const auto& params = j.at("params");
        const std::size_t n_gates = model.cell.n_gates();
        for (std::size_t g = 0; g < n_gates; ++g) {
            Matrix w(model.cell.hidden_dim, model.cell.input_dim);
            w.data() = params.at("w").at(g).get<std::vector<double>>();
            if (w.data().size() != model.cell.hidden_dim * model.cell.input_dim) {
                throw DataError("model file: W tensor size mismatch");
            }
            model.cell.w.push_back(std::move(w));
            Matrix u(model.cell.hidden_dim, model.cell.hidden_dim);
            u.data() = params.at("u").at(g).get<std::vector<double>>();
            if (u.data().size() != model.cell.hidden_dim * model.cell.hidden_dim) {
                throw DataError("model file: U tensor size mismatch");
            }
            model.cell.u.push_back(std::move(u));
            model.cell.b.push_back(params.at("b").at(g).get<std::vector<double>>());
        }
        model.projection = Matrix(model.output_dim, model.cell.hidden_dim);
        model.projection.data() = params.at("projection").get<std::vector<double>>();
        model.projection_bias = params.at("projection_bias").get<std::vector<double>>();
        for (const auto& [label, e] : j.at("extremes").at("classes").items()) {
            ExtremeSet::Extreme ex;
            ex.source_id = e.at("id").get<std::string>();
            ex.distance = e.at("distance").get<double>();
            ex.vector = e.at("vector").get<std::vector<double>>();
            model.extremes.by_class.emplace(label, std::move(ex));
        }
    } catch (const json::exception& e) {
        throw DataError("model file '" + path.string() + "' has invalid structure: " + e.what());
    }
    return model;
}

}  // namespace excon

#include "excon/heads.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <json.hpp>

#include "excon/errors.hpp"
#include "excon/parallel.hpp"

namespace excon {

using nlohmann::json;

namespace {

std::vector<std::string> sorted_classes(const std::vector<FeatureVector>& x) {
    std::set<std::string> s;
    for (const auto& f : x) s.insert(f.label);
    return {s.begin(), s.end()};
}

void softmax_row(double* logits, std::size_t k) {
    double mx = logits[0];
    for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, logits[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        logits[i] = std::exp(logits[i] - mx);
        sum += logits[i];
    }
    for (std::size_t i = 0; i < k; ++i) logits[i] /= sum;
}

}  // namespace

Standardizer Standardizer::fit(const std::vector<FeatureVector>& x) {
    if (x.empty()) throw DataError("standardizer: empty training set");
    const std::size_t d = x.front().values.size();
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.std.assign(d, 0.0);
    for (const auto& f : x) {
        if (f.values.size() != d) throw DataError("standardizer: inconsistent vector lengths");
        for (std::size_t i = 0; i < d; ++i) s.mean[i] += f.values[i];
    }
    for (double& m : s.mean) m /= static_cast<double>(x.size());
    for (const auto& f : x) {
        for (std::size_t i = 0; i < d; ++i) {
            double diff = f.values[i] - s.mean[i];
            s.std[i] += diff * diff;
        }
    }
    for (double& v : s.std) v = std::sqrt(v / static_cast<double>(x.size()));
    return s;
}

std::vector<double> Standardizer::apply(std::span<const double> v) const {
    if (v.size() != mean.size()) {
        throw DataError("standardizer: vector length " + std::to_string(v.size()) + " does not match " +
                        std::to_string(mean.size()));
    }
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std[i] > 0.0 ? (v[i] - mean[i]) / std[i] : 0.0;
    }
    return out;
}

LogisticModel fit_logistic(const std::vector<FeatureVector>& x, double lambda, std::size_t max_iter,
                           double tol) {
    if (x.empty()) throw DataError("fit_logistic: empty training set");
    LogisticModel model;
    model.classes = sorted_classes(x);
    if (model.classes.size() < 2) throw DataError("fit_logistic: need at least two classes");
    model.lambda = lambda;
    model.standardizer = Standardizer::fit(x);

    const std::size_t n = x.size();
    const std::size_t d = x.front().values.size();
    const std::size_t k = model.classes.size();

    std::vector<std::vector<double>> xs(n);
    std::vector<std::size_t> ys(n);
    std::map<std::string, std::size_t> class_index;
    for (std::size_t c = 0; c < k; ++c) class_index[model.classes[c]] = c;
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = model.standardizer.apply(x[i].values);
        ys[i] = class_index.at(x[i].label);
    }

    Matrix w(k, d);
    std::vector<double> b(k, 0.0);

    // mean cross-entropy; the (lambda/2)*||W||^2 term is handled by a proximal
    // shrinkage so huge lambdas stay well conditioned (intercepts unregularized)
    auto cross_entropy = [&](const Matrix& wm, const std::vector<double>& bv) {
        double loss = 0.0;
        std::vector<double> logits(k);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < k; ++c) {
                const double* row = wm.row_ptr(c);
                double z = bv[c];
                for (std::size_t j = 0; j < d; ++j) z += row[j] * xs[i][j];
                logits[c] = z;
            }
            softmax_row(logits.data(), k);
            loss -= std::log(std::max(logits[ys[i]], 1e-300));
        }
        return loss / static_cast<double>(n);
    };

    Matrix gw(k, d);
    std::vector<double> gb(k);
    Matrix w_try(k, d);
    std::vector<double> b_try(k);
    double step = 1.0;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        std::fill(gw.data().begin(), gw.data().end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        std::vector<double> logits(k);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < k; ++c) {
                const double* row = w.row_ptr(c);
                double z = b[c];
                for (std::size_t j = 0; j < d; ++j) z += row[j] * xs[i][j];
                logits[c] = z;
            }
            softmax_row(logits.data(), k);
            for (std::size_t c = 0; c < k; ++c) {
                double err = (logits[c] - (ys[i] == c ? 1.0 : 0.0)) / static_cast<double>(n);
                gb[c] += err;
                double* row = gw.row_ptr(c);
                for (std::size_t j = 0; j < d; ++j) row[j] += err * xs[i][j];
            }
        }
        // stop on the composite gradient (CE + ridge term)
        double grad_sq = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            grad_sq += gb[c] * gb[c];
            const double* grow = gw.row_ptr(c);
            const double* wrow = w.row_ptr(c);
            for (std::size_t j = 0; j < d; ++j) {
                double g = grow[j] + lambda * wrow[j];
                grad_sq += g * g;
            }
        }
        if (std::sqrt(grad_sq) < tol) break;

        // backtracking proximal step: w <- (w - t*gw)/(1 + t*lambda), b <- b - t*gb,
        // accepted when CE fits its local quadratic model
        const double ce_now = cross_entropy(w, b);
        step = std::min(step * 2.0, 1e6);
        bool accepted = false;
        for (int halvings = 0; halvings < 80; ++halvings) {
            double dot = 0.0, dist_sq = 0.0;
            for (std::size_t idx = 0; idx < w.data().size(); ++idx) {
                double next = (w.data()[idx] - step * gw.data()[idx]) / (1.0 + step * lambda);
                w_try.data()[idx] = next;
                double diff = next - w.data()[idx];
                dot += gw.data()[idx] * diff;
                dist_sq += diff * diff;
            }
            for (std::size_t c = 0; c < k; ++c) {
                b_try[c] = b[c] - step * gb[c];
                double diff = b_try[c] - b[c];
                dot += gb[c] * diff;
                dist_sq += diff * diff;
            }
            double ce_try = cross_entropy(w_try, b_try);
            if (ce_try <= ce_now + dot + dist_sq / (2.0 * step)) {
                std::swap(w, w_try);
                std::swap(b, b_try);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        model.iterations = iter + 1;
        if (!accepted) break;  // numerically flat
    }
    model.weights = std::move(w);
    model.intercepts = std::move(b);
    return model;
}

Matrix predict_logistic(const LogisticModel& model, const std::vector<FeatureVector>& x) {
    const std::size_t k = model.classes.size();
    const std::size_t d = model.weights.cols();
    Matrix proba(x.size(), k);
    parallel_for(x.size(), [&](std::size_t i) {
        auto z = model.standardizer.apply(x[i].values);
        std::vector<double> logits(k);
        for (std::size_t c = 0; c < k; ++c) {
            const double* row = model.weights.row_ptr(c);
            double v = model.intercepts[c];
            for (std::size_t j = 0; j < d; ++j) v += row[j] * z[j];
            logits[c] = v;
        }
        softmax_row(logits.data(), k);
        for (std::size_t c = 0; c < k; ++c) proba(i, c) = logits[c];
    });
    return proba;
}

KnnModel fit_knn(const std::vector<FeatureVector>& x, std::size_t k) {
    if (x.empty()) throw DataError("fit_knn: empty training set");
    if (k < 1) throw ConfigError("fit_knn: k must be >= 1");
    if (k > x.size()) {
        throw ConfigError("fit_knn: k=" + std::to_string(k) + " exceeds training size " +
                          std::to_string(x.size()));
    }
    KnnModel model;
    model.k = k;
    model.classes = sorted_classes(x);
    model.standardizer = Standardizer::fit(x);
    model.train_vectors.reserve(x.size());
    model.train_labels.reserve(x.size());
    for (const auto& f : x) {
        model.train_vectors.push_back(model.standardizer.apply(f.values));
        model.train_labels.push_back(f.label);
    }
    return model;
}

KnnPrediction knn_predict(const KnnModel& model, const std::vector<FeatureVector>& x) {
    if (model.train_vectors.empty()) throw DataError("knn_predict: empty training set");
    const std::size_t k = model.k;
    const std::size_t n_train = model.train_vectors.size();
    const std::size_t n_classes = model.classes.size();
    std::map<std::string, std::size_t> class_index;
    for (std::size_t c = 0; c < n_classes; ++c) class_index[model.classes[c]] = c;

    KnnPrediction out;
    out.labels.resize(x.size());
    out.scores = Matrix(x.size(), n_classes);
    parallel_for(x.size(), [&](std::size_t i) {
        auto q = model.standardizer.apply(x[i].values);
        std::vector<std::pair<double, std::size_t>> dist(n_train);
        for (std::size_t t = 0; t < n_train; ++t) {
            const auto& v = model.train_vectors[t];
            double s = 0.0;
            for (std::size_t j = 0; j < q.size(); ++j) {
                double diff = q[j] - v[j];
                s += diff * diff;
            }
            dist[t] = {s, t};  // index is the tiebreak
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k), dist.end());
        std::vector<std::size_t> votes(n_classes, 0);
        for (std::size_t j = 0; j < k; ++j) {
            votes[class_index.at(model.train_labels[dist[j].second])] += 1;
        }
        std::size_t winner = 0;
        for (std::size_t c = 1; c < n_classes; ++c) {
            if (votes[c] > votes[winner]) winner = c;  // ties keep the smallest label
        }
        out.labels[i] = model.classes[winner];
        for (std::size_t c = 0; c < n_classes; ++c) {
            out.scores(i, c) = static_cast<double>(votes[c]) / static_cast<double>(k);
        }
    });
    return out;
}

std::vector<double> flatten_mvts(const MvtsInstance& instance) {
    return instance.values.data();  // row-major == time-major
}

std::vector<double> last_timestamp(const MvtsInstance& instance) {
    const std::size_t tau = instance.tau();
    const double* row = instance.values.row_ptr(tau - 1);
    return {row, row + instance.n_channels()};
}

RocketTransform make_rocket(std::size_t n_kernels, std::size_t tau, std::size_t n_channels,
                            std::uint64_t seed) {
    if (n_kernels < 1) throw ConfigError("rocket: need at least one kernel");
    if (tau < 2 || n_channels < 1) throw ConfigError("rocket: invalid input shape");
    RocketTransform t;
    t.seed = seed;
    t.kernels.reserve(n_kernels);
    static const int kLengths[3] = {7, 9, 11};
    for (std::size_t i = 0; i < n_kernels; ++i) {
        CounterRng rng(seed, rng_stream::kRocket, i);
        RocketKernel k;
        k.length = kLengths[rng.next_index(3)];
        k.weights.resize(k.length);
        double mean = 0.0;
        for (double& w : k.weights) {
            w = rng.next_gaussian();
            mean += w;
        }
        mean /= k.length;
        for (double& w : k.weights) w -= mean;
        k.bias = rng.next_uniform(-1.0, 1.0);
        double max_exp = std::log2(static_cast<double>(tau - 1) / (k.length - 1));
        if (max_exp < 0.0) max_exp = 0.0;
        k.dilation = std::max(1, static_cast<int>(std::pow(2.0, rng.next_uniform(0.0, max_exp))));
        k.padding = rng.next_double() < 0.5;
        k.channel = rng.next_index(n_channels);
        t.kernels.push_back(std::move(k));
    }
    return t;
}

std::vector<double> rocket_transform(const RocketTransform& t, const MvtsInstance& instance,
                                     std::size_t* skipped) {
    const long tau = static_cast<long>(instance.tau());
    std::vector<double> out(t.feature_count(), 0.0);
    std::size_t n_skipped = 0;
    for (std::size_t ki = 0; ki < t.kernels.size(); ++ki) {
        const RocketKernel& k = t.kernels[ki];
        const long span = static_cast<long>(k.length - 1) * k.dilation;
        const long pad = k.padding ? span / 2 : 0;
        const long n_out = tau + 2 * pad - span;
        if (n_out < 1 || k.channel >= instance.n_channels()) {
            ++n_skipped;  // features stay (0,0)
            continue;
        }
        double max_val = -std::numeric_limits<double>::infinity();
        long positive = 0;
        for (long start = -pad; start + span < tau + pad; ++start) {
            double acc = k.bias;
            for (int j = 0; j < k.length; ++j) {
                long idx = start + static_cast<long>(j) * k.dilation;
                if (idx >= 0 && idx < tau) acc += k.weights[j] * instance.values(idx, k.channel);
            }
            if (acc > max_val) max_val = acc;
            if (acc > 0.0) ++positive;
        }
        out[2 * ki] = static_cast<double>(positive) / static_cast<double>(n_out);
        out[2 * ki + 1] = max_val;
    }
    if (skipped) *skipped = n_skipped;
    return out;
}

std::vector<FeatureVector> rocket_transform_dataset(const RocketTransform& t, const LabeledDataset& data,
                                                    std::size_t* skipped) {
    std::vector<FeatureVector> out(data.size());
    std::vector<std::size_t> skips(data.size(), 0);
    parallel_for(data.size(), [&](std::size_t i) {
        out[i].id = data.instances[i].id;
        out[i].label = data.instances[i].label;
        out[i].values = rocket_transform(t, data.instances[i], &skips[i]);
    });
    if (skipped) *skipped = std::accumulate(skips.begin(), skips.end(), std::size_t{0});
    return out;
}

SeqClassifier train_seq_classifier(const LabeledDataset& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw DataError("train_seq_classifier: empty dataset");
    SeqClassifier model;
    model.seed = cfg.seed;
    model.dropout = cfg.dropout;
    {
        std::set<std::string> s;
        for (const auto& inst : data.instances) s.insert(inst.label);
        model.classes.assign(s.begin(), s.end());
    }
    if (model.classes.size() < 2) throw DataError("train_seq_classifier: need at least two classes");
    const std::size_t k = model.classes.size();
    const std::size_t h_dim = cfg.hidden_dim;
    std::map<std::string, std::size_t> class_index;
    for (std::size_t c = 0; c < k; ++c) class_index[model.classes[c]] = c;

    std::map<std::string, double> class_weights;
    for (const auto& inst : data.instances) class_weights[inst.label] += 1.0;
    for (auto& [label, w] : class_weights) w = 1.0 / w;

    CounterRng init_rng(cfg.seed, rng_stream::kWeightInit);
    const double bound = 1.0 / std::sqrt(static_cast<double>(h_dim));
    {
        // reuse the embedder's cell initializer layout
        CellParams cell;
        cell.kind = cfg.cell_kind;
        cell.input_dim = data.n_channels();
        cell.hidden_dim = h_dim;
        const std::size_t n_gates = cell.n_gates();
        for (std::size_t g = 0; g < n_gates; ++g) {
            Matrix w(h_dim, cell.input_dim);
            for (double& v : w.data()) v = init_rng.next_uniform(-bound, bound);
            cell.w.push_back(std::move(w));
        }
        for (std::size_t g = 0; g < n_gates; ++g) {
            Matrix u(h_dim, h_dim);
            for (double& v : u.data()) v = init_rng.next_uniform(-bound, bound);
            cell.u.push_back(std::move(u));
        }
        for (std::size_t g = 0; g < n_gates; ++g) {
            double fill = (cfg.cell_kind == CellKind::kLstm && g == 1) ? 1.0 : 0.0;
            cell.b.emplace_back(h_dim, fill);
        }
        model.cell = std::move(cell);
    }
    model.head_weights = Matrix(k, h_dim);
    for (double& v : model.head_weights.data()) v = init_rng.next_uniform(-bound, bound);
    model.head_bias.assign(k, 0.0);

    auto views = cell_param_views(model.cell);
    views.emplace_back(model.head_weights.data());
    views.emplace_back(model.head_bias);
    GradBag grads = GradBag::like(views);
    AdamState adam = AdamState::like(views);
    const std::size_t n_gates = model.cell.n_gates();
    const std::size_t head_idx = 3 * n_gates;
    const std::size_t head_bias_idx = head_idx + 1;

    auto eval_loss = [&]() {
        std::vector<double> losses(data.size());
        parallel_for(data.size(), [&](std::size_t i) {
            auto h = cell_forward(model.cell, data.instances[i].values, nullptr);
            std::vector<double> logits(k);
            for (std::size_t c = 0; c < k; ++c) {
                const double* row = model.head_weights.row_ptr(c);
                double z = model.head_bias[c];
                for (std::size_t j = 0; j < h_dim; ++j) z += row[j] * h[j];
                logits[c] = z;
            }
            softmax_row(logits.data(), k);
            const std::size_t y = class_index.at(data.instances[i].label);
            losses[i] = -class_weights.at(data.instances[i].label) *
                        std::log(std::max(logits[y], 1e-300));
        });
        return std::accumulate(losses.begin(), losses.end(), 0.0);
    };

    model.training_log.push_back(eval_loss());

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> logits(k), d_logits(k), d_h(h_dim);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (cfg.shuffle) {
            std::iota(order.begin(), order.end(), 0);
            CounterRng shuffle_rng(cfg.seed, rng_stream::kShuffle, epoch);
            shuffle_rng.shuffle(order);
        }
        for (std::size_t start = 0; start < data.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, data.size());
            grads.zero();
            double batch_loss = 0.0;
            try {
                for (std::size_t i = start; i < end; ++i) {
                    const std::size_t idx = order[i];
                    const MvtsInstance& inst = data.instances[idx];
                    CellCache cache;
                    auto h = cell_forward(model.cell, inst.values, &cache);

                    std::vector<double> scale;
                    if (cfg.dropout > 0.0) {
                        CounterRng mask_rng(cfg.seed, rng_stream::kDropout, epoch, idx);
                        scale.resize(h_dim);
                        for (std::size_t j = 0; j < h_dim; ++j) {
                            scale[j] = mask_rng.next_double() < cfg.dropout ? 0.0 : 1.0 / (1.0 - cfg.dropout);
                            h[j] *= scale[j];
                        }
                    }
                    for (std::size_t c = 0; c < k; ++c) {
                        const double* row = model.head_weights.row_ptr(c);
                        double z = model.head_bias[c];
                        for (std::size_t j = 0; j < h_dim; ++j) z += row[j] * h[j];
                        logits[c] = z;
                    }
                    softmax_row(logits.data(), k);
                    const std::size_t y = class_index.at(inst.label);
                    const double weight = class_weights.at(inst.label);
                    batch_loss -= weight * std::log(std::max(logits[y], 1e-300));

                    for (std::size_t c = 0; c < k; ++c) {
                        d_logits[c] = weight * (logits[c] - (c == y ? 1.0 : 0.0));
                    }
                    double* hw_grad = grads.tensors[head_idx].data();
                    double* hb_grad = grads.tensors[head_bias_idx].data();
                    for (std::size_t c = 0; c < k; ++c) {
                        hb_grad[c] += d_logits[c];
                        double* row = hw_grad + c * h_dim;
                        for (std::size_t j = 0; j < h_dim; ++j) row[j] += d_logits[c] * h[j];
                    }
                    std::fill(d_h.begin(), d_h.end(), 0.0);
                    matvec_transpose_acc(model.head_weights, d_logits.data(), d_h.data());
                    if (!scale.empty()) {
                        for (std::size_t j = 0; j < h_dim; ++j) d_h[j] *= scale[j];
                    }
                    cell_backward(model.cell, inst.values, cache, d_h, grads, 0);
                }
                if (!std::isfinite(batch_loss)) throw NumericError("non-finite loss");
                double norm = grads.l2_norm();
                if (norm > cfg.clip_norm) grads.scale(cfg.clip_norm / norm);
                adam_step(views, grads, adam, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
            } catch (const NumericError& e) {
                throw NumericError("seq training failed at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(start / cfg.batch_size) + ": " + e.what());
            }
        }
        model.training_log.push_back(eval_loss());
    }
    return model;
}

Matrix seq_predict(const SeqClassifier& model, const LabeledDataset& data) {
    const std::size_t k = model.classes.size();
    Matrix proba(data.size(), k);
    parallel_for(data.size(), [&](std::size_t i) {
        auto h = cell_forward(model.cell, data.instances[i].values, nullptr);
        std::vector<double> logits(k);
        for (std::size_t c = 0; c < k; ++c) {
            const double* row = model.head_weights.row_ptr(c);
            double z = model.head_bias[c];
            for (std::size_t j = 0; j < model.cell.hidden_dim; ++j) z += row[j] * h[j];
            logits[c] = z;
        }
        softmax_row(logits.data(), k);
        for (std::size_t c = 0; c < k; ++c) proba(i, c) = logits[c];
    });
    return proba;
}

namespace {

json standardizer_to_json(const Standardizer& s) {
    return {{"mean", s.mean}, {"std", s.std}};
}

Standardizer standardizer_from_json(const json& j) {
    Standardizer s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.std = j.at("std").get<std::vector<double>>();
    return s;
}

}  // namespace

void save_logistic(const LogisticModel& model, const std::filesystem::path& path) {
    json j;
    j["schema_version"] = 1;
    j["kind"] = "lr";
    j["classes"] = model.classes;
    j["weights"] = model.weights.data();
    j["intercepts"] = model.intercepts;
    j["lambda"] = model.lambda;
    j["iterations"] = model.iterations;
    j["standardization"] = standardizer_to_json(model.standardizer);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write head file '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

LogisticModel load_logistic(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open head file '" + path.string() + "'");
    json j;
    in >> j;
    if (j.value("kind", "") != "lr") throw DataError("head file '" + path.string() + "' is not a logistic model");
    LogisticModel model;
    model.classes = j.at("classes").get<std::vector<std::string>>();
    model.intercepts = j.at("intercepts").get<std::vector<double>>();
    model.lambda = j.at("lambda").get<double>();
    model.iterations = j.at("iterations").get<std::size_t>();
    model.standardizer = standardizer_from_json(j.at("standardization"));
    const std::size_t d = model.standardizer.mean.size();
    model.weights = Matrix(model.classes.size(), d);
    model.weights.data() = j.at("weights").get<std::vector<double>>();
    if (model.weights.data().size() != model.classes.size() * d) {
        throw DataError("head file '" + path.string() + "' has a weight shape mismatch");
    }
    return model;
}

void save_knn(const KnnModel& model, const std::filesystem::path& path) {
    json j;
    j["schema_version"] = 1;
    j["kind"] = "knn";
    j["k"] = model.k;
    j["classes"] = model.classes;
    j["train_vectors"] = model.train_vectors;
    j["train_labels"] = model.train_labels;
    j["standardization"] = standardizer_to_json(model.standardizer);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write head file '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

KnnModel load_knn(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open head file '" + path.string() + "'");
    json j;
    in >> j;
    if (j.value("kind", "") != "knn") throw DataError("head file '" + path.string() + "' is not a knn model");
    KnnModel model;
    model.k = j.at("k").get<std::size_t>();
    model.classes = j.at("classes").get<std::vector<std::string>>();
    model.train_vectors = j.at("train_vectors").get<std::vector<std::vector<double>>>();
    model.train_labels = j.at("train_labels").get<std::vector<std::string>>();
    model.standardizer = standardizer_from_json(j.at("standardization"));
    return model;
}

}  // namespace excon

#include <doctest.h>

#include <cmath>
#include <map>

#include "excon/embedder.hpp"
#include "excon/errors.hpp"
#include "excon/ingest.hpp"

using namespace excon;

namespace {

// Random small model + batch for gradient checking.
struct GradCheckSetup {
    EmbedderModel model;
    LabeledDataset data;
    ExtremeSet extremes;
    std::map<std::string, double> weights;
};

GradCheckSetup make_setup(CellKind kind, std::uint64_t seed, std::size_t n = 3, std::size_t h = 4,
                          std::size_t d = 6, std::size_t tau = 5, std::size_t batch = 4) {
    CounterRng rng(seed, 99);
    GradCheckSetup s;
    s.model.cell.kind = kind;
    s.model.cell.input_dim = n;
    s.model.cell.hidden_dim = h;
    const std::size_t gates = s.model.cell.n_gates();
    for (std::size_t g = 0; g < gates; ++g) {
        Matrix w(h, n), u(h, h);
        for (double& v : w.data()) v = rng.next_uniform(-0.5, 0.5);
        for (double& v : u.data()) v = rng.next_uniform(-0.5, 0.5);
        s.model.cell.w.push_back(std::move(w));
        s.model.cell.u.push_back(std::move(u));
        std::vector<double> b(h);
        for (double& v : b) v = rng.next_uniform(-0.2, 0.2);
        s.model.cell.b.push_back(std::move(b));
    }
    s.model.output_dim = d;
    s.model.projection = Matrix(d, h);
    for (double& v : s.model.projection.data()) v = rng.next_uniform(-0.5, 0.5);
    s.model.projection_bias.resize(d);
    for (double& v : s.model.projection_bias) v = rng.next_uniform(-0.2, 0.2);
    s.model.dropout = 0.0;

    for (std::size_t m = 0; m < batch; ++m) {
        MvtsInstance inst;
        inst.id = "g" + std::to_string(m);
        inst.label = m % 2 == 0 ? "A" : "B";
        inst.values = Matrix(tau, n);
        for (double& v : inst.values.data()) v = rng.next_uniform(-1.0, 1.0);
        s.data.instances.push_back(std::move(inst));
    }
    s.data.recompute_classes();

    for (const auto* label : {"A", "B"}) {
        ExtremeSet::Extreme e;
        e.source_id = label;
        e.vector.resize(d);
        for (double& v : e.vector) v = rng.next_uniform(-1.0, 1.0);
        s.extremes.by_class.emplace(label, std::move(e));
    }
    s.weights = {{"A", 0.5}, {"B", 1.0 / 3.0}};
    s.model.extremes = s.extremes;
    return s;
}

double batch_loss(GradCheckSetup& s) {
    double loss = 0.0;
    for (const auto& inst : s.data.instances) {
        auto e = model_forward(s.model, inst.values, ForwardMode::kEval, nullptr, nullptr);
        const auto& ex = s.extremes.of(inst.label).vector;
        double l = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i) l += (e[i] - ex[i]) * (e[i] - ex[i]);
        loss += s.weights.at(inst.label) * l;
    }
    return loss;
}

// max relative error between analytic and central finite-difference gradients
double gradient_check(CellKind kind, std::uint64_t seed) {
    GradCheckSetup s = make_setup(kind, seed);

    std::vector<const MvtsInstance*> batch;
    std::vector<ModelCache> caches(s.data.size());
    for (std::size_t i = 0; i < s.data.size(); ++i) {
        batch.push_back(&s.data.instances[i]);
        model_forward(s.model, s.data.instances[i].values, ForwardMode::kTrain, nullptr, &caches[i]);
    }
    auto views = model_param_views(s.model);
    GradBag grads = GradBag::like(views);
    model_backward(s.model, batch, s.extremes, caches, s.weights, grads);

    const double step = 1e-5;
    double worst = 0.0;
    for (std::size_t t = 0; t < views.size(); ++t) {
        for (std::size_t i = 0; i < views[t].size(); ++i) {
            const double saved = views[t][i];
            views[t][i] = saved + step;
            const double up = batch_loss(s);
            views[t][i] = saved - step;
            const double down = batch_loss(s);
            views[t][i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double analytic = grads.tensors[t][i];
            const double denom = std::max({std::fabs(numeric), std::fabs(analytic), 1e-8});
            worst = std::max(worst, std::fabs(numeric - analytic) / denom);
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("gradient check: lstm") { CHECK(gradient_check(CellKind::kLstm, 11) < 1e-4); }
TEST_CASE("gradient check: gru") { CHECK(gradient_check(CellKind::kGru, 12) < 1e-4); }
TEST_CASE("gradient check: rnn") { CHECK(gradient_check(CellKind::kRnn, 13) < 1e-4); }

namespace {

CellParams zero_cell(CellKind kind, std::size_t n, std::size_t h) {
    CellParams cell;
    cell.kind = kind;
    cell.input_dim = n;
    cell.hidden_dim = h;
    for (std::size_t g = 0; g < cell.n_gates(); ++g) {
        cell.w.emplace_back(h, n);
        cell.u.emplace_back(h, h);
        cell.b.emplace_back(h, 0.0);
    }
    return cell;
}

}  // namespace

TEST_CASE("zero-parameter cells map any input to a zero final state") {
    CounterRng rng(44, 0);
    Matrix x(6, 3);
    for (double& v : x.data()) v = rng.next_gaussian();
    for (CellKind kind : {CellKind::kLstm, CellKind::kGru, CellKind::kRnn}) {
        auto h = cell_forward(zero_cell(kind, 3, 4), x, nullptr);
        for (double v : h) CHECK(v == 0.0);
    }
}

TEST_CASE("rnn with tau=1 equals tanh(Wx + b) by hand") {
    CellParams cell = zero_cell(CellKind::kRnn, 2, 2);
    cell.w[0](0, 0) = 0.5;
    cell.w[0](0, 1) = -0.25;
    cell.w[0](1, 0) = 1.0;
    cell.w[0](1, 1) = 2.0;
    cell.b[0] = {0.1, -0.2};
    Matrix x(1, 2);
    x(0, 0) = 0.4;
    x(0, 1) = -1.2;
    auto h = cell_forward(cell, x, nullptr);
    CHECK(h[0] == doctest::Approx(std::tanh(0.5 * 0.4 - 0.25 * -1.2 + 0.1)).epsilon(1e-15));
    CHECK(h[1] == doctest::Approx(std::tanh(1.0 * 0.4 + 2.0 * -1.2 - 0.2)).epsilon(1e-15));
}

TEST_CASE("zero input with zero biases keeps every cell at zero") {
    Matrix x(5, 3);  // all zeros
    for (CellKind kind : {CellKind::kLstm, CellKind::kGru, CellKind::kRnn}) {
        CellParams cell = zero_cell(kind, 3, 4);
        CounterRng rng(9, 0);
        for (auto& w : cell.w) {
            for (double& v : w.data()) v = rng.next_uniform(-0.5, 0.5);
        }
        for (auto& u : cell.u) {
            for (double& v : u.data()) v = rng.next_uniform(-0.5, 0.5);
        }
        auto h = cell_forward(cell, x, nullptr);
        for (double v : h) CHECK(v == doctest::Approx(0.0));
    }
}

TEST_CASE("model forward dropout semantics") {
    EmbedderModel model;
    model.cell = zero_cell(CellKind::kLstm, 2, 3);
    model.output_dim = 4;
    model.projection = Matrix(4, 3);
    model.projection_bias = {1.0, -2.0, 0.5, 0.0};
    Matrix x(4, 2);
    CounterRng rng(10, 0);
    for (double& v : x.data()) v = rng.next_gaussian();

    SUBCASE("eval mode with zero cell gives the projection bias") {
        model.dropout = 0.5;
        auto e = model_forward(model, x, ForwardMode::kEval, nullptr, nullptr);
        CHECK(e == model.projection_bias);
    }
    SUBCASE("p=0 makes train and eval identical") {
        model.dropout = 0.0;
        for (double& v : model.projection.data()) v = rng.next_uniform(-1, 1);
        for (auto& w : model.cell.w) {
            for (double& v : w.data()) v = rng.next_uniform(-0.5, 0.5);
        }
        auto train_e = model_forward(model, x, ForwardMode::kTrain, nullptr, nullptr);
        auto eval_e = model_forward(model, x, ForwardMode::kEval, nullptr, nullptr);
        CHECK(train_e == eval_e);
    }
    SUBCASE("fixed mask seed reproduces the embedding") {
        model.dropout = 0.5;
        for (double& v : model.projection.data()) v = rng.next_uniform(-1, 1);
        for (auto& w : model.cell.w) {
            for (double& v : w.data()) v = rng.next_uniform(-0.5, 0.5);
        }
        CounterRng mask1(77, rng_stream::kDropout, 1, 2);
        CounterRng mask2(77, rng_stream::kDropout, 1, 2);
        auto e1 = model_forward(model, x, ForwardMode::kTrain, &mask1, nullptr);
        auto e2 = model_forward(model, x, ForwardMode::kTrain, &mask2, nullptr);
        CHECK(e1 == e2);
    }
}

TEST_CASE("extreme reconstruction loss fixtures") {
    ExtremeSet extremes;
    extremes.by_class["1"] = {"e1", 0.0, {0.0, 0.0}};
    extremes.by_class["2"] = {"e2", 0.0, {2.0, 2.0}};

    SUBCASE("hand fixture equals 1 exactly") {
        std::vector<std::pair<std::vector<double>, std::string>> embeddings = {
            {{1.0, 0.0}, "1"},
            {{0.0, 1.0}, "1"},
            {{2.0, 2.0}, "2"},
        };
        CHECK(extreme_reconstruction_loss(embeddings, extremes) == 1.0);
    }
    SUBCASE("zero iff every embedding equals its extreme") {
        std::vector<std::pair<std::vector<double>, std::string>> embeddings = {
            {{0.0, 0.0}, "1"},
            {{2.0, 2.0}, "2"},
        };
        CHECK(extreme_reconstruction_loss(embeddings, extremes) == 0.0);
    }
    SUBCASE("duplicating a class leaves its term unchanged") {
        std::vector<std::pair<std::vector<double>, std::string>> base = {
            {{1.0, 0.0}, "1"},
            {{0.0, 1.0}, "1"},
            {{2.0, 2.0}, "2"},
        };
        auto doubled = base;
        doubled.insert(doubled.end(), base.begin(), base.end());
        CHECK(extreme_reconstruction_loss(doubled, extremes) ==
              doctest::Approx(extreme_reconstruction_loss(base, extremes)).epsilon(1e-15));
    }
    SUBCASE("label without an extreme errors") {
        std::vector<std::pair<std::vector<double>, std::string>> embeddings = {{{1.0, 0.0}, "3"}};
        CHECK_THROWS_AS(extreme_reconstruction_loss(embeddings, extremes), DataError);
    }
}

TEST_CASE("zero-loss batch has zero gradients") {
    GradCheckSetup s = make_setup(CellKind::kRnn, 21);
    // move every extreme onto the embedding the model actually produces
    for (auto& inst : s.data.instances) {
        auto e = model_forward(s.model, inst.values, ForwardMode::kEval, nullptr, nullptr);
        s.extremes.by_class[inst.label].vector = e;
    }
    // single-instance classes so every member sits exactly on its extreme
    s.data.instances.resize(2);
    s.data.instances[0].label = "A";
    s.data.instances[1].label = "B";
    s.extremes.by_class["A"].vector =
        model_forward(s.model, s.data.instances[0].values, ForwardMode::kEval, nullptr, nullptr);
    s.extremes.by_class["B"].vector =
        model_forward(s.model, s.data.instances[1].values, ForwardMode::kEval, nullptr, nullptr);

    std::vector<const MvtsInstance*> batch;
    std::vector<ModelCache> caches(2);
    for (std::size_t i = 0; i < 2; ++i) {
        batch.push_back(&s.data.instances[i]);
        model_forward(s.model, s.data.instances[i].values, ForwardMode::kTrain, nullptr, &caches[i]);
    }
    auto views = model_param_views(s.model);
    GradBag grads = GradBag::like(views);
    double loss = model_backward(s.model, batch, s.extremes, caches, s.weights, grads);
    CHECK(loss == doctest::Approx(0.0).epsilon(1e-24));
    for (const auto& t : grads.tensors) {
        for (double g : t) CHECK(std::fabs(g) < 1e-12);
    }
}

TEST_CASE("cache/batch mismatch errors") {
    GradCheckSetup s = make_setup(CellKind::kRnn, 22);
    std::vector<const MvtsInstance*> batch = {&s.data.instances[0]};
    std::vector<ModelCache> caches(2);
    auto views = model_param_views(s.model);
    GradBag grads = GradBag::like(views);
    CHECK_THROWS_AS(model_backward(s.model, batch, s.extremes, caches, s.weights, grads), NumericError);
}

TEST_CASE("adam step fixtures") {
    std::vector<double> p = {1.0, -2.0};
    std::vector<std::span<double>> views = {std::span<double>(p)};
    AdamState state = AdamState::like(views);
    GradBag grads = GradBag::like(views);

    SUBCASE("zero gradient leaves parameters, increments the step") {
        adam_step(views, grads, state, 0.1);
        CHECK(p == std::vector<double>{1.0, -2.0});
        CHECK(state.step == 1);
    }
    SUBCASE("first step moves by ~lr * sign(g)") {
        grads.tensors[0] = {0.3, -40.0};
        adam_step(views, grads, state, 0.01);
        CHECK(p[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
        CHECK(p[1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-6));
    }
    SUBCASE("the transition is a pure function of (params, grads, state)") {
        grads.tensors[0] = {0.5, 0.25};
        std::vector<double> p2 = p;
        std::vector<std::span<double>> views2 = {std::span<double>(p2)};
        AdamState state2 = AdamState::like(views2);
        adam_step(views, grads, state, 0.05);
        adam_step(views2, grads, state2, 0.05);
        CHECK(p == p2);
        CHECK(state.m == state2.m);
        CHECK(state.v == state2.v);
    }
}

namespace {

LabeledDataset tiny_synth(std::uint64_t seed) {
    SynthConfig cfg;
    cfg.n_instances = 24;
    cfg.imbalance = 0.25;
    cfg.tau = 20;
    cfg.n_channels = 2;
    cfg.seed = seed;
    return generate_synthetic(cfg);
}

ExtremeSet tiny_extremes(const LabeledDataset& data) {
    ExtremeSet ex;
    // hand-made extremes in a small output space
    ex.by_class["F"] = {"f", 0.0, {3.0, -1.0, 0.5}};
    ex.by_class["NF"] = {"nf", 0.0, {-2.0, 2.0, -0.5}};
    (void)data;
    return ex;
}

}  // namespace

TEST_CASE("train_embedder configuration validation") {
    auto data = tiny_synth(3);
    auto ex = tiny_extremes(data);
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(train_embedder(data, ex, cfg), ConfigError);
}

TEST_CASE("training is deterministic and loss decreases") {
    auto data = tiny_synth(3);
    auto ex = tiny_extremes(data);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.hidden_dim = 6;
    cfg.batch_size = 8;
    cfg.seed = 12;

    auto m1 = train_embedder(data, ex, cfg);
    auto m2 = train_embedder(data, ex, cfg);

    CHECK(m1.training_log.size() == 5);
    CHECK(m1.training_log.back() < m1.training_log.front());

    auto v1 = model_param_views(m1);
    auto v2 = model_param_views(m2);
    REQUIRE(v1.size() == v2.size());
    for (std::size_t t = 0; t < v1.size(); ++t) {
        REQUIRE(v1[t].size() == v2[t].size());
        for (std::size_t i = 0; i < v1[t].size(); ++i) CHECK(v1[t][i] == v2[t][i]);  // bit-identical
    }

    SUBCASE("embed_dataset is deterministic and order preserving") {
        auto e1 = embed_dataset(m1, data);
        auto e2 = embed_dataset(m1, data);
        REQUIRE(e1.size() == data.size());
        for (std::size_t i = 0; i < e1.size(); ++i) {
            CHECK(e1[i].id == data.instances[i].id);
            CHECK(e1[i].values == e2[i].values);
        }
    }

    SUBCASE("model JSON round trip preserves parameters exactly") {
        auto path = std::filesystem::temp_directory_path() / "excon_test_model.json";
        save_model(m1, path);
        auto back = load_model(path);
        auto vb = model_param_views(back);
        for (std::size_t t = 0; t < v1.size(); ++t) {
            for (std::size_t i = 0; i < v1[t].size(); ++i) CHECK(v1[t][i] == vb[t][i]);
        }
        CHECK(back.training_log == m1.training_log);
        CHECK(back.extremes.of("F").vector == ex.of("F").vector);
        // a reloaded model embeds identically
        auto e1 = embed_dataset(m1, data);
        auto e2 = embed_dataset(back, data);
        for (std::size_t i = 0; i < e1.size(); ++i) CHECK(e1[i].values == e2[i].values);
    }
}

TEST_CASE("epoch-sum consistency: full-batch loss equals the dataset loss") {
    auto data = tiny_synth(5);
    auto ex = tiny_extremes(data);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.hidden_dim = 5;
    cfg.dropout = 0.0;
    cfg.batch_size = data.size();
    cfg.shuffle = false;
    cfg.seed = 9;
    auto model = train_embedder(data, ex, cfg);

    // recompute one full-batch backward at the trained parameters
    std::map<std::string, double> weights;
    for (const auto& inst : data.instances) weights[inst.label] += 1.0;
    for (auto& [l, w] : weights) w = 1.0 / w;
    std::vector<const MvtsInstance*> batch;
    std::vector<ModelCache> caches(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        batch.push_back(&data.instances[i]);
        model_forward(model, data.instances[i].values, ForwardMode::kTrain, nullptr, &caches[i]);
    }
    auto views = model_param_views(model);
    GradBag grads = GradBag::like(views);
    double batch_loss = model_backward(model, batch, ex, caches, weights, grads);

    std::vector<std::pair<std::vector<double>, std::string>> embeddings;
    for (const auto& inst : data.instances) {
        embeddings.emplace_back(model_forward(model, inst.values, ForwardMode::kEval, nullptr, nullptr),
                                inst.label);
    }
    CHECK(batch_loss == doctest::Approx(extreme_reconstruction_loss(embeddings, ex)).epsilon(1e-12));
    CHECK(batch_loss == doctest::Approx(model.training_log.back()).epsilon(1e-12));
}

TEST_CASE("projection bias gradient is 2*w*(e - E) for a single sample") {
    GradCheckSetup s = make_setup(CellKind::kLstm, 33, 3, 4, 5, 4, 1);
    std::vector<const MvtsInstance*> batch = {&s.data.instances[0]};
    std::vector<ModelCache> caches(1);
    model_forward(s.model, s.data.instances[0].values, ForwardMode::kTrain, nullptr, &caches[0]);
    auto views = model_param_views(s.model);
    GradBag grads = GradBag::like(views);
    model_backward(s.model, batch, s.extremes, caches, s.weights, grads);

    const auto& e = caches[0].embedding;
    const auto& ex = s.extremes.of(s.data.instances[0].label).vector;
    const double w = s.weights.at(s.data.instances[0].label);
    const auto& bias_grad = grads.tensors.back();
    REQUIRE(bias_grad.size() == e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        CHECK(bias_grad[i] == doctest::Approx(2.0 * w * (e[i] - ex[i])).epsilon(1e-12));
    }
}

TEST_CASE("a single 60x24 instance embeds to one 528-vector usable downstream") {
    SynthConfig cfg;
    cfg.n_instances = 6;
    cfg.imbalance = 0.34;
    cfg.tau = 60;
    cfg.n_channels = 24;
    cfg.seed = 15;
    auto data = generate_synthetic(cfg);

    CounterRng rng(2, 8);
    ExtremeSet ex;
    for (const auto* label : {"F", "NF"}) {
        ExtremeSet::Extreme e;
        e.source_id = label;
        e.vector.resize(528);
        for (double& v : e.vector) v = rng.next_gaussian();
        ex.by_class.emplace(label, std::move(e));
    }
    TrainConfig tc;
    tc.epochs = 1;
    tc.hidden_dim = 4;
    tc.batch_size = 6;
    tc.seed = 1;
    auto model = train_embedder(data, ex, tc);

    LabeledDataset one;
    one.instances.push_back(data.instances[0]);  // the flare-class instance
    one.recompute_classes();
    auto emb = embed_dataset(model, one);
    REQUIRE(emb.size() == 1);
    CHECK(emb[0].values.size() == 528);
    CHECK(emb[0].label == "F");
}

TEST_CASE("gru and rnn models train and round trip through checkpoints") {
    auto data = tiny_synth(6);
    auto ex = tiny_extremes(data);
    for (CellKind kind : {CellKind::kGru, CellKind::kRnn}) {
        TrainConfig cfg;
        cfg.epochs = 2;
        cfg.hidden_dim = 5;
        cfg.batch_size = 8;
        cfg.cell_kind = kind;
        cfg.seed = 19;
        auto model = train_embedder(data, ex, cfg);
        auto path = std::filesystem::temp_directory_path() /
                    ("excon_test_model_" + to_string(kind) + ".json");
        save_model(model, path);
        auto back = load_model(path);
        CHECK(back.cell.kind == kind);
        auto e1 = embed_dataset(model, data);
        auto e2 = embed_dataset(back, data);
        for (std::size_t i = 0; i < e1.size(); ++i) CHECK(e1[i].values == e2[i].values);
    }
}

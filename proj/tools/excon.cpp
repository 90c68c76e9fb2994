#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "excon/errors.hpp"
#include "excon/extremes.hpp"
#include "excon/feature_bank.hpp"
#include "excon/heads.hpp"
#include "excon/ingest.hpp"
#include "excon/metrics.hpp"
#include "excon/pca.hpp"
#include "excon/pipeline.hpp"
#include "excon/preprocess.hpp"

namespace {

using namespace excon;

struct CommonOpts {
    std::uint64_t seed = 42;
    std::string bank = "c22";
    std::string cell = "lstm";
    std::size_t hidden = 128;
    std::size_t epochs = 30;
    double lr = 0.01;
    double dropout = 0.5;
    std::size_t batch = 64;
    std::string head = "lr";
    std::size_t knn_k = 5;
    double lambda = 1e-4;
    std::string positive_class = "F";
    std::vector<std::string> keep_categories;
    std::size_t impute_k = 3;
};

void add_train_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--cell", o.cell, "Recurrent cell: lstm, gru or rnn")->default_val("lstm");
    cmd->add_option("--hidden", o.hidden, "Hidden state dimension")->default_val(128);
    cmd->add_option("--epochs", o.epochs, "Training epochs")->default_val(30);
    cmd->add_option("--lr", o.lr, "Learning rate")->default_val(0.01);
    cmd->add_option("--dropout", o.dropout, "Dropout rate before the projection")->default_val(0.5);
    cmd->add_option("--batch", o.batch, "Minibatch size")->default_val(64);
}

TrainConfig make_train_config(const CommonOpts& o) {
    TrainConfig cfg;
    cfg.cell_kind = cell_kind_from_string(o.cell);
    cfg.hidden_dim = o.hidden;
    cfg.epochs = o.epochs;
    cfg.learning_rate = o.lr;
    cfg.dropout = o.dropout;
    cfg.batch_size = o.batch;
    cfg.seed = o.seed;
    return cfg;
}

LabeledDataset load_preprocessed(const std::string& manifest, const std::vector<std::string>& keep,
                                 std::size_t impute_k) {
    LabeledDataset data = load_manifest_dataset(manifest);
    std::set<std::string> keep_set(keep.begin(), keep.end());
    return preprocess_dataset(data, keep_set, impute_k, /*is_train=*/!keep_set.empty());
}

PredictionSet rows_from_proba(const std::vector<FeatureVector>& test, const Matrix& proba,
                              const std::vector<std::string>& classes) {
    PredictionSet preds;
    preds.classes = classes;
    for (std::size_t i = 0; i < test.size(); ++i) {
        Prediction row;
        row.id = test[i].id;
        row.true_label = test[i].label;
        std::size_t arg = 0;
        for (std::size_t c = 0; c < classes.size(); ++c) {
            if (proba(i, c) > proba(i, arg)) arg = c;
            row.scores.push_back(proba(i, c));
        }
        row.pred_label = classes[arg];
        preds.rows.push_back(std::move(row));
    }
    return preds;
}

PredictionSet head_predictions(const std::string& head_kind, const std::vector<FeatureVector>& train,
                               const std::vector<FeatureVector>& test, std::size_t knn_k, double lambda,
                               const std::filesystem::path& head_out) {
    if (head_kind == "lr") {
        LogisticModel head = fit_logistic(train, lambda);
        if (!head_out.empty()) save_logistic(head, head_out);
        return rows_from_proba(test, predict_logistic(head, test), head.classes);
    }
    if (head_kind == "knn") {
        KnnModel head = fit_knn(train, knn_k);
        if (!head_out.empty()) save_knn(head, head_out);
        KnnPrediction kp = knn_predict(head, test);
        PredictionSet preds;
        preds.classes = head.classes;
        for (std::size_t i = 0; i < test.size(); ++i) {
            Prediction row;
            row.id = test[i].id;
            row.true_label = test[i].label;
            row.pred_label = kp.labels[i];
            for (std::size_t c = 0; c < head.classes.size(); ++c) row.scores.push_back(kp.scores(i, c));
            preds.rows.push_back(std::move(row));
        }
        return preds;
    }
    throw ConfigError("unknown head kind '" + head_kind + "' (expected lr or knn)");
}

void emit_report(const PredictionSet& preds, const std::string& positive_class, const std::string& name,
                 const std::filesystem::path& out_dir) {
    MetricReport report = evaluate_predictions(preds, positive_class);
    save_report(report, out_dir / "report.json");
    std::ofstream table(out_dir / "report.txt");
    table << report_to_table(report, name);
    std::ofstream csv(out_dir / "report.csv");
    csv << report_to_csv_row(report, name, true);
    std::cout << report_to_table(report, name);
}

int run(int argc, char** argv) {
    CLI::App app{"EXCON: extreme-instance contrastive representation learning for imbalanced "
                 "multivariate time series classification"};
    app.require_subcommand(1);
    app.fallthrough(true);

    CommonOpts o;
    app.add_option("--seed", o.seed, "Global random seed")->default_val(42);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a deterministic synthetic imbalanced dataset");
    std::string synth_out = "synth_out";
    std::string synth_name = "synth";
    SynthConfig synth_cfg;
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--name", synth_name, "Dataset name");
    synth->add_option("--n", synth_cfg.n_instances, "Number of instances")->default_val(400);
    synth->add_option("--imbalance", synth_cfg.imbalance, "Positive-class fraction")->default_val(0.05);
    synth->add_option("--tau", synth_cfg.tau, "Timestamps per instance")->default_val(64);
    synth->add_option("--channels", synth_cfg.n_channels, "Channels per instance")->default_val(4);
    synth->add_option("--ar-neg", synth_cfg.ar_neg, "AR(1) coefficient, negative class")->default_val(0.2);
    synth->add_option("--ar-pos", synth_cfg.ar_pos, "AR(1) coefficient, positive class")->default_val(0.9);
    synth->add_option("--sin-amp", synth_cfg.sin_amp_pos, "Positive-class sinusoid amplitude")->default_val(1.0);
    synth->add_option("--sin-period", synth_cfg.sin_period_pos, "Positive-class sinusoid period")->default_val(20.0);
    synth->add_option("--noise-std", synth_cfg.noise_std, "Innovation noise std")->default_val(1.0);

    // extract
    auto* extract = app.add_subcommand("extract", "Impute, normalize and extract bank features");
    std::string extract_data, extract_out;
    extract->add_option("--data", extract_data, "Dataset manifest")->required();
    extract->add_option("--out", extract_out, "Output feature CSV")->required();
    extract->add_option("--bank", o.bank, "Feature bank name")->default_val("c22");
    extract->add_option("--keep-categories", o.keep_categories, "Keep only these categories");
    extract->add_option("--impute-k", o.impute_k, "Imputation donor count")->default_val(3);

    // extremes
    auto* extremes_cmd = app.add_subcommand("extremes", "Derive per-class extreme instances");
    std::string extremes_features, extremes_out;
    extremes_cmd->add_option("--features", extremes_features, "Feature CSV")->required();
    extremes_cmd->add_option("--out", extremes_out, "Output extremes JSON")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the temporal feature embedding module");
    std::string train_data, train_extremes, train_out;
    train_cmd->add_option("--data", train_data, "Training dataset manifest")->required();
    train_cmd->add_option("--extremes", train_extremes, "Extremes JSON")->required();
    train_cmd->add_option("--out", train_out, "Output model JSON")->required();
    train_cmd->add_option("--keep-categories", o.keep_categories, "Keep only these categories");
    train_cmd->add_option("--impute-k", o.impute_k, "Imputation donor count")->default_val(3);
    add_train_flags(train_cmd, o);

    // embed
    auto* embed_cmd = app.add_subcommand("embed", "Embed instances with a trained model");
    std::string embed_data, embed_model, embed_out;
    embed_cmd->add_option("--data", embed_data, "Dataset manifest")->required();
    embed_cmd->add_option("--model", embed_model, "Model JSON")->required();
    embed_cmd->add_option("--out", embed_out, "Output embedding CSV")->required();
    embed_cmd->add_option("--impute-k", o.impute_k, "Imputation donor count")->default_val(3);

    // fit-head
    auto* fit_cmd = app.add_subcommand("fit-head", "Fit a downstream classifier on embeddings");
    std::string fit_features, fit_out;
    fit_cmd->add_option("--features", fit_features, "Embedding/feature CSV")->required();
    fit_cmd->add_option("--out", fit_out, "Output head JSON")->required();
    fit_cmd->add_option("--head", o.head, "Head kind: lr or knn")->default_val("lr");
    fit_cmd->add_option("--k", o.knn_k, "Neighbors for knn")->default_val(5);
    fit_cmd->add_option("--lambda", o.lambda, "L2 strength for lr")->default_val(1e-4);

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "Predict labels for embeddings with a fitted head");
    std::string predict_features, predict_head, predict_out;
    predict_cmd->add_option("--features", predict_features, "Embedding/feature CSV")->required();
    predict_cmd->add_option("--head-model", predict_head, "Head JSON")->required();
    predict_cmd->add_option("--out", predict_out, "Output predictions CSV")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Score predictions with the skill-score suite");
    std::string eval_predictions, eval_out;
    bool eval_macro = false;
    eval_cmd->add_option("--predictions", eval_predictions, "Predictions CSV")->required();
    eval_cmd->add_option("--out", eval_out, "Output report JSON")->required();
    eval_cmd->add_option("--positive-class", o.positive_class, "Positive class label")->default_val("F");
    eval_cmd->add_flag("--macro", eval_macro, "Also emit macro one-vs-rest metrics");

    // pipeline
    auto* pipe_cmd = app.add_subcommand("pipeline", "Run the full train/evaluate pipeline");
    PipelineConfig pcfg;
    std::string pipe_train, pipe_test, pipe_out;
    pipe_cmd->add_option("--train", pipe_train, "Training dataset manifest")->required();
    pipe_cmd->add_option("--test", pipe_test, "Test dataset manifest")->required();
    pipe_cmd->add_option("--out", pipe_out, "Output directory")->required();
    pipe_cmd->add_option("--bank", o.bank, "Feature bank name")->default_val("c22");
    pipe_cmd->add_option("--head", o.head, "Head kind: lr or knn")->default_val("lr");
    pipe_cmd->add_option("--k", o.knn_k, "Neighbors for knn")->default_val(5);
    pipe_cmd->add_option("--lambda", o.lambda, "L2 strength for lr")->default_val(1e-4);
    pipe_cmd->add_option("--positive-class", o.positive_class, "Positive class label")->default_val("F");
    pipe_cmd->add_option("--keep-categories", o.keep_categories, "Train-side category filter");
    pipe_cmd->add_option("--impute-k", o.impute_k, "Imputation donor count")->default_val(3);
    add_train_flags(pipe_cmd, o);

    // baseline
    auto* base_cmd = app.add_subcommand("baseline", "Run a baseline representation end to end");
    std::string base_kind, base_train, base_test, base_out;
    std::size_t rocket_kernels = 1000;
    base_cmd->add_option("kind", base_kind, "mvts2v, lpvv, seq or rocket")->required();
    base_cmd->add_option("--train", base_train, "Training dataset manifest")->required();
    base_cmd->add_option("--test", base_test, "Test dataset manifest")->required();
    base_cmd->add_option("--out", base_out, "Output directory")->required();
    base_cmd->add_option("--head", o.head, "Head kind for representation baselines")->default_val("lr");
    base_cmd->add_option("--k", o.knn_k, "Neighbors for knn")->default_val(5);
    base_cmd->add_option("--lambda", o.lambda, "L2 strength for lr")->default_val(1e-4);
    base_cmd->add_option("--kernels", rocket_kernels, "ROCKET kernel count")->default_val(1000);
    base_cmd->add_option("--positive-class", o.positive_class, "Positive class label")->default_val("F");
    base_cmd->add_option("--impute-k", o.impute_k, "Imputation donor count")->default_val(3);
    add_train_flags(base_cmd, o);

    // project
    auto* project_cmd = app.add_subcommand("project", "Deterministic 2-D PCA projection of vectors");
    std::string project_features, project_out;
    project_cmd->add_option("--features", project_features, "Embedding/feature CSV")->required();
    project_cmd->add_option("--out", project_out, "Output CSV (id,label,x,y)")->required();

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        synth_cfg.seed = o.seed;
        LabeledDataset data = generate_synthetic(synth_cfg);
        auto path = save_manifest_dataset(data, synth_out, synth_name);
        std::cout << "wrote " << path.string() << " (" << data.size() << " instances)\n";
        return 0;
    }
    if (extract->parsed()) {
        LabeledDataset data = load_preprocessed(extract_data, o.keep_categories, o.impute_k);
        auto features = extract_dataset_features(data, FeatureBank::by_name(o.bank));
        write_features_csv(features, extract_out);
        std::cout << "wrote " << extract_out << " (" << features.size() << " vectors)\n";
        return 0;
    }
    if (extremes_cmd->parsed()) {
        auto features = read_features_csv(extremes_features);
        ExtremeSet ex = derive_extremes(features);
        save_extremes(ex, extremes_out);
        std::cout << "wrote " << extremes_out << " (" << ex.by_class.size() << " classes)\n";
        return 0;
    }
    if (train_cmd->parsed()) {
        LabeledDataset data = load_preprocessed(train_data, o.keep_categories, o.impute_k);
        ExtremeSet ex = load_extremes(train_extremes);
        EmbedderModel model = train_embedder(data, ex, make_train_config(o));
        save_model(model, train_out);
        std::cout << "wrote " << train_out << " (final loss " << model.training_log.back() << ")\n";
        return 0;
    }
    if (embed_cmd->parsed()) {
        LabeledDataset data = load_preprocessed(embed_data, {}, o.impute_k);
        EmbedderModel model = load_model(embed_model);
        auto embeddings = embed_dataset(model, data);
        write_features_csv(embeddings, embed_out);
        std::cout << "wrote " << embed_out << " (" << embeddings.size() << " embeddings)\n";
        return 0;
    }
    if (fit_cmd->parsed()) {
        auto features = read_features_csv(fit_features);
        if (o.head == "lr") {
            save_logistic(fit_logistic(features, o.lambda), fit_out);
        } else if (o.head == "knn") {
            save_knn(fit_knn(features, o.knn_k), fit_out);
        } else {
            throw ConfigError("unknown head kind '" + o.head + "'");
        }
        std::cout << "wrote " << fit_out << "\n";
        return 0;
    }
    if (predict_cmd->parsed()) {
        auto features = read_features_csv(predict_features);
        std::ifstream head_in(predict_head);
        if (!head_in) throw DataError("cannot open head file '" + predict_head + "'");
        std::string first_bytes((std::istreambuf_iterator<char>(head_in)), std::istreambuf_iterator<char>());
        PredictionSet preds;
        if (first_bytes.find("\"kind\": \"lr\"") != std::string::npos) {
            LogisticModel head = load_logistic(predict_head);
            preds = rows_from_proba(features, predict_logistic(head, features), head.classes);
        } else {
            KnnModel head = load_knn(predict_head);
            KnnPrediction kp = knn_predict(head, features);
            preds.classes = head.classes;
            for (std::size_t i = 0; i < features.size(); ++i) {
                Prediction row;
                row.id = features[i].id;
                row.true_label = features[i].label;
                row.pred_label = kp.labels[i];
                for (std::size_t c = 0; c < head.classes.size(); ++c) row.scores.push_back(kp.scores(i, c));
                preds.rows.push_back(std::move(row));
            }
        }
        write_predictions_csv(preds, predict_out);
        std::cout << "wrote " << predict_out << " (" << preds.rows.size() << " rows)\n";
        return 0;
    }
    if (eval_cmd->parsed()) {
        PredictionSet preds = read_predictions_csv(eval_predictions);
        MetricReport report = evaluate_predictions(preds, o.positive_class);
        save_report(report, eval_out);
        {
            auto csv_path = std::filesystem::path(eval_out).replace_extension(".csv");
            std::ofstream csv(csv_path);
            csv << report_to_csv_row(report, "run", true);
        }
        std::cout << report_to_table(report, "run");
        if (eval_macro) {
            std::vector<std::string> truths, labels;
            std::map<std::string, std::vector<double>> class_scores;
            for (const auto& r : preds.rows) {
                truths.push_back(r.true_label);
                labels.push_back(r.pred_label);
            }
            for (std::size_t c = 0; c < preds.classes.size(); ++c) {
                auto& v = class_scores[preds.classes[c]];
                for (const auto& r : preds.rows) v.push_back(r.scores[c]);
            }
            MacroReport macro = macro_one_vs_rest(truths, labels, class_scores);
            std::cout << "macro ROC AUC: "
                      << (macro.macro_roc_auc ? std::to_string(*macro.macro_roc_auc) : "undefined") << "\n";
        }
        return 0;
    }
    if (pipe_cmd->parsed()) {
        pcfg.train_manifest = pipe_train;
        pcfg.test_manifest = pipe_test;
        pcfg.out_dir = pipe_out;
        pcfg.bank_name = o.bank;
        pcfg.head_kind = o.head;
        pcfg.knn_k = o.knn_k;
        pcfg.lr_lambda = o.lambda;
        pcfg.positive_class = o.positive_class;
        pcfg.keep_categories = std::set<std::string>(o.keep_categories.begin(), o.keep_categories.end());
        pcfg.impute_k = o.impute_k;
        pcfg.train = make_train_config(o);
        pcfg.seed = o.seed;
        PipelineResult result = run_pipeline(pcfg);
        std::cout << report_to_table(result.report, "excon");
        return 0;
    }
    if (base_cmd->parsed()) {
        std::filesystem::create_directories(base_out);
        LabeledDataset train = load_preprocessed(base_train, {}, o.impute_k);
        LabeledDataset test = load_preprocessed(base_test, {}, o.impute_k);
        PredictionSet preds;
        if (base_kind == "mvts2v" || base_kind == "lpvv") {
            auto represent = [&](const LabeledDataset& d) {
                std::vector<FeatureVector> out;
                out.reserve(d.size());
                for (const auto& inst : d.instances) {
                    FeatureVector f;
                    f.id = inst.id;
                    f.label = inst.label;
                    f.values = base_kind == "mvts2v" ? flatten_mvts(inst) : last_timestamp(inst);
                    out.push_back(std::move(f));
                }
                return out;
            };
            preds = head_predictions(o.head, represent(train), represent(test), o.knn_k, o.lambda,
                                     std::filesystem::path(base_out) / "head.json");
        } else if (base_kind == "rocket") {
            RocketTransform t = make_rocket(rocket_kernels, train.tau(), train.n_channels(), o.seed);
            std::size_t skipped = 0;
            auto train_f = rocket_transform_dataset(t, train, &skipped);
            if (skipped > 0) std::cerr << "warning: " << skipped << " kernel applications skipped\n";
            auto test_f = rocket_transform_dataset(t, test, nullptr);
            preds = head_predictions(o.head, train_f, test_f, o.knn_k, o.lambda,
                                     std::filesystem::path(base_out) / "head.json");
        } else if (base_kind == "seq") {
            TrainConfig cfg = make_train_config(o);
            SeqClassifier model = train_seq_classifier(train, cfg);
            preds = rows_from_proba(
                [&] {
                    std::vector<FeatureVector> ids;
                    for (const auto& inst : test.instances) ids.push_back({inst.id, inst.label, {}});
                    return ids;
                }(),
                seq_predict(model, test), model.classes);
        } else {
            throw ConfigError("unknown baseline '" + base_kind + "' (expected mvts2v, lpvv, seq or rocket)");
        }
        write_predictions_csv(preds, std::filesystem::path(base_out) / "predictions.csv");
        emit_report(preds, o.positive_class, base_kind, base_out);
        return 0;
    }
    if (project_cmd->parsed()) {
        auto features = read_features_csv(project_features);
        auto points = project_pca(features);
        std::ofstream out(project_out);
        if (!out) throw DataError("cannot write '" + project_out + "'");
        out << "id,label,x,y\n";
        char buf[64];
        for (std::size_t i = 0; i < features.size(); ++i) {
            out << features[i].id << ',' << features[i].label;
            std::snprintf(buf, sizeof buf, ",%.17g", points[i][0]);
            out << buf;
            std::snprintf(buf, sizeof buf, ",%.17g", points[i][1]);
            out << buf << '\n';
        }
        std::cout << "wrote " << project_out << "\n";
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

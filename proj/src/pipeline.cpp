#include "excon/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "excon/errors.hpp"
#include "excon/extremes.hpp"
#include "excon/feature_bank.hpp"
#include "excon/preprocess.hpp"

namespace excon {

using nlohmann::json;

void write_predictions_csv(const PredictionSet& preds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write predictions file '" + path.string() + "'");
    out << "id,true_label,pred_label";
    for (const auto& c : preds.classes) out << ",score_" << c;
    out << '\n';
    char buf[64];
    for (const auto& row : preds.rows) {
        if (row.scores.size() != preds.classes.size()) {
            throw DataError("predictions: score count mismatch for id '" + row.id + "'");
        }
        out << row.id << ',' << row.true_label << ',' << row.pred_label;
        for (double s : row.scores) {
            std::snprintf(buf, sizeof buf, "%.17g", s);
            out << ',' << buf;
        }
        out << '\n';
    }
}

PredictionSet read_predictions_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open predictions file '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("predictions file '" + path.string() + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    PredictionSet preds;
    {
        std::stringstream ss(line);
        std::string cell;
        int col = 0;
        while (std::getline(ss, cell, ',')) {
            if (col >= 3) {
                if (cell.rfind("score_", 0) != 0) {
                    throw DataError("predictions file '" + path.string() + "': bad score column '" + cell + "'");
                }
                preds.classes.push_back(cell.substr(6));
            }
            ++col;
        }
        if (col < 3) throw DataError("predictions file '" + path.string() + "' has an unexpected header");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        Prediction row;
        int col = 0;
        while (std::getline(ss, cell, ',')) {
            switch (col) {
                case 0: row.id = cell; break;
                case 1: row.true_label = cell; break;
                case 2: row.pred_label = cell; break;
                default:
                    try {
                        row.scores.push_back(std::stod(cell));
                    } catch (const std::exception&) {
                        throw DataError("predictions file '" + path.string() + "': bad score at line " +
                                        std::to_string(line_no));
                    }
            }
            ++col;
        }
        if (row.scores.size() != preds.classes.size()) {
            throw DataError("predictions file '" + path.string() + "': wrong column count at line " +
                            std::to_string(line_no));
        }
        preds.rows.push_back(std::move(row));
    }
    return preds;
}

MetricReport evaluate_predictions(const PredictionSet& preds, const std::string& positive_class) {
    if (preds.rows.empty()) throw DataError("evaluate_predictions: no predictions");
    std::vector<std::string> truths, labels;
    truths.reserve(preds.rows.size());
    labels.reserve(preds.rows.size());
    for (const auto& r : preds.rows) {
        truths.push_back(r.true_label);
        labels.push_back(r.pred_label);
    }
    MetricReport report = skill_scores(confusion(truths, labels, positive_class));
    auto pos_it = std::find(preds.classes.begin(), preds.classes.end(), positive_class);
    if (pos_it != preds.classes.end()) {
        const std::size_t pos_idx = static_cast<std::size_t>(pos_it - preds.classes.begin());
        std::vector<double> scores;
        scores.reserve(preds.rows.size());
        for (const auto& r : preds.rows) scores.push_back(r.scores[pos_idx]);
        report.roc_auc = roc_auc(scores, truths, positive_class);
    }
    return report;
}

LabeledDataset preprocess_dataset(const LabeledDataset& data, const std::set<std::string>& keep_categories,
                                  std::size_t impute_k, bool is_train) {
    LabeledDataset out = data;
    if (is_train && !keep_categories.empty()) {
        out = filter_label_categories(out, keep_categories);
    }
    out = impute_dataset(out, impute_k);
    out = znormalize_dataset(out);
    return out;
}

namespace {

PredictionSet predict_with_head(const PipelineConfig& cfg, const std::vector<FeatureVector>& train_emb,
                                const std::vector<FeatureVector>& test_emb,
                                const std::filesystem::path& head_path) {
    PredictionSet preds;
    if (cfg.head_kind == "lr") {
        LogisticModel head = fit_logistic(train_emb, cfg.lr_lambda, cfg.lr_max_iter, cfg.lr_tol);
        save_logistic(head, head_path);
        Matrix proba = predict_logistic(head, test_emb);
        preds.classes = head.classes;
        for (std::size_t i = 0; i < test_emb.size(); ++i) {
            Prediction row;
            row.id = test_emb[i].id;
            row.true_label = test_emb[i].label;
            std::size_t arg = 0;
            for (std::size_t c = 0; c < head.classes.size(); ++c) {
                if (proba(i, c) > proba(i, arg)) arg = c;
                row.scores.push_back(proba(i, c));
            }
            row.pred_label = head.classes[arg];
            preds.rows.push_back(std::move(row));
        }
    } else if (cfg.head_kind == "knn") {
        KnnModel head = fit_knn(train_emb, cfg.knn_k);
        save_knn(head, head_path);
        KnnPrediction kp = knn_predict(head, test_emb);
        preds.classes = head.classes;
        for (std::size_t i = 0; i < test_emb.size(); ++i) {
            Prediction row;
            row.id = test_emb[i].id;
            row.true_label = test_emb[i].label;
            row.pred_label = kp.labels[i];
            for (std::size_t c = 0; c < head.classes.size(); ++c) row.scores.push_back(kp.scores(i, c));
            preds.rows.push_back(std::move(row));
        }
    } else {
        throw ConfigError("unknown head kind '" + cfg.head_kind + "' (expected lr or knn)");
    }
    return preds;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    json manifest;
    manifest["schema_version"] = 1;
    manifest["stages"] = json::array();
    auto flag_stage = [&](const std::string& name, const std::string& status,
                          const std::string& artifact = "") {
        json s;
        s["name"] = name;
        s["status"] = status;
        if (!artifact.empty()) s["artifact"] = artifact;
        manifest["stages"].push_back(s);
    };
    auto write_manifest = [&]() {
        std::ofstream out(cfg.out_dir / "run_manifest.json");
        out << manifest.dump(2) << '\n';
    };

    std::string stage = "load";
    try {
        LabeledDataset train_raw = load_manifest_dataset(cfg.train_manifest, cfg.scheme);
        LabeledDataset test_raw = load_manifest_dataset(cfg.test_manifest, cfg.scheme);
        if (train_raw.tau() != test_raw.tau() || train_raw.n_channels() != test_raw.n_channels()) {
            throw DataError("train and test datasets have different shapes");
        }
        flag_stage(stage, "ok");

        stage = "preprocess";
        LabeledDataset train = preprocess_dataset(train_raw, cfg.keep_categories, cfg.impute_k, true);
        LabeledDataset test = preprocess_dataset(test_raw, cfg.keep_categories, cfg.impute_k, false);
        flag_stage(stage, "ok");

        stage = "extract";
        const FeatureBank bank = FeatureBank::by_name(cfg.bank_name);
        auto train_features = extract_dataset_features(train, bank);
        auto features_path = cfg.out_dir / "train_features.csv";
        write_features_csv(train_features, features_path);
        flag_stage(stage, "ok", features_path.string());

        stage = "extremes";
        ExtremeSet extremes = derive_extremes(train_features);
        auto extremes_path = cfg.out_dir / "extremes.json";
        save_extremes(extremes, extremes_path);
        flag_stage(stage, "ok", extremes_path.string());

        stage = "train";
        TrainConfig train_cfg = cfg.train;
        train_cfg.seed = cfg.seed;
        EmbedderModel model = train_embedder(train, extremes, train_cfg);
        auto model_path = cfg.out_dir / "model.json";
        save_model(model, model_path);
        flag_stage(stage, "ok", model_path.string());

        stage = "embed";
        auto train_emb = embed_dataset(model, train);
        auto test_emb = embed_dataset(model, test);
        write_features_csv(train_emb, cfg.out_dir / "train_embeddings.csv");
        write_features_csv(test_emb, cfg.out_dir / "test_embeddings.csv");
        flag_stage(stage, "ok", (cfg.out_dir / "test_embeddings.csv").string());

        stage = "fit-head";
        auto head_path = cfg.out_dir / "head.json";
        PredictionSet preds = predict_with_head(cfg, train_emb, test_emb, head_path);
        flag_stage(stage, "ok", head_path.string());

        stage = "predict";
        auto pred_path = cfg.out_dir / "predictions.csv";
        write_predictions_csv(preds, pred_path);
        flag_stage(stage, "ok", pred_path.string());

        stage = "eval";
        MetricReport report = evaluate_predictions(preds, cfg.positive_class);
        auto report_path = cfg.out_dir / "report.json";
        save_report(report, report_path);
        {
            std::ofstream table(cfg.out_dir / "report.txt");
            table << report_to_table(report, "excon");
            std::ofstream csv(cfg.out_dir / "report.csv");
            csv << report_to_csv_row(report, "excon", true);
        }
        flag_stage(stage, "ok", report_path.string());

        write_manifest();
        return PipelineResult{report, report_path, cfg.out_dir / "run_manifest.json"};
    } catch (const std::exception& e) {
        flag_stage(stage, "failed");
        manifest["error"] = std::string(e.what());
        write_manifest();
        const std::string msg = "pipeline stage '" + stage + "' failed: " + e.what();
        if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(msg);
        if (dynamic_cast<const NumericError*>(&e)) throw NumericError(msg);
        throw DataError(msg);
    }
}

}  // namespace excon

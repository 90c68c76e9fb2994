#include "excon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "excon/errors.hpp"

namespace excon {

using nlohmann::json;

ConfusionCounts confusion(const std::vector<std::string>& truths, const std::vector<std::string>& preds,
                          const std::string& positive_class) {
    if (truths.size() != preds.size()) {
        throw DataError("confusion: " + std::to_string(truths.size()) + " truths vs " +
                        std::to_string(preds.size()) + " predictions");
    }
    if (truths.empty()) throw DataError("confusion: empty label lists");
    ConfusionCounts c;
    c.positive_class = positive_class;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const bool truth_pos = truths[i] == positive_class;
        const bool pred_pos = preds[i] == positive_class;
        if (truth_pos && pred_pos) ++c.tp;
        else if (truth_pos && !pred_pos) ++c.fn;
        else if (!truth_pos && pred_pos) ++c.fp;
        else ++c.tn;
    }
    return c;
}

MetricReport skill_scores(const ConfusionCounts& c) {
    MetricReport r;
    r.counts = c;
    r.n = c.total();
    if (r.n < 1) throw DataError("skill_scores: empty confusion counts");

    const double tp = static_cast<double>(c.tp);
    const double fp = static_cast<double>(c.fp);
    const double fn = static_cast<double>(c.fn);
    const double tn = static_cast<double>(c.tn);
    const double total = static_cast<double>(r.n);

    r.accuracy = (tp + tn) / total;

    // TSS = TPR - FPR
    if (tp + fn > 0 && fp + tn > 0) {
        r.tss = tp / (tp + fn) - fp / (fp + tn);
    }

    // HSS2, chance-corrected accuracy
    const double hss_denom = (tp + fn) * (fn + tn) + (tp + fp) * (fp + tn);
    if (hss_denom > 0) {
        r.hss2 = 2.0 * (tp * tn - fp * fn) / hss_denom;
    }

    if (2 * tp + fp + fn > 0) {
        r.f1 = 2.0 * tp / (2.0 * tp + fp + fn);
    }

    // GS with chance hits CH = (TP+FP)(TP+FN)/n
    const double ch = (tp + fp) * (tp + fn) / total;
    const double gs_denom = tp + fp + fn - ch;
    if (gs_denom != 0.0) {
        r.gs = (tp - ch) / gs_denom;
    }
    return r;
}

std::optional<double> roc_auc(const std::vector<double>& scores, const std::vector<std::string>& truths,
                              const std::string& positive_class) {
    if (scores.size() != truths.size()) {
        throw DataError("roc_auc: " + std::to_string(scores.size()) + " scores vs " +
                        std::to_string(truths.size()) + " truths");
    }
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (const auto& t : truths) {
        if (t == positive_class) ++n_pos;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average ranks over tied score groups
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t t = i; t < j; ++t) {
            if (truths[idx[t]] == positive_class) rank_sum_pos += avg_rank;
        }
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    const double nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

namespace {

void accumulate(double& sum, std::size_t& count, std::size_t& skipped,
                const std::optional<double>& value) {
    if (value) {
        sum += *value;
        ++count;
    } else {
        ++skipped;
    }
}

}  // namespace

MacroReport macro_one_vs_rest(const std::vector<std::string>& truths, const std::vector<std::string>& preds,
                              const std::map<std::string, std::vector<double>>& class_scores) {
    std::set<std::string> classes(truths.begin(), truths.end());
    for (const auto& p : preds) classes.insert(p);
    if (classes.size() < 2) throw DataError("macro_one_vs_rest: need at least two classes");

    MacroReport out;
    double s_acc = 0, s_tss = 0, s_hss = 0, s_f1 = 0, s_gs = 0, s_auc = 0;
    std::size_t c_acc = 0, c_tss = 0, c_hss = 0, c_f1 = 0, c_gs = 0, c_auc = 0;
    for (const auto& cls : classes) {
        MetricReport r = skill_scores(confusion(truths, preds, cls));
        auto it = class_scores.find(cls);
        if (it != class_scores.end()) {
            r.roc_auc = roc_auc(it->second, truths, cls);
        }
        accumulate(s_acc, c_acc, out.skipped_undefined, r.accuracy);
        accumulate(s_tss, c_tss, out.skipped_undefined, r.tss);
        accumulate(s_hss, c_hss, out.skipped_undefined, r.hss2);
        accumulate(s_f1, c_f1, out.skipped_undefined, r.f1);
        accumulate(s_gs, c_gs, out.skipped_undefined, r.gs);
        accumulate(s_auc, c_auc, out.skipped_undefined, r.roc_auc);
        out.per_class.emplace(cls, std::move(r));
    }
    if (c_acc) out.macro_accuracy = s_acc / c_acc;
    if (c_tss) out.macro_tss = s_tss / c_tss;
    if (c_hss) out.macro_hss2 = s_hss / c_hss;
    if (c_f1) out.macro_f1 = s_f1 / c_f1;
    if (c_gs) out.macro_gs = s_gs / c_gs;
    if (c_auc) out.macro_roc_auc = s_auc / c_auc;
    return out;
}

namespace {

json opt_to_json(const std::optional<double>& v) {
    if (v) return *v;
    return nullptr;
}

std::optional<double> opt_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

std::string fmt_opt(const std::optional<double>& v) {
    if (!v) return "undefined";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
}

}  // namespace

std::string report_to_json(const MetricReport& report) {
    json j;
    j["counts"] = {{"tp", report.counts.tp}, {"fp", report.counts.fp},
                   {"fn", report.counts.fn}, {"tn", report.counts.tn}};
    j["positive_class"] = report.counts.positive_class;
    j["n"] = report.n;
    j["accuracy"] = opt_to_json(report.accuracy);
    j["tss"] = opt_to_json(report.tss);
    j["hss2"] = opt_to_json(report.hss2);
    j["f1"] = opt_to_json(report.f1);
    j["gs"] = opt_to_json(report.gs);
    j["roc_auc"] = opt_to_json(report.roc_auc);
    return j.dump(2);
}

MetricReport report_from_json(const std::string& text) {
    json j = json::parse(text);
    MetricReport r;
    r.counts.tp = j.at("counts").at("tp").get<long>();
    r.counts.fp = j.at("counts").at("fp").get<long>();
    r.counts.fn = j.at("counts").at("fn").get<long>();
    r.counts.tn = j.at("counts").at("tn").get<long>();
    r.counts.positive_class = j.at("positive_class").get<std::string>();
    r.n = j.at("n").get<long>();
    r.accuracy = opt_from_json(j.at("accuracy"));
    r.tss = opt_from_json(j.at("tss"));
    r.hss2 = opt_from_json(j.at("hss2"));
    r.f1 = opt_from_json(j.at("f1"));
    r.gs = opt_from_json(j.at("gs"));
    r.roc_auc = opt_from_json(j.at("roc_auc"));
    return r;
}

void save_report(const MetricReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write report '" + path.string() + "'");
    out << report_to_json(report) << '\n';
}

std::string report_to_table(const MetricReport& report, const std::string& name) {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-10s %-10s %-10s %-10s %-10s %-10s %-10s\n", "Method",
                  "Accuracy", "TSS", "HSS2", "F1", "GS", "ROC AUC");
    os << line;
    std::snprintf(line, sizeof line, "%-10s %-10s %-10s %-10s %-10s %-10s %-10s\n", name.c_str(),
                  fmt_opt(report.accuracy).c_str(), fmt_opt(report.tss).c_str(),
                  fmt_opt(report.hss2).c_str(), fmt_opt(report.f1).c_str(), fmt_opt(report.gs).c_str(),
                  fmt_opt(report.roc_auc).c_str());
    os << line;
    return os.str();
}

std::string report_to_csv_row(const MetricReport& report, const std::string& name, bool with_header) {
    std::ostringstream os;
    if (with_header) os << "name,accuracy,tss,hss2,f1,gs,roc_auc,tp,fp,fn,tn,n\n";
    auto cell = [](const std::optional<double>& v) {
        if (!v) return std::string();
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", *v);
        return std::string(buf);
    };
    os << name << ',' << cell(report.accuracy) << ',' << cell(report.tss) << ',' << cell(report.hss2)
       << ',' << cell(report.f1) << ',' << cell(report.gs) << ',' << cell(report.roc_auc) << ','
       << report.counts.tp << ',' << report.counts.fp << ',' << report.counts.fn << ','
       << report.counts.tn << ',' << report.n << '\n';
    return os.str();
}

}  // namespace excon

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace excon {

struct ConfusionCounts {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long tn = 0;
    std::string positive_class;

    long total() const { return tp + fp + fn + tn; }
};

// Skill scores with explicit undefined markers: a zero denominator yields
// nullopt, never NaN.
struct MetricReport {
    ConfusionCounts counts;
    long n = 0;
    std::optional<double> accuracy;
    std::optional<double> tss;
    std::optional<double> hss2;
    std::optional<double> f1;
    std::optional<double> gs;
    std::optional<double> roc_auc;
};

ConfusionCounts confusion(const std::vector<std::string>& truths, const std::vector<std::string>& preds,
                          const std::string& positive_class);

// accuracy, TSS, HSS2, F1 and GS from the 2x2 counts (roc_auc left unset).
MetricReport skill_scores(const ConfusionCounts& c);

// Mann-Whitney AUC with average ranks for ties; nullopt when either class is
// absent.
std::optional<double> roc_auc(const std::vector<double>& scores, const std::vector<std::string>& truths,
                              const std::string& positive_class);

struct MacroReport {
    std::map<std::string, MetricReport> per_class;
    std::optional<double> macro_accuracy;
    std::optional<double> macro_tss;
    std::optional<double> macro_hss2;
    std::optional<double> macro_f1;
    std::optional<double> macro_gs;
    std::optional<double> macro_roc_auc;
    std::size_t skipped_undefined = 0;  // metric values missing from the macro means
};

// Treats each class in turn as positive; macro values are unweighted means
// over the classes where the metric is defined.
MacroReport macro_one_vs_rest(const std::vector<std::string>& truths,
                              const std::vector<std::string>& preds,
                              const std::map<std::string, std::vector<double>>& class_scores);

// JSON object {counts, accuracy, tss, hss2, f1, gs, roc_auc, n, positive_class};
// undefined values render as null.
std::string report_to_json(const MetricReport& report);
MetricReport report_from_json(const std::string& text);
void save_report(const MetricReport& report, const std::filesystem::path& path);

// Aligned one-row table (accuracy, TSS, HSS2, F1, GS, ROC AUC).
std::string report_to_table(const MetricReport& report, const std::string& name);

// CSV summary row for table assembly across runs.
std::string report_to_csv_row(const MetricReport& report, const std::string& name, bool with_header);

}  // namespace excon

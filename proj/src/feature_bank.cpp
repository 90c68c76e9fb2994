#include "excon/feature_bank.hpp"

#include <cmath>

#include "excon/catch22.hpp"
#include "excon/errors.hpp"
#include "excon/parallel.hpp"

namespace excon {

const FeatureBank& FeatureBank::catch22() {
    static const FeatureBank bank = [] {
        FeatureBank b;
        b.name = "c22";
        auto add = [&b](const std::string& name, FeatureBank::Evaluator fn) {
            b.feature_names.push_back(name);
            b.evaluators.push_back(std::move(fn));
        };
        add("DN_HistogramMode_5", c22::dn_histogram_mode_5);
        add("DN_HistogramMode_10", c22::dn_histogram_mode_10);
        add("CO_f1ecac", c22::co_f1ecac);
        add("CO_FirstMin_ac", c22::co_first_min_ac);
        add("CO_HistogramAMI_even_2_5", c22::co_histogram_ami_even_2_5);
        add("CO_trev_1_num", c22::co_trev_1_num);
        add("MD_hrv_classic_pnn40", c22::md_hrv_classic_pnn40);
        add("SB_BinaryStats_mean_longstretch1", c22::sb_binary_stats_mean_longstretch1);
        add("SB_TransitionMatrix_3ac_sumdiagcov", c22::sb_transition_matrix_3ac_sumdiagcov);
        add("PD_PeriodicityWang_th0_01", c22::pd_periodicity_wang_th0_01);
        add("CO_Embed2_Dist_tau_d_expfit_meandiff", c22::co_embed2_dist_tau_d_expfit_meandiff);
        add("IN_AutoMutualInfoStats_40_gaussian_fmmi", c22::in_auto_mutual_info_stats_40_gaussian_fmmi);
        add("FC_LocalSimple_mean1_tauresrat", c22::fc_local_simple_mean1_tauresrat);
        add("DN_OutlierInclude_p_001_mdrmd", c22::dn_outlier_include_p_001_mdrmd);
        add("DN_OutlierInclude_n_001_mdrmd", c22::dn_outlier_include_n_001_mdrmd);
        add("SP_Summaries_welch_rect_area_5_1", c22::sp_summaries_welch_rect_area_5_1);
        add("SB_BinaryStats_diff_longstretch0", c22::sb_binary_stats_diff_longstretch0);
        add("SB_MotifThree_quantile_hh", c22::sb_motif_three_quantile_hh);
        add("SC_FluctAnal_2_rsrangefit_50_1_logi_prop_r1", c22::sc_fluct_anal_2_rsrangefit_50_1_logi_prop_r1);
        add("SC_FluctAnal_2_dfa_50_1_2_logi_prop_r1", c22::sc_fluct_anal_2_dfa_50_1_2_logi_prop_r1);
        add("SP_Summaries_welch_rect_centroid", c22::sp_summaries_welch_rect_centroid);
        add("FC_LocalSimple_mean3_stderr", c22::fc_local_simple_mean3_stderr);
        return b;
    }();
    return bank;
}

FeatureBank FeatureBank::by_name(const std::string& name) {
    if (name == "c22" || name == "catch22") return catch22();
    throw ConfigError("unknown feature bank '" + name + "'");
}

std::vector<double> extract_channel_features(std::span<const double> series, const FeatureBank& bank) {
    const std::size_t n = series.size();
    if (n < 2) throw DataError("extract_channel_features: series too short (length " + std::to_string(n) + ")");

    // z-score once (sample std, reference convention); a constant channel
    // contributes a neutral all-zero block
    double m = 0.0;
    for (double v : series) m += v;
    m /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : series) ss += (v - m) * (v - m);
    double sd = std::sqrt(ss / static_cast<double>(n - 1));

    std::vector<double> out(bank.size(), 0.0);
    if (sd == 0.0 || !std::isfinite(sd)) return out;

    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = (series[i] - m) / sd;

    for (std::size_t j = 0; j < bank.size(); ++j) {
        double v = bank.evaluators[j](z);
        out[j] = std::isfinite(v) ? v : 0.0;
    }
    return out;
}

FeatureVector extract_instance_features(const MvtsInstance& instance, const FeatureBank& bank) {
    const std::size_t n_features = bank.size();
    FeatureVector fv;
    fv.id = instance.id;
    fv.label = instance.label;
    fv.values.resize(n_features * instance.n_channels());
    std::vector<double> column(instance.tau());
    for (std::size_t c = 0; c < instance.n_channels(); ++c) {
        for (std::size_t t = 0; t < instance.tau(); ++t) column[t] = instance.values(t, c);
        std::vector<double> feats;
        try {
            feats = extract_channel_features(column, bank);
        } catch (const DataError& e) {
            throw DataError("instance '" + instance.id + "' channel " + std::to_string(c) + ": " + e.what());
        }
        std::copy(feats.begin(), feats.end(), fv.values.begin() + static_cast<long>(c * n_features));
    }
    return fv;
}

std::vector<FeatureVector> extract_dataset_features(const LabeledDataset& data, const FeatureBank& bank) {
    std::vector<FeatureVector> out(data.size());
    parallel_for(data.size(), [&](std::size_t i) { out[i] = extract_instance_features(data.instances[i], bank); });
    return out;
}

}  // namespace excon

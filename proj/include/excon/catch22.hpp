#pragma once

#include <span>
#include <string>
#include <vector>

namespace excon::c22 {

// The canonical 22-feature set of Lubba et al. (catch22). Functions follow
// the reference C implementation's conventions; inputs are expected to be
// z-scored, which the feature bank takes care of.

double dn_histogram_mode_5(std::span<const double> y);
double dn_histogram_mode_10(std::span<const double> y);
double co_f1ecac(std::span<const double> y);
double co_first_min_ac(std::span<const double> y);
double co_histogram_ami_even_2_5(std::span<const double> y);
double co_trev_1_num(std::span<const double> y);
double md_hrv_classic_pnn40(std::span<const double> y);
double sb_binary_stats_mean_longstretch1(std::span<const double> y);
double sb_transition_matrix_3ac_sumdiagcov(std::span<const double> y);
double pd_periodicity_wang_th0_01(std::span<const double> y);
double co_embed2_dist_tau_d_expfit_meandiff(std::span<const double> y);
double in_auto_mutual_info_stats_40_gaussian_fmmi(std::span<const double> y);
double fc_local_simple_mean1_tauresrat(std::span<const double> y);
double dn_outlier_include_p_001_mdrmd(std::span<const double> y);
double dn_outlier_include_n_001_mdrmd(std::span<const double> y);
double sp_summaries_welch_rect_area_5_1(std::span<const double> y);
double sb_binary_stats_diff_longstretch0(std::span<const double> y);
double sb_motif_three_quantile_hh(std::span<const double> y);
double sc_fluct_anal_2_rsrangefit_50_1_logi_prop_r1(std::span<const double> y);
double sc_fluct_anal_2_dfa_50_1_2_logi_prop_r1(std::span<const double> y);
double sp_summaries_welch_rect_centroid(std::span<const double> y);
double fc_local_simple_mean3_stderr(std::span<const double> y);

// Shared helpers, exposed for tests.

// Biased sample autocorrelation about the global mean, normalized at lag 0;
// lags beyond the series length are 0.
std::vector<double> autocorr(std::span<const double> y);

// First lag where the autocorrelation drops to or below zero, capped at
// max_tau and at the series length.
int first_zero_ac(std::span<const double> y, int max_tau);

}  // namespace excon::c22

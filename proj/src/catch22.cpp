#include "excon/catch22.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

// Ported from the reference C implementation of catch22 (Lubba et al.,
// "catch22: CAnonical Time-series CHaracteristics"), including its
// conventions for binning, interpolation and index handling.

namespace excon::c22 {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean(const double* a, int n) {
    if (n <= 0) return kNaN;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i];
    return s / n;
}

// sample standard deviation (n-1), as in the reference stats helpers
double stddev(const double* a, int n) {
    if (n < 2) return kNaN;
    double m = mean(a, n);
    double ss = 0.0;
    for (int i = 0; i < n; ++i) ss += (a[i] - m) * (a[i] - m);
    return std::sqrt(ss / (n - 1));
}

double median(const double* a, int n) {
    if (n <= 0) return kNaN;
    std::vector<double> tmp(a, a + n);
    std::sort(tmp.begin(), tmp.end());
    if (n % 2 == 1) return tmp[n / 2];
    return 0.5 * (tmp[n / 2 - 1] + tmp[n / 2]);
}

double min_of(const double* a, int n) {
    double m = a[0];
    for (int i = 1; i < n; ++i) {
        if (a[i] < m) m = a[i];
    }
    return m;
}

double max_of(const double* a, int n) {
    double m = a[0];
    for (int i = 1; i < n; ++i) {
        if (a[i] > m) m = a[i];
    }
    return m;
}

// MATLAB-style quantile (linear interpolation of midpoints)
double quantile(const double* y, int n, double q) {
    std::vector<double> tmp(y, y + n);
    std::sort(tmp.begin(), tmp.end());
    double limit = 0.5 / n;
    if (q < limit) return tmp.front();
    if (q > 1.0 - limit) return tmp.back();
    double idx = n * q - 0.5;
    int lo = static_cast<int>(std::floor(idx));
    int hi = static_cast<int>(std::ceil(idx));
    if (lo == hi) return tmp[lo];
    return tmp[lo] + (idx - lo) * (tmp[hi] - tmp[lo]) / (hi - lo);
}

void linreg(int n, const double* x, const double* y, double* slope, double* intercept) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) {
        *slope = 0.0;
        *intercept = 0.0;
        return;
    }
    *slope = (n * sxy - sx * sy) / denom;
    *intercept = (sy - *slope * sx) / n;
}

double norm2(const double* a, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * a[i];
    return std::sqrt(s);
}

// Pearson correlation of the two lag-shifted segments
double autocorr_lag_pearson(const double* y, int n, int lag) {
    int m = n - lag;
    if (m < 2) return kNaN;
    const double* x1 = y;
    const double* x2 = y + lag;
    double m1 = mean(x1, m), m2 = mean(x2, m);
    double num = 0, d1 = 0, d2 = 0;
    for (int i = 0; i < m; ++i) {
        num += (x1[i] - m1) * (x2[i] - m2);
        d1 += (x1[i] - m1) * (x1[i] - m1);
        d2 += (x2[i] - m2) * (x2[i] - m2);
    }
    return num / std::sqrt(d1 * d2);
}

// MATLAB histcounts-style equal-width binning between min and max
void histcounts_fixed(const double* y, int n, int n_bins, std::vector<int>& counts,
                      std::vector<double>& edges) {
    double lo = min_of(y, n), hi = max_of(y, n);
    double step = (hi - lo) / n_bins;
    counts.assign(n_bins, 0);
    edges.resize(n_bins + 1);
    for (int i = 0; i <= n_bins; ++i) edges[i] = lo + i * step;
    for (int i = 0; i < n; ++i) {
        int idx = step > 0 ? static_cast<int>((y[i] - lo) / step) : 0;
        if (idx < 0) idx = 0;
        if (idx >= n_bins) idx = n_bins - 1;
        counts[idx] += 1;
    }
}

double histogram_mode(const double* y, int n, int n_bins) {
    std::vector<int> counts;
    std::vector<double> edges;
    histcounts_fixed(y, n, n_bins, counts, edges);
    int max_count = 0;
    int num_maxs = 1;
    double out = 0.0;
    for (int i = 0; i < n_bins; ++i) {
        if (counts[i] > max_count) {
            max_count = counts[i];
            num_maxs = 1;
            out = 0.5 * (edges[i] + edges[i + 1]);
        } else if (counts[i] == max_count) {
            num_maxs += 1;
            out += 0.5 * (edges[i] + edges[i + 1]);
        }
    }
    return out / num_maxs;
}

// quantile coarse-graining into symbols 1..n_groups
std::vector<int> coarsegrain_quantile(const double* y, int n, int n_groups) {
    std::vector<double> th(n_groups + 1);
    for (int i = 0; i <= n_groups; ++i) th[i] = quantile(y, n, static_cast<double>(i) / n_groups);
    th[0] -= 1.0;
    std::vector<int> labels(n, 0);
    for (int g = 0; g < n_groups; ++g) {
        for (int j = 0; j < n; ++j) {
            if (y[j] > th[g] && y[j] <= th[g + 1]) labels[j] = g + 1;
        }
    }
    return labels;
}

void fft_pow2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = -2.0 * M_PI / static_cast<double>(len);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                auto u = a[i + k];
                auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// One-sided Welch periodogram with a rectangular window spanning the whole
// series (single segment), Fs = 1. Returns power at frequencies i/nfft.
int welch_rect(const double* y, int n, std::vector<double>& power, std::vector<double>& freq) {
    int nfft = 256;
    while (nfft < n) nfft <<= 1;
    std::vector<std::complex<double>> buf(nfft, std::complex<double>(0.0, 0.0));
    for (int i = 0; i < n; ++i) buf[i] = std::complex<double>(y[i], 0.0);
    fft_pow2(buf);
    const int n_out = nfft / 2 + 1;
    power.resize(n_out);
    freq.resize(n_out);
    const double scale = static_cast<double>(n);  // k * ||window||^2 * dt
    for (int i = 0; i < n_out; ++i) {
        double p = std::norm(buf[i]) / scale;
        if (i > 0 && i < n_out - 1) p *= 2.0;
        power[i] = p;
        freq[i] = static_cast<double>(i) / nfft;
    }
    return n_out;
}

enum class SpectrumStat { kArea51, kCentroid };

double welch_summary(std::span<const double> y, SpectrumStat what) {
    const int n = static_cast<int>(y.size());
    if (n < 4) return kNaN;
    std::vector<double> power, freq;
    int n_welch = welch_rect(y.data(), n, power, freq);
    std::vector<double> w(n_welch), sw(n_welch);
    for (int i = 0; i < n_welch; ++i) {
        w[i] = 2.0 * M_PI * freq[i];
        sw[i] = power[i] / (2.0 * M_PI);
        if (std::isinf(sw[i])) return 0.0;
    }
    double dw = w[1] - w[0];
    if (what == SpectrumStat::kCentroid) {
        double total = 0.0;
        for (int i = 0; i < n_welch; ++i) total += sw[i];
        double threshold = 0.5 * total;
        double csum = 0.0;
        for (int i = 0; i < n_welch; ++i) {
            csum += sw[i];
            if (csum > threshold) return w[i];
        }
        return 0.0;
    }
    double area = 0.0;
    for (int i = 0; i < n_welch / 5; ++i) area += sw[i];
    return area * dw;
}

// Least-squares two-piece cubic spline (knot at floor(n/2)-1), evaluated at
// the sample points. Fits in the truncated-power basis, which spans the same
// function space as the reference's B-spline fit.
bool spline_detrend(const double* y, int n, std::vector<double>& fitted) {
    if (n < 8) return false;
    const int knot_idx = n / 2 - 1;
    const double knot = static_cast<double>(knot_idx) / (n - 1);
    const int kDof = 5;
    std::vector<std::array<double, 5>> basis(n);
    for (int i = 0; i < n; ++i) {
        double t = static_cast<double>(i) / (n - 1);
        double tk = t - knot;
        basis[i] = {1.0, t, t * t, t * t * t, tk > 0 ? tk * tk * tk : 0.0};
    }
    double ata[kDof][kDof] = {};
    double aty[kDof] = {};
    for (int i = 0; i < n; ++i) {
        for (int r = 0; r < kDof; ++r) {
            aty[r] += basis[i][r] * y[i];
            for (int c = r; c < kDof; ++c) ata[r][c] += basis[i][r] * basis[i][c];
        }
    }
    for (int r = 1; r < kDof; ++r) {
        for (int c = 0; c < r; ++c) ata[r][c] = ata[c][r];
    }
    // gaussian elimination with partial pivoting
    int perm[kDof] = {0, 1, 2, 3, 4};
    for (int col = 0; col < kDof; ++col) {
        int piv = col;
        for (int r = col + 1; r < kDof; ++r) {
            if (std::fabs(ata[r][col]) > std::fabs(ata[piv][col])) piv = r;
        }
        if (std::fabs(ata[piv][col]) < 1e-12) return false;
        if (piv != col) {
            std::swap(ata[piv], ata[col]);
            std::swap(aty[piv], aty[col]);
            std::swap(perm[piv], perm[col]);
        }
        for (int r = col + 1; r < kDof; ++r) {
            double f = ata[r][col] / ata[col][col];
            for (int c = col; c < kDof; ++c) ata[r][c] -= f * ata[col][c];
            aty[r] -= f * aty[col];
        }
    }
    double beta[kDof];
    for (int r = kDof - 1; r >= 0; --r) {
        double s = aty[r];
        for (int c = r + 1; c < kDof; ++c) s -= ata[r][c] * beta[c];
        beta[r] = s / ata[r][r];
    }
    fitted.resize(n);
    for (int i = 0; i < n; ++i) {
        double v = 0.0;
        for (int r = 0; r < kDof; ++r) v += basis[i][r] * beta[r];
        fitted[i] = v;
    }
    return true;
}

double sb_binary_stats_longstretch(const std::vector<int>& y_bin, int stop_symbol) {
    const int n = static_cast<int>(y_bin.size());
    int max_stretch = 0;
    int last = 0;
    for (int i = 0; i < n; ++i) {
        if (y_bin[i] == stop_symbol || i == n - 1) {
            int stretch = i - last;
            if (stretch > max_stretch) max_stretch = stretch;
            last = i;
        }
    }
    return max_stretch;
}

double fc_local_simple_residuals(std::span<const double> y, int train_length,
                                 std::vector<double>& res) {
    const int n = static_cast<int>(y.size());
    const int m = n - train_length;
    if (m < 2) return 0;
    res.resize(m);
    for (int i = 0; i < m; ++i) {
        double est = 0.0;
        for (int j = 0; j < train_length; ++j) est += y[i + j];
        est /= train_length;
        res[i] = y[i + train_length] - est;
    }
    return m;
}

double dn_outlier_include(std::span<const double> y, double sign) {
    const int n = static_cast<int>(y.size());
    if (n < 2) return kNaN;
    const double inc = 0.01;
    std::vector<double> work(n);
    bool constant = true;
    int tot = 0;
    for (int i = 0; i < n; ++i) {
        if (y[i] != y[0]) constant = false;
        work[i] = sign * y[i];
        if (work[i] >= inc) ++tot;
    }
    if (constant) return 0.0;
    double max_val = max_of(work.data(), n);
    if (max_val < inc) return 0.0;

    const int n_thresh = static_cast<int>(max_val / inc) + 1;
    std::vector<double> ms_mean(n_thresh), ms_pct(n_thresh), ms_mdr(n_thresh);
    std::vector<double> r;
    r.reserve(n);
    for (int j = 0; j < n_thresh; ++j) {
        r.clear();
        for (int i = 0; i < n; ++i) {
            if (work[i] >= j * inc) r.push_back(i + 1);  // 1-based positions
        }
        const int high = static_cast<int>(r.size());
        double dsum = 0.0;
        for (int i = 0; i + 1 < high; ++i) dsum += r[i + 1] - r[i];
        ms_mean[j] = high > 1 ? dsum / (high - 1) : kNaN;
        ms_pct[j] = (high - 1) * 100.0 / tot;
        ms_mdr[j] = median(r.data(), high) / (static_cast<double>(n) / 2.0) - 1.0;
    }

    const int trim_threshold = 2;
    int mj = 0;
    int fbi = n_thresh - 1;
    for (int i = 0; i < n_thresh; ++i) {
        if (ms_pct[i] > trim_threshold) mj = i;
        if (std::isnan(ms_mean[n_thresh - 1 - i])) fbi = n_thresh - 1 - i;
    }
    int trim_limit = std::min(mj, fbi);
    return median(ms_mdr.data(), trim_limit + 1);
}

double sc_fluct_anal_prop_r1(std::span<const double> y, int lag, bool rsrange) {
    const int n = static_cast<int>(y.size());
    if (n < 2 * lag || n / 2 < 5) return 0.0;  // no usable tau grid below that

    // log-spaced window sizes between 5 and n/2
    const int n_steps = 50;
    double lin_lo = std::log(5.0);
    double lin_hi = std::log(static_cast<double>(n / 2));
    double step = (lin_hi - lin_lo) / (n_steps - 1);
    std::vector<int> tau;
    tau.reserve(n_steps);
    for (int i = 0; i < n_steps; ++i) {
        int t = static_cast<int>(std::llround(std::exp(lin_lo + i * step)));
        if (tau.empty() || t != tau.back()) tau.push_back(t);
    }
    const int n_tau = static_cast<int>(tau.size());
    if (n_tau < 12) return 0.0;

    // cumulative sum of the (possibly lag-subsampled) series
    const int n_cs = n / lag;
    std::vector<double> cs(n_cs);
    cs[0] = y[0];
    for (int i = 0; i + 1 < n_cs; ++i) cs[i + 1] = cs[i] + y[(i + 1) * lag];

    std::vector<double> xreg(tau.back());
    for (int i = 0; i < tau.back(); ++i) xreg[i] = i + 1;

    std::vector<double> fluct(n_tau);
    std::vector<double> buffer(tau.back());
    for (int i = 0; i < n_tau; ++i) {
        const int t = tau[i];
        const int n_buffer = n_cs / t;
        double f = 0.0;
        for (int j = 0; j < n_buffer; ++j) {
            double m = 0.0, b = 0.0;
            linreg(t, xreg.data(), cs.data() + j * t, &m, &b);
            for (int k = 0; k < t; ++k) buffer[k] = cs[j * t + k] - (m * (k + 1) + b);
            if (rsrange) {
                double range = max_of(buffer.data(), t) - min_of(buffer.data(), t);
                f += range * range;
            } else {
                for (int k = 0; k < t; ++k) f += buffer[k] * buffer[k];
            }
        }
        fluct[i] = rsrange ? std::sqrt(f / n_buffer) : std::sqrt(f / (n_buffer * t));
    }

    std::vector<double> logt(n_tau), logf(n_tau);
    for (int i = 0; i < n_tau; ++i) {
        logt[i] = std::log(static_cast<double>(tau[i]));
        logf[i] = std::log(fluct[i]);
    }

    // two-regime split: residual norm of a linear fit on each side
    const int min_points = 6;
    const int n_split = n_tau - 2 * min_points + 1;
    std::vector<double> sserr(n_split);
    std::vector<double> resid(n_tau);
    for (int i = min_points; i < n_tau - min_points + 1; ++i) {
        double m1, b1, m2, b2;
        linreg(i, logt.data(), logf.data(), &m1, &b1);
        linreg(n_tau - i + 1, logt.data() + i - 1, logf.data() + i - 1, &m2, &b2);
        for (int j = 0; j < i; ++j) resid[j] = logt[j] * m1 + b1 - logf[j];
        double err = norm2(resid.data(), i);
        for (int j = 0; j < n_tau - i + 1; ++j) resid[j] = logt[j + i - 1] * m2 + b2 - logf[j + i - 1];
        err += norm2(resid.data(), n_tau - i + 1);
        sserr[i - min_points] = err;
    }

    double minimum = min_of(sserr.data(), n_split);
    double first_min_idx = 0.0;
    for (int i = 0; i < n_split; ++i) {
        if (sserr[i] == minimum) {
            first_min_idx = i + min_points - 1;
            break;
        }
    }
    return (first_min_idx + 1.0) / n_tau;
}

}  // namespace

std::vector<double> autocorr(std::span<const double> y) {
    const int n = static_cast<int>(y.size());
    std::vector<double> acf(n, 0.0);
    if (n == 0) return acf;
    double m = mean(y.data(), n);
    double var0 = 0.0;
    for (int i = 0; i < n; ++i) var0 += (y[i] - m) * (y[i] - m);
    for (int lag = 0; lag < n; ++lag) {
        double s = 0.0;
        for (int i = 0; i + lag < n; ++i) s += (y[i] - m) * (y[i + lag] - m);
        acf[lag] = s / var0;
    }
    return acf;
}

int first_zero_ac(std::span<const double> y, int max_tau) {
    auto acf = autocorr(y);
    const int n = static_cast<int>(acf.size());
    int idx = 0;
    while (idx < max_tau && idx < n && acf[idx] > 0) ++idx;
    return idx;
}

double dn_histogram_mode_5(std::span<const double> y) {
    return histogram_mode(y.data(), static_cast<int>(y.size()), 5);
}

double dn_histogram_mode_10(std::span<const double> y) {
    return histogram_mode(y.data(), static_cast<int>(y.size()), 10);
}

double co_f1ecac(std::span<const double> y) {
    const int n = static_cast<int>(y.size());
    auto acf = autocorr(y);
    const double threshold = 1.0 / std::exp(1.0);
    double out = static_cast<double>(n);
    for (int i = 0; i + 2 < n; ++i) {
        if (acf[i + 1] < threshold) {
            double slope = acf[i + 1] - acf[i];
            return i + (threshold - acf[i]) / slope;
        }
    }
    return out;
}

double co_first_min_ac(std::span<const double> y) {
    const int n = static_cast<int>(y.size());
    auto acf = autocorr(y);
    for (int i = 1; i + 1 < n; ++i) {
        if (acf[i] < acf[i - 1] && acf[i] < acf[i + 1]) return i;
    }
    return n;
}

double co_histogram_ami_even_2_5(std::span<const double> y) {
    const int n = static_cast<int>(y.size());
    const int tau = 2;
    const int n_bins = 5;
    if (n <= tau) return kNaN;
    double lo = min_of(y.data(), n), hi = max_of(y.data(), n);
    double bin_step = (hi - lo + 0.2) / n_bins;
    auto bin_of = [&](double v) {
        int b = static_cast<int>((v - (lo - 0.1)) / bin_step);
        if (b < 0) b = 0;
        if (b >= n_bins) b = n_bins - 1;
        return b;
    };
    double joint[n_bins][n_bins] = {};
    const int pairs = n - tau;
    for (int t = 0; t < pairs; ++t) joint[bin_of(y[t])][bin_of(y[t + tau])] += 1.0;
    double pi[n_bins] = {}, pj[n_bins] = {};
    for (int i = 0; i < n_bins; ++i) {
        for (int j = 0; j < n_bins; ++j) {
            joint[i][j] /= pairs;
            pi[i] += joint[i][j];
            pj[j] += joint[i][j];
        }
    }
    double ami = 0.0;
    for (int i = 0; i < n_bins; ++i) {
        for (int j = 0; j < n_bins; ++j) {
            if (joint[i][j] > 0) ami += joint[i][j] * std::log(joint[i][j] / (pi[i] * pj[j]));
        }
    }
    return ami;
}

double co_trev_1_num(std::span<const double> y) {
    const int n = static_cast<int>(y.size());
    if (n < 2) return kNaN;
    double s = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
        double d = y[i + 1] - y[i];
        s += d * d * d;
    }
    return s / (n - 1);
}

double md_hrv_classic_pnn40(std::span<const double> y) {
    const int n = static_cast<int>(y.size());
    if (n < 2) return kNaN;
    const double threshold = 0.04;
    int count = 0;
    for (int i = 0; i + 1 < n; ++i) {
        if (std::fabs(y[i + 1] - y[i]) > threshold) ++count;
    }
    return static_cast<double>(count) / (n - 1);
}

double sb_binary_stats_mean_longstretch1(std::span<const double> y) {
    const int n = static_cast<int>(y.size());
    if (n < 2) return kNaN;
    double m = mean(y.data(), n);
    std::vector<int> y_bin(n - 1);
    for (int i = 0; i < n - 1; ++i) y_bin[i] = (y[i] - m <= 0) ? 0 : 1;
    return sb_binary_stats_longstretch(y_bin, 0);
}

double sb_binary_stats_diff_longstretch0(std::span<const double> y) {
    const int n = static_cast<int>(y.size());
    if (n < 2) return kNaN;
    std::vector<int> y_bin(n - 1);
    for (int i = 0; i < n - 1; ++i) y_bin[i] = (y[i + 1] - y[i] < 0) ? 0 : 1;
    return sb_binary_stats_longstretch(y_bin, 1);
}

double sb_transition_matrix_3ac_sumdiagcov(std::span<const double> y) {
    const int n = static_cast<int>(y.size());
    if (n < 3) return kNaN;
    const int n_groups = 3;
    int tau = first_zero_ac(y, n);
    if (tau < 1) return kNaN;
    const int n_down = (n - 1) / tau + 1;
    if (n_down < 2) return kNaN;
    std::vector<double> down(n_down);
    for (int i = 0; i < n_down; ++i) down[i] = y[i * tau];
    auto symbols = coarsegrain_quantile(down.data(), n_down, n_groups);

    double t_mat[3][3] = {};
    for (int j = 0; j + 1 < n_down; ++j) t_mat[symbols[j] - 1][symbols[j + 1] - 1] += 1.0;
    for (auto& row : t_mat) {
        for (double& v : row) v /= (n_down - 1);
    }
    // trace of the covariance matrix of the transition-matrix columns
    double out = 0.0;
    for (int j = 0; j < 3; ++j) {
        double col[3] = {t_mat[0][j], t_mat[1][j], t_mat[2][j]};
        double cm = (col[0] + col[1] + col[2]) / 3.0;
        double var = 0.0;
        for (double v : col) var += (v - cm) * (v - cm);
        out += var / 2.0;
    }
    return out;
}

double pd_periodicity_wang_th0_01(std::span<const double> y) {
    const int n = static_cast<int>(y.size());
    const double threshold = 0.01;
    std::vector<double> fitted;
    if (!spline_detrend(y.data(), n, fitted)) return 0.0;
    std::vector<double> sub(n);
    for (int i = 0; i < n; ++i) sub[i] = y[i] - fitted[i];

    const int ac_max = static_cast<int>(std::ceil(static_cast<double>(n) / 3.0));
    std::vector<double> acf(ac_max);
    for (int tau = 1; tau <= ac_max; ++tau) {
        double s = 0.0;
        const int m = n - tau;
        for (int i = 0; i < m; ++i) s += sub[i] * sub[i + tau];
        acf[tau - 1] = m > 0 ? s / m : 0.0;
    }

    std::vector<int> troughs, peaks;
    for (int i = 1; i + 1 < ac_max; ++i) {
        double slope_in = acf[i] - acf[i - 1];
        double slope_out = acf[i + 1] - acf[i];
        if (slope_in < 0 && slope_out > 0) {
            troughs.push_back(i);
        } else if (slope_in > 0 && slope_out < 0) {
            peaks.push_back(i);
        }
    }

    for (int peak : peaks) {
        // the last trough before this peak
        int before = -1;
        for (std::size_t j = 0; j < troughs.size() && troughs[j] < peak; ++j) {
            before = troughs[j];
        }
        if (before < 0) continue;
        if (acf[peak] - acf[before] < threshold) continue;
        if (acf[peak] < 0) continue;
        return peak;
    }
    return 0;
}

double co_embed2_dist_tau_d_expfit_meandiff(std::span<const double> y) {
    const int n = static_cast<int>(y.size());
    int tau = first_zero_ac(y, n);
    if (tau > n / 10) tau = n / 10;
    const int m = n - tau - 1;
    if (m < 3 || tau < 1) return kNaN;
    std::vector<double> d(m);
    for (int i = 0; i < m; ++i) {
        double dx = y[i + 1] - y[i];
        double dy = y[i + tau] - y[i + tau + 1];
        d[i] = std::sqrt(dx * dx + dy * dy);
    }
    double scale = mean(d.data(), m);

    double sd = stddev(d.data(), m);
    if (!(sd >= 0.001)) return 0.0;
    int n_bins = static_cast<int>(
        std::ceil((max_of(d.data(), m) - min_of(d.data(), m)) / (3.5 * sd / std::cbrt(static_cast<double>(m)))));
    if (n_bins <= 0) return 0.0;
    std::vector<int> counts;
    std::vector<double> edges;
    histcounts_fixed(d.data(), m, n_bins, counts, edges);

    double sum_abs_diff = 0.0;
    for (int i = 0; i < n_bins; ++i) {
        double center = 0.5 * (edges[i] + edges[i + 1]);
        double expf = std::exp(-center / scale) / scale;
        if (expf < 0) expf = 0;
        double density = counts[i] / static_cast<double>(m) / (edges[i + 1] - edges[i]);
        sum_abs_diff += std::fabs(density - expf);
    }
    return sum_abs_diff / n_bins;
}

double in_auto_mutual_info_stats_40_gaussian_fmmi(std::span<const double> y) {
    const int n = static_cast<int>(y.size());
    int tau = 40;
    int half = static_cast<int>(std::ceil(static_cast<double>(n) / 2.0));
    if (tau > half) tau = half;
    if (tau < 2) return kNaN;
    std::vector<double> ami(tau);
    for (int i = 0; i < tau; ++i) {
        double ac = autocorr_lag_pearson(y.data(), n, i + 1);
        ami[i] = -0.5 * std::log(1.0 - ac * ac);
    }
    double fmmi = tau;
    for (int i = 1; i + 1 < tau; ++i) {
        if (ami[i] < ami[i - 1] && ami[i] < ami[i + 1]) {
            fmmi = i;
            break;
        }
    }
    return fmmi;
}

double fc_local_simple_mean1_tauresrat(std::span<const double> y) {
    const int n = static_cast<int>(y.size());
    std::vector<double> res;
    if (fc_local_simple_residuals(y, 1, res) < 2) return kNaN;
    double res_zero = first_zero_ac(res, static_cast<int>(res.size()));
    double y_zero = first_zero_ac(y, n);
    return res_zero / y_zero;
}

double fc_local_simple_mean3_stderr(std::span<const double> y) {
    std::vector<double> res;
    if (fc_local_simple_residuals(y, 3, res) < 2) return kNaN;
    return stddev(res.data(), static_cast<int>(res.size()));
}

double dn_outlier_include_p_001_mdrmd(std::span<const double> y) { return dn_outlier_include(y, 1.0); }

double dn_outlier_include_n_001_mdrmd(std::span<const double> y) { return dn_outlier_include(y, -1.0); }

double sp_summaries_welch_rect_area_5_1(std::span<const double> y) {
    return welch_summary(y, SpectrumStat::kArea51);
}

double sp_summaries_welch_rect_centroid(std::span<const double> y) {
    return welch_summary(y, SpectrumStat::kCentroid);
}

double sb_motif_three_quantile_hh(std::span<const double> y) {
    const int n = static_cast<int>(y.size());
    if (n < 2) return kNaN;
    auto symbols = coarsegrain_quantile(y.data(), n, 3);
    double joint[3][3] = {};
    for (int t = 0; t + 1 < n; ++t) joint[symbols[t] - 1][symbols[t + 1] - 1] += 1.0;
    double hh = 0.0;
    for (auto& row : joint) {
        for (double& v : row) {
            v /= (n - 1);
            if (v > 0) hh += v * std::log(v);
        }
    }
    return -hh;
}

double sc_fluct_anal_2_rsrangefit_50_1_logi_prop_r1(std::span<const double> y) {
    return sc_fluct_anal_prop_r1(y, 1, true);
}

double sc_fluct_anal_2_dfa_50_1_2_logi_prop_r1(std::span<const double> y) {
    return sc_fluct_anal_prop_r1(y, 2, false);
}

}  // namespace excon::c22

#include "excon/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "excon/errors.hpp"

namespace excon {

namespace {

struct ChannelStats {
    double mean = 0.0;
    double std = 0.0;  // population
    std::size_t n = 0;
};

// Stats over the observed (finite) entries of a channel.
ChannelStats observed_stats(const Matrix& values, std::size_t channel) {
    ChannelStats s;
    double sum = 0.0;
    for (std::size_t t = 0; t < values.rows(); ++t) {
        double v = values(t, channel);
        if (std::isfinite(v)) {
            sum += v;
            ++s.n;
        }
    }
    if (s.n == 0) return s;
    s.mean = sum / static_cast<double>(s.n);
    double ss = 0.0;
    for (std::size_t t = 0; t < values.rows(); ++t) {
        double v = values(t, channel);
        if (std::isfinite(v)) ss += (v - s.mean) * (v - s.mean);
    }
    s.std = std::sqrt(ss / static_cast<double>(s.n));
    return s;
}

// Linear interpolation within a channel; boundary gaps take the nearest
// observed value. Assumes the channel has at least one observed entry.
void interpolate_channel(Matrix& values, std::size_t channel) {
    const std::size_t tau = values.rows();
    std::size_t t = 0;
    while (t < tau) {
        if (std::isfinite(values(t, channel))) {
            ++t;
            continue;
        }
        std::size_t gap_start = t;
        while (t < tau && !std::isfinite(values(t, channel))) ++t;
        std::size_t gap_end = t;  // one past the gap
        bool has_left = gap_start > 0;
        bool has_right = gap_end < tau;
        if (has_left && has_right) {
            double left = values(gap_start - 1, channel);
            double right = values(gap_end, channel);
            double span = static_cast<double>(gap_end - gap_start + 1);
            for (std::size_t g = gap_start; g < gap_end; ++g) {
                double frac = static_cast<double>(g - gap_start + 1) / span;
                values(g, channel) = left + frac * (right - left);
            }
        } else {
            double fill = has_left ? values(gap_start - 1, channel) : values(gap_end, channel);
            for (std::size_t g = gap_start; g < gap_end; ++g) values(g, channel) = fill;
        }
    }
}

}  // namespace

MvtsInstance znormalize_instance(const MvtsInstance& instance) {
    const std::size_t tau = instance.tau();
    const std::size_t n = instance.n_channels();
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t t = 0; t < tau; ++t) {
            if (!std::isfinite(instance.values(t, c))) {
                throw DataError("znormalize: non-finite entry in instance '" + instance.id +
                                "' at channel " + std::to_string(c) + ", timestamp " + std::to_string(t));
            }
        }
    }
    MvtsInstance out = instance;
    for (std::size_t c = 0; c < n; ++c) {
        double mean = 0.0;
        for (std::size_t t = 0; t < tau; ++t) mean += instance.values(t, c);
        mean /= static_cast<double>(tau);
        double ss = 0.0;
        for (std::size_t t = 0; t < tau; ++t) {
            double d = instance.values(t, c) - mean;
            ss += d * d;
        }
        double sd = std::sqrt(ss / static_cast<double>(tau));
        if (sd == 0.0) {
            for (std::size_t t = 0; t < tau; ++t) out.values(t, c) = 0.0;
        } else {
            for (std::size_t t = 0; t < tau; ++t) out.values(t, c) = (instance.values(t, c) - mean) / sd;
        }
    }
    return out;
}

MvtsInstance impute_missing(const MvtsInstance& instance, std::size_t k) {
    if (k < 1) throw ConfigError("impute_missing: k must be >= 1");
    const std::size_t tau = instance.tau();
    const std::size_t n = instance.n_channels();

    std::vector<ChannelStats> stats(n);
    bool any_observed = false;
    for (std::size_t c = 0; c < n; ++c) {
        stats[c] = observed_stats(instance.values, c);
        if (stats[c].n > 0) any_observed = true;
    }
    if (!any_observed) {
        throw DataError("impute_missing: instance '" + instance.id + "' has every channel fully missing");
    }
    for (std::size_t c = 0; c < n; ++c) {
        if (stats[c].n == 0) {
            throw DataError("impute_missing: channel " + std::to_string(c) + " of instance '" +
                            instance.id + "' is fully missing");
        }
    }

    MvtsInstance out = instance;
    for (std::size_t c = 0; c < n; ++c) {
        if (stats[c].n == tau) continue;  // complete channel

        // Rank donor channels by |Pearson r| over co-observed timestamps.
        struct Donor {
            std::size_t channel;
            double abs_r;
            double mean_d, std_d;  // donor stats over the co-observed window
        };
        std::vector<Donor> donors;
        for (std::size_t d = 0; d < n; ++d) {
            if (d == c) continue;
            double sx = 0, sy = 0;
            std::size_t m = 0;
            for (std::size_t t = 0; t < tau; ++t) {
                double a = instance.values(t, c), b = instance.values(t, d);
                if (std::isfinite(a) && std::isfinite(b)) {
                    sx += a;
                    sy += b;
                    ++m;
                }
            }
            if (m < 3) continue;
            double mx = sx / m, my = sy / m;
            double sxx = 0, syy = 0, sxy = 0;
            for (std::size_t t = 0; t < tau; ++t) {
                double a = instance.values(t, c), b = instance.values(t, d);
                if (std::isfinite(a) && std::isfinite(b)) {
                    sxx += (a - mx) * (a - mx);
                    syy += (b - my) * (b - my);
                    sxy += (a - mx) * (b - my);
                }
            }
            if (sxx == 0.0 || syy == 0.0) continue;
            double r = sxy / std::sqrt(sxx * syy);
            donors.push_back({d, std::fabs(r), my, std::sqrt(syy / m)});
        }
        std::stable_sort(donors.begin(), donors.end(),
                         [](const Donor& a, const Donor& b) { return a.abs_r > b.abs_r; });
        if (donors.size() > k) donors.resize(k);

        bool need_interp = donors.empty();
        if (!need_interp) {
            for (std::size_t t = 0; t < tau; ++t) {
                if (std::isfinite(instance.values(t, c))) continue;
                double wsum = 0.0, zsum = 0.0;
                for (const Donor& d : donors) {
                    double v = instance.values(t, d.channel);
                    if (!std::isfinite(v) || d.std_d == 0.0) continue;
                    double z = (v - d.mean_d) / d.std_d;
                    zsum += d.abs_r * z;
                    wsum += d.abs_r;
                }
                if (wsum > 0.0) {
                    out.values(t, c) = stats[c].mean + (zsum / wsum) * stats[c].std;
                } else {
                    need_interp = true;  // no donor observed here
                }
            }
        }
        if (need_interp) interpolate_channel(out.values, c);
    }
    return out;
}

LabeledDataset filter_label_categories(const LabeledDataset& data, const std::set<std::string>& keep) {
    LabeledDataset out;
    out.meta = data.meta;
    for (const auto& inst : data.instances) {
        if (keep.count(inst.category)) out.instances.push_back(inst);
    }
    if (out.instances.empty()) {
        throw DataError("filter_label_categories: no instance matches the kept categories");
    }
    out.recompute_classes();
    return out;
}

LabeledDataset znormalize_dataset(const LabeledDataset& data) {
    LabeledDataset out = data;
    for (auto& inst : out.instances) inst = znormalize_instance(inst);
    return out;
}

LabeledDataset impute_dataset(const LabeledDataset& data, std::size_t k) {
    LabeledDataset out = data;
    for (auto& inst : out.instances) inst = impute_missing(inst, k);
    return out;
}

}  // namespace excon

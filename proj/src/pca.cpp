#include "excon/pca.hpp"

#include <cmath>

#include "excon/errors.hpp"

namespace excon {

namespace {

// Power iteration for the top eigenvector of X^T X / m, with optional
// deflation against an earlier direction.
std::vector<double> top_direction(const std::vector<std::vector<double>>& x,
                                  const std::vector<double>* deflate, bool* degenerate) {
    const std::size_t m = x.size();
    const std::size_t d = x.front().size();
    std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d)));
    if (deflate) {
        double dot = 0.0;
        for (std::size_t i = 0; i < d; ++i) dot += v[i] * (*deflate)[i];
        for (std::size_t i = 0; i < d; ++i) v[i] -= dot * (*deflate)[i];
    }

    std::vector<double> next(d);
    std::vector<double> proj(m);
    for (int iter = 0; iter < 1000; ++iter) {
        for (std::size_t r = 0; r < m; ++r) {
            double s = 0.0;
            for (std::size_t i = 0; i < d; ++i) s += x[r][i] * v[i];
            proj[r] = s;
        }
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t i = 0; i < d; ++i) next[i] += proj[r] * x[r][i];
        }
        for (double& t : next) t /= static_cast<double>(m);
        if (deflate) {
            double dot = 0.0;
            for (std::size_t i = 0; i < d; ++i) dot += next[i] * (*deflate)[i];
            for (std::size_t i = 0; i < d; ++i) next[i] -= dot * (*deflate)[i];
        }
        double norm = 0.0;
        for (double t : next) norm += t * t;
        norm = std::sqrt(norm);
        if (norm < 1e-300) {
            *degenerate = true;
            return std::vector<double>(d, 0.0);
        }
        double delta = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            next[i] /= norm;
            delta += (next[i] - v[i]) * (next[i] - v[i]);
        }
        v = next;
        if (std::sqrt(delta) < 1e-10) break;
    }
    // sign convention: the largest-magnitude loading is positive
    std::size_t arg = 0;
    for (std::size_t i = 1; i < d; ++i) {
        if (std::fabs(v[i]) > std::fabs(v[arg])) arg = i;
    }
    if (v[arg] < 0) {
        for (double& t : v) t = -t;
    }
    *degenerate = false;
    return v;
}

}  // namespace

std::vector<std::array<double, 2>> project_pca(const std::vector<std::vector<double>>& vectors) {
    if (vectors.size() < 2) throw DataError("project_pca: need at least two vectors");
    const std::size_t m = vectors.size();
    const std::size_t d = vectors.front().size();
    for (const auto& v : vectors) {
        if (v.size() != d) throw DataError("project_pca: inconsistent vector lengths");
    }

    std::vector<double> mean(d, 0.0);
    for (const auto& v : vectors) {
        for (std::size_t i = 0; i < d; ++i) mean[i] += v[i];
    }
    for (double& v : mean) v /= static_cast<double>(m);
    std::vector<std::vector<double>> centered(m, std::vector<double>(d));
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t i = 0; i < d; ++i) centered[r][i] = vectors[r][i] - mean[i];
    }

    bool degenerate1 = false, degenerate2 = false;
    auto v1 = top_direction(centered, nullptr, &degenerate1);
    std::vector<std::array<double, 2>> out(m, {0.0, 0.0});
    if (degenerate1) return out;  // zero-variance data
    auto v2 = top_direction(centered, &v1, &degenerate2);

    for (std::size_t r = 0; r < m; ++r) {
        double a = 0.0, b = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            a += centered[r][i] * v1[i];
            if (!degenerate2) b += centered[r][i] * v2[i];
        }
        out[r] = {a, b};
    }
    return out;
}

std::vector<std::array<double, 2>> project_pca(const std::vector<FeatureVector>& vectors) {
    std::vector<std::vector<double>> raw;
    raw.reserve(vectors.size());
    for (const auto& f : vectors) raw.push_back(f.values);
    return project_pca(raw);
}

}  // namespace excon

#include <doctest.h>

#include <cmath>

#include "excon/errors.hpp"
#include "excon/pca.hpp"
#include "excon/rng.hpp"

using namespace excon;

TEST_CASE("axis-aligned data is recovered up to sign/order") {
    // variance 3 along dim0, variance ~0.1 along dim1
    CounterRng rng(61, 0);
    std::vector<std::vector<double>> x;
    for (int i = 0; i < 60; ++i) {
        x.push_back({3.0 * rng.next_gaussian(), 0.3 * rng.next_gaussian()});
    }
    auto pts = project_pca(x);

    // axis 1 should essentially reproduce centered dim0
    double mean0 = 0;
    for (const auto& v : x) mean0 += v[0];
    mean0 /= x.size();
    double corr_num = 0, corr_a = 0, corr_b = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double a = x[i][0] - mean0;
        corr_num += a * pts[i][0];
        corr_a += a * a;
        corr_b += pts[i][0] * pts[i][0];
    }
    CHECK(std::fabs(corr_num / std::sqrt(corr_a * corr_b)) > 0.999);
}

TEST_CASE("projection variance is ordered") {
    CounterRng rng(62, 0);
    std::vector<std::vector<double>> x;
    for (int i = 0; i < 80; ++i) {
        std::vector<double> row(5);
        for (double& v : row) v = rng.next_gaussian();
        row[2] *= 4.0;
        x.push_back(row);
    }
    auto pts = project_pca(x);
    double v1 = 0, v2 = 0;
    for (const auto& p : pts) {
        v1 += p[0] * p[0];
        v2 += p[1] * p[1];
    }
    CHECK(v1 >= v2);
}

TEST_CASE("duplicated dataset projects to duplicated points") {
    CounterRng rng(63, 0);
    std::vector<std::vector<double>> x;
    for (int i = 0; i < 20; ++i) x.push_back({rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian()});
    auto base = project_pca(x);
    auto doubled_input = x;
    doubled_input.insert(doubled_input.end(), x.begin(), x.end());
    auto doubled = project_pca(doubled_input);
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(doubled[i][0] == doctest::Approx(doubled[i + x.size()][0]).epsilon(1e-12));
        CHECK(doubled[i][1] == doctest::Approx(doubled[i + x.size()][1]).epsilon(1e-12));
    }
}

TEST_CASE("zero-variance data lands at the origin") {
    std::vector<std::vector<double>> x(5, std::vector<double>{2.0, -1.0, 0.5});
    auto pts = project_pca(x);
    for (const auto& p : pts) {
        CHECK(p[0] == 0.0);
        CHECK(p[1] == 0.0);
    }
}

TEST_CASE("needs at least two vectors") {
    CHECK_THROWS_AS(project_pca(std::vector<std::vector<double>>{{1.0}}), DataError);
}

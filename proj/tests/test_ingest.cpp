#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "excon/errors.hpp"
#include "excon/ingest.hpp"
#include "excon/rng.hpp"

using namespace excon;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("excon_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// two-sample Kolmogorov-Smirnov statistic
double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) ++i;
        else ++j;
        double fa = double(i) / a.size(), fb = double(j) / b.size();
        d = std::max(d, std::fabs(fa - fb));
    }
    return d;
}

}  // namespace

TEST_CASE("manifest dataset round trip") {
    SynthConfig cfg;
    cfg.n_instances = 12;
    cfg.imbalance = 0.25;
    cfg.tau = 10;
    cfg.n_channels = 3;
    cfg.seed = 5;
    auto data = generate_synthetic(cfg);

    auto dir = temp_dir("roundtrip");
    auto manifest = save_manifest_dataset(data, dir, "ds");
    auto loaded = load_manifest_dataset(manifest);

    REQUIRE(loaded.size() == data.size());
    CHECK(loaded.tau() == 10);
    CHECK(loaded.n_channels() == 3);
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(loaded.instances[i].id == data.instances[i].id);
        CHECK(loaded.instances[i].label == data.instances[i].label);
        CHECK(loaded.instances[i].category == data.instances[i].category);
        CHECK(loaded.instances[i].values.data() == data.instances[i].values.data());  // bit-exact
    }

    SUBCASE("save(load(x)) == load(save(x))") {
        auto dir2 = temp_dir("roundtrip2");
        auto manifest2 = save_manifest_dataset(loaded, dir2, "ds");
        auto loaded2 = load_manifest_dataset(manifest2);
        for (std::size_t i = 0; i < data.size(); ++i) {
            CHECK(loaded2.instances[i].values.data() == loaded.instances[i].values.data());
        }
    }
}

TEST_CASE("manifest error paths") {
    auto dir = temp_dir("manifest_errors");

    SUBCASE("shape mismatch names the offending id") {
        std::ofstream csv(dir / "x.csv");
        csv << "1,2\n3,4\n";  // 2 rows, manifest will claim 3
        csv.close();
        std::ofstream man(dir / "bad.manifest.json");
        man << R"({"schema_version":1,"shape":[3,2],"entries":[{"id":"x1","path":"x.csv","category":"FQ","label":"NF"}]})";
        man.close();
        try {
            load_manifest_dataset(dir / "bad.manifest.json");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("x1") != std::string::npos);
        }
    }
    SUBCASE("empty manifest") {
        std::ofstream man(dir / "empty.manifest.json");
        man << R"({"schema_version":1,"shape":[3,2],"entries":[]})";
        man.close();
        CHECK_THROWS_AS(load_manifest_dataset(dir / "empty.manifest.json"), DataError);
    }
    SUBCASE("malformed CSV reports the line") {
        std::ofstream csv(dir / "y.csv");
        csv << "1,2\n3,oops\n4,5\n";
        csv.close();
        std::ofstream man(dir / "bad2.manifest.json");
        man << R"({"schema_version":1,"shape":[3,2],"entries":[{"id":"y1","path":"y.csv","category":"FQ","label":"NF"}]})";
        man.close();
        try {
            load_manifest_dataset(dir / "bad2.manifest.json");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
    SUBCASE("unknown category without label is a labeling error") {
        std::ofstream csv(dir / "z.csv");
        csv << "1,2\n3,4\n5,6\n";
        csv.close();
        std::ofstream man(dir / "bad3.manifest.json");
        man << R"({"schema_version":1,"shape":[3,2],"entries":[{"id":"z1","path":"z.csv","category":"weird"}]})";
        man.close();
        CHECK_THROWS_AS(load_manifest_dataset(dir / "bad3.manifest.json"), DataError);
    }
    SUBCASE("labels derive from categories via the scheme") {
        std::ofstream csv(dir / "w.csv");
        csv << "1,2\n3,4\n5,6\n";
        csv.close();
        std::ofstream man(dir / "ok.manifest.json");
        man << R"({"schema_version":1,"shape":[3,2],"entries":[{"id":"w1","path":"w.csv","category":"M"}]})";
        man.close();
        auto data = load_manifest_dataset(dir / "ok.manifest.json");
        CHECK(data.instances[0].label == "F");
    }
}

TEST_CASE("slice windows") {
    Matrix series(10, 2);
    for (std::size_t t = 0; t < 10; ++t) {
        series(t, 0) = t;
        series(t, 1) = 10 * t;
    }
    SUBCASE("T=10, obs=5, step=1 gives 6 slices") {
        auto slices = slice_windows(series, 5, 1);
        REQUIRE(slices.size() == 6);
        // exact submatrix copies
        for (std::size_t i = 0; i < slices.size(); ++i) {
            for (std::size_t t = 0; t < 5; ++t) {
                CHECK(slices[i].values(t, 0) == series(i + t, 0));
                CHECK(slices[i].values(t, 1) == series(i + t, 1));
            }
        }
    }
    SUBCASE("full window") {
        auto slices = slice_windows(series, 10, 3);
        CHECK(slices.size() == 1);
    }
    SUBCASE("window longer than the series") {
        Matrix small(4, 2);
        CHECK_THROWS_AS(slice_windows(small, 5, 1), DataError);
    }
    SUBCASE("count formula by enumeration") {
        for (std::size_t obs = 1; obs <= 10; ++obs) {
            for (std::size_t step = 1; step <= 4; ++step) {
                auto slices = slice_windows(series, obs, step);
                std::size_t expected = 0;
                for (std::size_t s = 0; s + obs <= 10; s += step) ++expected;
                CHECK(slices.size() == expected);
            }
        }
    }
}

TEST_CASE("synthetic generation") {
    SUBCASE("exact class counts") {
        SynthConfig cfg;
        cfg.n_instances = 500;
        cfg.imbalance = 0.02;
        cfg.tau = 8;
        cfg.n_channels = 1;
        auto data = generate_synthetic(cfg);
        std::size_t positives = 0;
        for (const auto& inst : data.instances) {
            if (inst.label == "F") ++positives;
        }
        CHECK(positives == 10);
        CHECK(data.size() == 500);
    }
    SUBCASE("same seed twice is bit-identical") {
        SynthConfig cfg;
        cfg.n_instances = 20;
        cfg.imbalance = 0.2;
        cfg.tau = 16;
        cfg.n_channels = 2;
        cfg.seed = 123;
        auto a = generate_synthetic(cfg);
        auto b = generate_synthetic(cfg);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a.instances[i].values.data() == b.instances[i].values.data());
        }
    }
    SUBCASE("degenerate rounding errors out") {
        SynthConfig cfg;
        cfg.n_instances = 10;
        cfg.imbalance = 0.01;  // rounds to 0 positives
        CHECK_THROWS_AS(generate_synthetic(cfg), ConfigError);
    }
    SUBCASE("identical class dynamics are statistically indistinguishable (KS)") {
        SynthConfig cfg;
        cfg.n_instances = 400;
        cfg.imbalance = 0.1;
        cfg.tau = 64;
        cfg.n_channels = 2;
        cfg.ar_pos = cfg.ar_neg = 0.2;
        cfg.sin_amp_pos = 0.0;
        cfg.seed = 99;
        auto data = generate_synthetic(cfg);
        std::vector<double> pos_pool, neg_pool;
        for (const auto& inst : data.instances) {
            auto& pool = inst.label == "F" ? pos_pool : neg_pool;
            pool.insert(pool.end(), inst.values.data().begin(), inst.values.data().end());
        }
        CHECK(ks_statistic(pos_pool, neg_pool) < 0.05);
    }
}

TEST_CASE("feature csv") {
    auto dir = temp_dir("features");
    SUBCASE("round trips bit-exactly") {
        CounterRng rng(4, 9);
        std::vector<FeatureVector> features;
        for (int i = 0; i < 7; ++i) {
            FeatureVector f;
            f.id = "inst-" + std::to_string(i);
            f.label = i % 2 ? "F" : "NF";
            for (int j = 0; j < 11; ++j) f.values.push_back(rng.next_gaussian() * 1e3);
            features.push_back(std::move(f));
        }
        write_features_csv(features, dir / "f.csv");
        auto back = read_features_csv(dir / "f.csv");
        REQUIRE(back.size() == features.size());
        for (std::size_t i = 0; i < back.size(); ++i) {
            CHECK(back[i].id == features[i].id);
            CHECK(back[i].label == features[i].label);
            CHECK(back[i].values == features[i].values);  // exact
        }
    }
    SUBCASE("empty list writes a header-only file") {
        write_features_csv({}, dir / "empty.csv");
        std::ifstream in(dir / "empty.csv");
        std::string line;
        CHECK(std::getline(in, line));
        CHECK(line == "id,label");
        CHECK(!std::getline(in, line));
    }
    SUBCASE("mixed lengths error") {
        std::vector<FeatureVector> bad = {{"a", "F", {1.0, 2.0}}, {"b", "NF", {1.0}}};
        CHECK_THROWS_AS(write_features_csv(bad, dir / "bad.csv"), DataError);
    }
}

TEST_CASE("manifest bookkeeping at the 60x24 shape") {
    SynthConfig cfg;
    cfg.n_instances = 3;
    cfg.imbalance = 0.34;  // rounds to 1 positive
    cfg.tau = 60;
    cfg.n_channels = 24;
    cfg.seed = 77;
    auto data = generate_synthetic(cfg);
    auto dir = temp_dir("shape6024");
    auto manifest = save_manifest_dataset(data, dir, "ds");
    auto loaded = load_manifest_dataset(manifest);
    CHECK(loaded.size() == 3);
    CHECK(loaded.tau() == 60);
    CHECK(loaded.n_channels() == 24);
}

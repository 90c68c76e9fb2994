#include <doctest.h>

#include <cmath>

#include "excon/errors.hpp"
#include "excon/metrics.hpp"
#include "excon/rng.hpp"

using namespace excon;

TEST_CASE("confusion counts") {
    std::vector<std::string> truths = {"F", "F", "NF"};
    std::vector<std::string> preds = {"F", "NF", "NF"};
    auto c = confusion(truths, preds, "F");
    CHECK(c.tp == 1);
    CHECK(c.fn == 1);
    CHECK(c.fp == 0);
    CHECK(c.tn == 1);

    SUBCASE("all correct") {
        auto c2 = confusion(truths, truths, "F");
        CHECK(c2.fp == 0);
        CHECK(c2.fn == 0);
    }
    SUBCASE("swapping the positive class swaps roles") {
        auto c2 = confusion(truths, preds, "NF");
        CHECK(c2.tp == c.tn);
        CHECK(c2.tn == c.tp);
        CHECK(c2.fp == c.fn);
        CHECK(c2.fn == c.fp);
    }
    SUBCASE("length mismatch") {
        std::vector<std::string> short_preds = {"F"};
        CHECK_THROWS_AS(confusion(truths, short_preds, "F"), DataError);
    }
}

TEST_CASE("skill scores: perfect classifier") {
    auto r = skill_scores({10, 0, 0, 90, "F"});
    CHECK(*r.accuracy == doctest::Approx(1.0));
    CHECK(*r.tss == doctest::Approx(1.0));
    CHECK(*r.f1 == doctest::Approx(1.0));
}

TEST_CASE("skill scores: hand-computed fixture") {
    // TP=3, FP=10, FN=2, TN=85
    ConfusionCounts c;
    c.tp = 3;
    c.fp = 10;
    c.fn = 2;
    c.tn = 85;
    c.positive_class = "F";
    auto r = skill_scores(c);
    CHECK(*r.accuracy == doctest::Approx(0.88).epsilon(1e-9));
    CHECK(*r.tss == doctest::Approx(0.494737).epsilon(1e-5));
    CHECK(*r.hss2 == doctest::Approx(470.0 / 1670.0).epsilon(1e-9));
    CHECK(*r.f1 == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(*r.gs == doctest::Approx(2.35 / 14.35).epsilon(1e-9));
}

TEST_CASE("skill scores: always-majority predictor has TSS 0") {
    auto r = skill_scores({0, 0, 5, 95, "F"});
    CHECK(*r.tss == doctest::Approx(0.0));
    CHECK(*r.accuracy == doctest::Approx(0.95));
}

TEST_CASE("skill scores: undefined markers instead of NaN") {
    // no true positives possible: TP+FN = 0
    auto r = skill_scores({0, 3, 0, 7, "F"});
    CHECK(!r.tss.has_value());
    CHECK(r.accuracy.has_value());
}

TEST_CASE("roc auc fixtures") {
    SUBCASE("pairwise fixture 5/6") {
        std::vector<double> scores = {0.9, 0.4, 0.5, 0.1, 0.2};
        std::vector<std::string> truths = {"F", "F", "NF", "NF", "NF"};
        auto auc = roc_auc(scores, truths, "F");
        CHECK(*auc == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    }
    SUBCASE("perfect separation") {
        std::vector<double> scores = {0.9, 0.8, 0.2, 0.1};
        std::vector<std::string> truths = {"F", "F", "NF", "NF"};
        CHECK(*roc_auc(scores, truths, "F") == doctest::Approx(1.0));
    }
    SUBCASE("all-tied scores give 0.5") {
        std::vector<double> scores = {0.3, 0.3, 0.3, 0.3};
        std::vector<std::string> truths = {"F", "NF", "F", "NF"};
        CHECK(*roc_auc(scores, truths, "F") == doctest::Approx(0.5));
    }
    SUBCASE("single class undefined") {
        std::vector<double> scores = {0.3, 0.4};
        std::vector<std::string> truths = {"F", "F"};
        CHECK(!roc_auc(scores, truths, "F").has_value());
    }
}

TEST_CASE("roc auc properties on random score sets") {
    for (int rep = 0; rep < 1000; ++rep) {
        CounterRng rng(20240 + rep, 1);
        const std::size_t n = 5 + rng.next_index(40);
        std::vector<double> scores(n);
        std::vector<std::string> truths(n);
        bool has_pos = false, has_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = rng.next_double();
            if (rng.next_double() < 0.3) scores[i] = std::round(scores[i] * 8.0) / 8.0;  // inject ties
            bool pos = rng.next_double() < 0.4;
            truths[i] = pos ? "F" : "NF";
            has_pos |= pos;
            has_neg |= !pos;
        }
        if (!has_pos || !has_neg) continue;
        auto auc = roc_auc(scores, truths, "F");
        std::vector<double> negated(n), warped(n);
        for (std::size_t i = 0; i < n; ++i) {
            negated[i] = -scores[i];
            warped[i] = std::exp(3.0 * scores[i]) + 7.0;  // strictly increasing transform
        }
        auto auc_neg = roc_auc(negated, truths, "F");
        auto auc_warp = roc_auc(warped, truths, "F");
        REQUIRE(auc.has_value());
        CHECK(*auc + *auc_neg == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(*auc_warp == doctest::Approx(*auc).epsilon(1e-12));
        CHECK(*auc >= 0.0);
        CHECK(*auc <= 1.0);
    }
}

TEST_CASE("roc auc random-scores sanity") {
    CounterRng rng(555, 2);
    const std::size_t n = 10000;
    std::vector<double> scores(n);
    std::vector<std::string> truths(n);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = rng.next_double();
        truths[i] = rng.next_double() < 0.5 ? "F" : "NF";
    }
    auto auc = roc_auc(scores, truths, "F");
    CHECK(*auc > 0.48);
    CHECK(*auc < 0.52);
}

TEST_CASE("tss is invariant under swapping the positive class") {
    CounterRng rng(99, 3);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<std::string> truths, preds;
        for (int i = 0; i < 30; ++i) {
            truths.push_back(rng.next_double() < 0.3 ? "F" : "NF");
            preds.push_back(rng.next_double() < 0.4 ? "F" : "NF");
        }
        auto ra = skill_scores(confusion(truths, preds, "F"));
        auto rb = skill_scores(confusion(truths, preds, "NF"));
        if (ra.tss && rb.tss) CHECK(*ra.tss == doctest::Approx(*rb.tss).epsilon(1e-12));
    }
}

TEST_CASE("macro one-vs-rest") {
    SUBCASE("binary macro AUC equals either one-vs-rest value") {
        std::vector<std::string> truths = {"F", "F", "NF", "NF", "NF"};
        std::vector<std::string> preds = {"F", "NF", "NF", "NF", "F"};
        std::map<std::string, std::vector<double>> scores;
        scores["F"] = {0.9, 0.4, 0.5, 0.1, 0.2};
        scores["NF"] = {0.1, 0.6, 0.5, 0.9, 0.8};
        auto macro = macro_one_vs_rest(truths, preds, scores);
        CHECK(*macro.macro_roc_auc == doctest::Approx(*macro.per_class.at("F").roc_auc).epsilon(1e-12));
        CHECK(*macro.per_class.at("F").roc_auc == doctest::Approx(*macro.per_class.at("NF").roc_auc).epsilon(1e-12));
    }
    SUBCASE("never-predicted class skips undefined entries") {
        std::vector<std::string> truths = {"a", "b", "c", "a", "b"};
        std::vector<std::string> preds = {"a", "b", "a", "a", "b"};  // c never predicted, never hit
        auto macro = macro_one_vs_rest(truths, preds, {});
        CHECK(macro.per_class.size() == 3);
        CHECK(macro.macro_f1.has_value());
        CHECK(macro.skipped_undefined > 0);  // no scores provided, AUC undefined everywhere
    }
    SUBCASE("macro of identical per-class reports equals the per-class value") {
        std::vector<std::string> truths = {"a", "b", "a", "b"};
        std::vector<std::string> preds = {"a", "b", "b", "a"};
        auto macro = macro_one_vs_rest(truths, preds, {});
        CHECK(*macro.macro_f1 == doctest::Approx(*macro.per_class.at("a").f1));
    }
}

TEST_CASE("report JSON round trip with null markers") {
    auto r = skill_scores({0, 3, 0, 7, "F"});
    r.roc_auc = std::nullopt;
    std::string text = report_to_json(r);
    CHECK(text.find("\"tss\": null") != std::string::npos);
    auto back = report_from_json(text);
    CHECK(!back.tss.has_value());
    CHECK(back.counts.fp == 3);
    CHECK(*back.accuracy == doctest::Approx(*r.accuracy));
}

TEST_CASE("skill scores match a brute-force recomputation from label lists") {
    CounterRng rng(7, 4);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<std::string> truths, preds;
        for (int i = 0; i < 40; ++i) {
            truths.push_back(rng.next_double() < 0.25 ? "F" : "NF");
            preds.push_back(rng.next_double() < 0.35 ? "F" : "NF");
        }
        auto r = skill_scores(confusion(truths, preds, "F"));
        long tp = 0, fp = 0, fn = 0, tn = 0;
        for (std::size_t i = 0; i < truths.size(); ++i) {
            if (truths[i] == "F" && preds[i] == "F") ++tp;
            if (truths[i] != "F" && preds[i] == "F") ++fp;
            if (truths[i] == "F" && preds[i] != "F") ++fn;
            if (truths[i] != "F" && preds[i] != "F") ++tn;
        }
        CHECK(*r.accuracy == doctest::Approx(double(tp + tn) / truths.size()).epsilon(1e-12));
        if (r.tss) {
            CHECK(*r.tss ==
                  doctest::Approx(double(tp) / (tp + fn) - double(fp) / (fp + tn)).epsilon(1e-12));
        }
    }
}

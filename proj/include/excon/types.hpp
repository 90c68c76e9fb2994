#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "excon/matrix.hpp"

namespace excon {

// One multivariate time series: tau timestamps by n_channels parameters.
struct MvtsInstance {
    std::string id;
    Matrix values;  // tau x N
    std::string label;
    std::string category;  // optional fine-grained category (e.g. FQ/B/C/M/X)

    std::size_t tau() const { return values.rows(); }
    std::size_t n_channels() const { return values.cols(); }
};

struct LabeledDataset {
    std::vector<MvtsInstance> instances;
    std::vector<std::string> classes;  // distinct labels, sorted
    std::map<std::string, std::string> meta;

    std::size_t size() const { return instances.size(); }
    bool empty() const { return instances.empty(); }
    std::size_t tau() const { return instances.empty() ? 0 : instances.front().tau(); }
    std::size_t n_channels() const { return instances.empty() ? 0 : instances.front().n_channels(); }

    void recompute_classes() {
        std::set<std::string> s;
        for (const auto& inst : instances) s.insert(inst.label);
        classes.assign(s.begin(), s.end());
    }
};

// Maps fine-grained categories to class labels and names the positive class.
struct LabelScheme {
    std::map<std::string, std::string> category_to_label;
    std::string positive_class;

    std::optional<std::string> label_of(const std::string& category) const {
        auto it = category_to_label.find(category);
        if (it == category_to_label.end()) return std::nullopt;
        return it->second;
    }

    // The flare-forecasting convention: {FQ,B,C} -> NF, {M,X} -> F.
    static LabelScheme flare_default() {
        LabelScheme s;
        s.category_to_label = {{"FQ", "NF"}, {"B", "NF"}, {"C", "NF"}, {"M", "F"}, {"X", "F"}};
        s.positive_class = "F";
        return s;
    }
};

// Length-d feature vector for one instance (d = 22 * N for the default bank).
struct FeatureVector {
    std::string id;
    std::string label;
    std::vector<double> values;
};

}  // namespace excon

#include "excon/extremes.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "excon/errors.hpp"

namespace excon {

using nlohmann::json;

const ExtremeSet::Extreme& ExtremeSet::of(const std::string& label) const {
    auto it = by_class.find(label);
    if (it == by_class.end()) throw DataError("no extreme recorded for class '" + label + "'");
    return it->second;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DataError("euclidean_distance: length mismatch (" + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + ")");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

ExtremeSet derive_extremes(const std::vector<FeatureVector>& features) {
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < features.size(); ++i) members[features[i].label].push_back(i);
    if (members.size() < 2) throw DataError("derive_extremes: need at least two classes");
    for (const auto& [label, idx] : members) {
        if (idx.empty()) throw DataError("derive_extremes: class '" + label + "' is empty");
    }

    ExtremeSet out;
    for (const auto& [label, own] : members) {
        std::size_t best_idx = 0;
        double best_dist = -1.0;
        for (std::size_t v : own) {
            // complete linkage against the union of all other classes
            double max_dist = 0.0;
            for (std::size_t w = 0; w < features.size(); ++w) {
                if (features[w].label == label) continue;
                double d = euclidean_distance(features[v].values, features[w].values);
                if (d > max_dist) max_dist = d;
            }
            if (max_dist > best_dist) {  // strict: ties keep the earlier index
                best_dist = max_dist;
                best_idx = v;
            }
        }
        ExtremeSet::Extreme e;
        e.source_id = features[best_idx].id;
        e.distance = best_dist;
        e.vector = features[best_idx].values;
        out.by_class.emplace(label, std::move(e));
    }
    return out;
}

void save_extremes(const ExtremeSet& extremes, const std::filesystem::path& path) {
    json j;
    j["schema_version"] = 1;
    json classes = json::object();
    for (const auto& [label, e] : extremes.by_class) {
        classes[label] = {{"id", e.source_id}, {"distance", e.distance}, {"vector", e.vector}};
    }
    j["classes"] = classes;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write extremes file '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

ExtremeSet load_extremes(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open extremes file '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("extremes file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    ExtremeSet out;
    try {
        for (const auto& [label, e] : j.at("classes").items()) {
            ExtremeSet::Extreme ex;
            ex.source_id = e.at("id").get<std::string>();
            ex.distance = e.at("distance").get<double>();
            ex.vector = e.at("vector").get<std::vector<double>>();
            out.by_class.emplace(label, std::move(ex));
        }
    } catch (const json::exception& e) {
        throw DataError("extremes file '" + path.string() + "' has invalid structure: " + e.what());
    }
    return out;
}

}  // namespace excon

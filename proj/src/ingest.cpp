#include "excon/ingest.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "excon/errors.hpp"
#include "excon/rng.hpp"

namespace excon {

namespace {

using nlohmann::json;

double parse_cell(const std::string& cell, const std::string& file, std::size_t line_no) {
    if (cell.empty() || cell == "NaN" || cell == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    try {
        std::size_t pos = 0;
        double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw DataError("malformed CSV value '" + cell + "' in " + file + " at line " +
                        std::to_string(line_no));
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

Matrix load_instance_csv(const std::filesystem::path& path, std::size_t tau, std::size_t n,
                         const std::string& id) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open instance file '" + path.string() + "' for id '" + id + "'");
    Matrix m(tau, n);
    std::string line;
    std::size_t row = 0;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (row >= tau) {
            throw DataError("shape mismatch for id '" + id + "': more than " + std::to_string(tau) +
                            " rows in " + path.string());
        }
        auto cells = split_csv_line(line);
        if (cells.size() != n) {
            throw DataError("shape mismatch for id '" + id + "': expected " + std::to_string(n) +
                            " columns, got " + std::to_string(cells.size()) + " at line " +
                            std::to_string(line_no) + " of " + path.string());
        }
        for (std::size_t c = 0; c < n; ++c) m(row, c) = parse_cell(cells[c], path.string(), line_no);
        ++row;
    }
    if (row != tau) {
        throw DataError("shape mismatch for id '" + id + "': expected " + std::to_string(tau) +
                        " rows, got " + std::to_string(row) + " in " + path.string());
    }
    return m;
}

void write_instance_csv(const Matrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write instance file '" + path.string() + "'");
    char buf[64];
    for (std::size_t t = 0; t < m.rows(); ++t) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) out << ',';
            double v = m(t, c);
            if (std::isnan(v)) {
                out << "NaN";
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", v);
                out << buf;
            }
        }
        out << '\n';
    }
}

}  // namespace

void SynthConfig::validate() const {
    if (n_instances < 2) throw ConfigError("synth: n_instances must be >= 2");
    if (!(imbalance > 0.0 && imbalance < 1.0)) throw ConfigError("synth: imbalance must be in (0,1)");
    if (tau < 1 || n_channels < 1) throw ConfigError("synth: tau and n_channels must be >= 1");
    if (std::fabs(ar_neg) >= 1.0 || std::fabs(ar_pos) >= 1.0) {
        throw ConfigError("synth: AR coefficients must satisfy |ar| < 1");
    }
    if (sin_period_pos < 2.0) throw ConfigError("synth: sin_period_pos must be >= 2");
    if (noise_std <= 0.0) throw ConfigError("synth: noise_std must be > 0");
}

LabeledDataset load_manifest_dataset(const std::filesystem::path& manifest_path, const LabelScheme& scheme) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open manifest '" + manifest_path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("manifest '" + manifest_path.string() + "' is not valid JSON: " + e.what());
    }

    DatasetManifest man;
    try {
        man.schema_version = j.at("schema_version").get<int>();
        man.tau = j.at("shape").at(0).get<std::size_t>();
        man.n_channels = j.at("shape").at(1).get<std::size_t>();
        if (j.contains("channel_names")) {
            man.channel_names = j.at("channel_names").get<std::vector<std::string>>();
        }
        for (const auto& e : j.at("entries")) {
            DatasetManifest::Entry entry;
            entry.id = e.at("id").get<std::string>();
            entry.path = e.at("path").get<std::string>();
            entry.category = e.value("category", "");
            entry.label = e.value("label", "");
            man.entries.push_back(entry);
        }
    } catch (const json::exception& e) {
        throw DataError("manifest '" + manifest_path.string() + "' has invalid structure: " + e.what());
    }
    if (man.schema_version != 1) {
        throw DataError("manifest schema_version " + std::to_string(man.schema_version) + " unsupported");
    }
    if (man.entries.empty()) throw DataError("empty dataset: manifest has no entries");
    if (man.tau < 1 || man.n_channels < 1) throw DataError("manifest shape must be at least (1,1)");

    LabeledDataset data;
    data.meta["source"] = manifest_path.string();
    const auto base = manifest_path.parent_path();
    std::set<std::string> seen_ids;
    for (const auto& e : man.entries) {
        if (!seen_ids.insert(e.id).second) throw DataError("duplicate instance id '" + e.id + "'");
        MvtsInstance inst;
        inst.id = e.id;
        inst.category = e.category;
        if (!e.label.empty()) {
            inst.label = e.label;
        } else {
            auto lbl = scheme.label_of(e.category);
            if (!lbl) {
                throw DataError("unknown category '" + e.category + "' for id '" + e.id +
                                "' under the active label scheme");
            }
            inst.label = *lbl;
        }
        inst.values = load_instance_csv(base / e.path, man.tau, man.n_channels, e.id);
        data.instances.push_back(std::move(inst));
    }
    data.recompute_classes();
    return data;
}

std::filesystem::path save_manifest_dataset(const LabeledDataset& data, const std::filesystem::path& dir,
                                            const std::string& name) {
    if (data.empty()) throw DataError("empty dataset: nothing to save");
    std::filesystem::create_directories(dir / name);
    json j;
    j["schema_version"] = 1;
    j["shape"] = {data.tau(), data.n_channels()};
    json names = json::array();
    for (std::size_t c = 0; c < data.n_channels(); ++c) names.push_back("p" + std::to_string(c));
    j["channel_names"] = names;
    json entries = json::array();
    for (const auto& inst : data.instances) {
        std::string rel = name + "/" + inst.id + ".csv";
        write_instance_csv(inst.values, dir / rel);
        entries.push_back({{"id", inst.id}, {"path", rel}, {"category", inst.category}, {"label", inst.label}});
    }
    j["entries"] = entries;
    auto manifest_path = dir / (name + ".manifest.json");
    std::ofstream out(manifest_path);
    if (!out) throw DataError("cannot write manifest '" + manifest_path.string() + "'");
    out << j.dump(2) << '\n';
    return manifest_path;
}

std::vector<MvtsInstance> slice_windows(const Matrix& long_series, std::size_t obs_len, std::size_t step,
                                        const std::string& id_prefix) {
    if (step < 1) throw ConfigError("slice_windows: step must be >= 1");
    if (obs_len < 1) throw ConfigError("slice_windows: obs_len must be >= 1");
    if (obs_len > long_series.rows()) {
        throw DataError("slice_windows: obs_len " + std::to_string(obs_len) + " exceeds series length " +
                        std::to_string(long_series.rows()));
    }
    const std::size_t count = (long_series.rows() - obs_len) / step + 1;
    std::vector<MvtsInstance> slices;
    slices.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        MvtsInstance inst;
        inst.id = id_prefix + "-" + std::to_string(i);
        inst.values = Matrix(obs_len, long_series.cols());
        const std::size_t start = i * step;
        for (std::size_t t = 0; t < obs_len; ++t) {
            for (std::size_t c = 0; c < long_series.cols(); ++c) {
                inst.values(t, c) = long_series(start + t, c);
            }
        }
        slices.push_back(std::move(inst));
    }
    return slices;
}

LabeledDataset generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    const std::size_t n_pos =
        static_cast<std::size_t>(std::llround(static_cast<double>(cfg.n_instances) * cfg.imbalance));
    if (n_pos == 0 || n_pos == cfg.n_instances) {
        throw ConfigError("synth: rounding yields a single-class dataset (positives=" +
                          std::to_string(n_pos) + " of " + std::to_string(cfg.n_instances) + ")");
    }

    LabeledDataset data;
    data.meta["generator"] = "synthetic-ar1";
    data.meta["seed"] = std::to_string(cfg.seed);
    data.instances.reserve(cfg.n_instances);
    for (std::size_t m = 0; m < cfg.n_instances; ++m) {
        const bool positive = m < n_pos;
        MvtsInstance inst;
        inst.id = (positive ? "pos-" : "neg-") + std::to_string(m);
        inst.label = positive ? cfg.positive_label : cfg.negative_label;
        inst.category = positive ? cfg.positive_category : cfg.negative_category;
        inst.values = Matrix(cfg.tau, cfg.n_channels);
        const double ar = positive ? cfg.ar_pos : cfg.ar_neg;
        const double stationary_std = cfg.noise_std / std::sqrt(1.0 - ar * ar);
        for (std::size_t c = 0; c < cfg.n_channels; ++c) {
            // one stream per (seed, instance, channel): reproducible across
            // iteration order and thread count
            CounterRng rng(cfg.seed, rng_stream::kSynth, m, c);
            double x = stationary_std * rng.next_gaussian();
            for (std::size_t t = 0; t < cfg.tau; ++t) {
                if (t > 0) x = ar * x + cfg.noise_std * rng.next_gaussian();
                double v = x;
                if (positive) {
                    v += cfg.sin_amp_pos * std::sin(2.0 * M_PI * static_cast<double>(t) / cfg.sin_period_pos);
                }
                inst.values(t, c) = v;
            }
        }
        data.instances.push_back(std::move(inst));
    }
    data.recompute_classes();
    return data;
}

void write_features_csv(const std::vector<FeatureVector>& features, const std::filesystem::path& path) {
    std::size_t d = features.empty() ? 0 : features.front().values.size();
    for (const auto& f : features) {
        if (f.values.size() != d) {
            throw DataError("write_features_csv: vector for id '" + f.id + "' has length " +
                            std::to_string(f.values.size()) + ", expected " + std::to_string(d));
        }
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write feature file '" + path.string() + "'");
    out << "id,label";
    for (std::size_t i = 0; i < d; ++i) out << ",f" << i;
    out << '\n';
    char buf[64];
    for (const auto& f : features) {
        out << f.id << ',' << f.label;
        for (double v : f.values) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ',' << buf;
        }
        out << '\n';
    }
}

std::vector<FeatureVector> read_features_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open feature file '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("feature file '" + path.string() + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "id" || header[1] != "label") {
        throw DataError("feature file '" + path.string() + "' has an unexpected header");
    }
    const std::size_t d = header.size() - 2;
    std::vector<FeatureVector> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != d + 2) {
            throw DataError("feature file '" + path.string() + "': wrong column count at line " +
                            std::to_string(line_no));
        }
        FeatureVector f;
        f.id = cells[0];
        f.label = cells[1];
        f.values.reserve(d);
        for (std::size_t i = 0; i < d; ++i) {
            f.values.push_back(parse_cell(cells[i + 2], path.string(), line_no));
        }
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace excon

#pragma once

// JSON experiment configuration: parsing, validation, canonical form and presets.

#include "qde/errors.hpp"
#include "qde/sim.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qde {

using Json = nlohmann::json;

namespace detail {

inline const Json& require(const Json& obj, const char* key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) throw ConfigError(path + "." + key, "missing");
    return obj.at(key);
}

inline double as_real(const Json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    return v.get<double>();
}

inline std::uint64_t as_count(const Json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
    }
    throw ConfigError(path, "expected a nonnegative integer");
}

inline Vector as_vector(const Json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t t = 0; t < v.size(); ++t) {
        out[static_cast<Eigen::Index>(t)] = as_real(v[t], path + "[" + std::to_string(t) + "]");
    }
    return out;
}

inline Json to_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index t = 0; t < v.size(); ++t) a.push_back(v[t]);
    return a;
}

inline std::vector<Vector> read_table_file(const std::string& file, const std::string& path) {
    std::ifstream in(file);
    if (!in) throw ConfigError(path, "cannot open regressor table '" + file + "'");
    std::vector<Vector> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError(path, "non-numeric cell '" + cell + "' in '" + file + "'");
            }
        }
        rows.push_back(Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size())));
    }
    if (rows.empty()) throw ConfigError(path, "regressor table '" + file + "' has no rows");
    return rows;
}

inline RegressorFamily parse_regressor(const Json& j, const std::string& path) {
    const std::string family = require(j, "family", path).get<std::string>();
    if (family == "paper_example") return PaperExampleRegressor{};
    if (family == "constant") return ConstantRegressor{as_vector(require(j, "phi", path), path + ".phi")};
    if (family == "table") {
        TableRegressor t;
        if (j.contains("rows")) {
            const Json& rows = j.at("rows");
            if (!rows.is_array() || rows.empty()) throw ConfigError(path + ".rows", "expected a non-empty array");
            for (std::size_t r = 0; r < rows.size(); ++r) {
                t.rows.push_back(as_vector(rows[r], path + ".rows[" + std::to_string(r) + "]"));
            }
        } else {
            t.rows = read_table_file(require(j, "file", path).get<std::string>(), path + ".file");
        }
        for (const auto& r : t.rows) {
            if (r.size() != t.rows.front().size()) throw ConfigError(path + ".rows", "rows differ in length");
        }
        return t;
    }
    throw ConfigError(path + ".family", "unknown regressor family '" + family + "'");
}

inline Json regressor_to_json(const RegressorFamily& f) {
    return std::visit(
        [](const auto& r) -> Json {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, PaperExampleRegressor>) {
                return {{"family", "paper_example"}};
            } else if constexpr (std::is_same_v<T, ConstantRegressor>) {
                return {{"family", "constant"}, {"phi", to_json(r.phi)}};
            } else {
                Json rows = Json::array();
                for (const auto& row : r.rows) rows.push_back(to_json(row));
                return {{"family", "table"}, {"rows", rows}};
            }
        },
        f);
}

inline NoiseModel parse_noise(const Json& j, const std::string& path) {
    const std::string kind = j.value("kind", std::string("gaussian"));
    if (kind != "gaussian") throw ConfigError(path + ".kind", "unknown noise kind '" + kind + "'");
    GaussianNoise g;
    if (j.contains("mean")) g.mean = as_real(j.at("mean"), path + ".mean");
    if (j.contains("std")) g.std = as_real(j.at("std"), path + ".std");
    if (!(g.std > 0.0)) throw ConfigError(path + ".std", "gaussian std must be > 0");
    return g;
}

inline Json noise_to_json(const NoiseModel& n) {
    const auto& g = std::get<GaussianNoise>(n);
    return {{"kind", "gaussian"}, {"mean", g.mean}, {"std", g.std}};
}

inline SensorModel parse_sensor(const Json& j, const std::string& path) {
    SensorModel s;
    if (j.contains("regressor")) s.regressor = parse_regressor(j.at("regressor"), path + ".regressor");
    if (j.contains("threshold")) s.threshold = as_real(j.at("threshold"), path + ".threshold");
    if (j.contains("noise")) s.noise = parse_noise(j.at("noise"), path + ".noise");
    return s;
}

inline NetworkGraph parse_graph(const Json& j, std::size_t default_nodes) {
    const std::size_t m = j.contains("nodes") ? as_count(j.at("nodes"), "graph.nodes") : default_nodes;
    if (j.contains("topology")) {
        const std::string topo = j.at("topology").get<std::string>();
        if (topo == "cycle") return NetworkGraph::cycle(m);
        if (topo == "complete") return NetworkGraph::complete(m);
        if (topo == "path") return NetworkGraph::path(m);
        throw ConfigError("graph.topology", "unknown topology '" + topo + "'");
    }
    const Json& edges = require(j, "edges", "graph");
    if (!edges.is_array()) throw ConfigError("graph.edges", "expected a list of [i, j, weight] triples");
    std::vector<Edge> list;
    for (std::size_t t = 0; t < edges.size(); ++t) {
        const std::string path = "graph.edges[" + std::to_string(t) + "]";
        const Json& e = edges[t];
        if (!e.is_array() || (e.size() != 2 && e.size() != 3)) throw ConfigError(path, "expected [i, j, weight]");
        const auto a = as_count(e[0], path);
        const auto b = as_count(e[1], path);
        const double w = e.size() == 3 ? as_real(e[2], path) : 1.0;
        if (a < 1 || b < 1 || a > m || b > m) throw ConfigError(path, "node index outside 1..nodes");
        if (a == b) throw ConfigError(path, "self-loops are not allowed");
        if (!(w >= 0.0)) throw ConfigError(path, "weight must be nonnegative");
        list.push_back({a - 1, b - 1, w});
    }
    return {m, list};
}

} // namespace detail

/// Builds and validates an ExperimentConfig. Errors name the offending field.
inline ExperimentConfig parse_config(const Json& j) {
    if (!j.is_object()) throw ConfigError("config", "top level must be an object");
    ExperimentConfig cfg;

    const Json& sys = detail::require(j, "system", "config");
    cfg.system.theta = detail::as_vector(detail::require(sys, "theta", "system"), "system.theta");
    const Json& box = detail::require(sys, "box", "system");
    try {
        cfg.system.box = Box(detail::as_vector(detail::require(box, "lo", "system.box"), "system.box.lo"),
                             detail::as_vector(detail::require(box, "hi", "system.box.hi"), "system.box.hi"));
    } catch (const DomainError& e) {
        throw ConfigError("system.box", e.what());
    }
    cfg.initial_estimate = detail::as_vector(detail::require(sys, "initial_estimate", "system"),
                                             "system.initial_estimate");
    if (sys.contains("sensors")) {
        const Json& sensors = sys.at("sensors");
        if (!sensors.is_array()) throw ConfigError("system.sensors", "expected an array");
        for (std::size_t i = 0; i < sensors.size(); ++i) {
            cfg.system.sensors.push_back(
                detail::parse_sensor(sensors[i], "system.sensors[" + std::to_string(i + 1) + "]"));
        }
    } else {
        const auto count = detail::as_count(detail::require(sys, "sensor_count", "system"), "system.sensor_count");
        const SensorModel proto =
            detail::parse_sensor(sys.value("sensor_defaults", Json::object()), "system.sensor_defaults");
        cfg.system.sensors.assign(count, proto);
    }

    try {
        cfg.graph = detail::parse_graph(detail::require(j, "graph", "config"), cfg.system.sensor_count());
    } catch (const DomainError& e) {
        throw ConfigError("graph", e.what());
    }

    const Json& alg = detail::require(j, "algorithm", "config");
    cfg.algorithm.alpha = detail::as_real(detail::require(alg, "alpha", "algorithm"), "algorithm.alpha");
    cfg.algorithm.beta = detail::as_real(detail::require(alg, "beta", "algorithm"), "algorithm.beta");
    cfg.algorithm.nu = detail::as_real(detail::require(alg, "nu", "algorithm"), "algorithm.nu");
    cfg.algorithm.box = cfg.system.box;

    const Json& chan = detail::require(j, "channel", "config");
    cfg.channel.p_true = detail::as_real(detail::require(chan, "p_true", "channel"), "channel.p_true");
    cfg.algorithm.p_assumed = alg.contains("p_assumed")
                                  ? detail::as_real(alg.at("p_assumed"), "algorithm.p_assumed")
                                  : cfg.channel.p_true;

    const Json& exp = detail::require(j, "experiment", "config");
    cfg.repetitions = detail::as_count(detail::require(exp, "repetitions", "experiment"), "experiment.repetitions");
    cfg.horizon = detail::as_count(detail::require(exp, "horizon", "experiment"), "experiment.horizon");
    cfg.seed = detail::as_count(exp.value("seed", Json(1)), "experiment.seed");
    const std::string mode = exp.value("mode", std::string("cooperative"));
    if (mode == "cooperative") {
        cfg.mode = Mode::cooperative;
    } else if (mode == "noncooperative") {
        cfg.mode = Mode::noncooperative;
    } else {
        throw ConfigError("experiment.mode", "expected 'cooperative' or 'noncooperative'");
    }
    if (exp.contains("checkpoints")) {
        const Json& cps = exp.at("checkpoints");
        if (!cps.is_array()) throw ConfigError("experiment.checkpoints", "expected an array");
        for (const auto& c : cps) cfg.checkpoints.push_back(detail::as_count(c, "experiment.checkpoints"));
    } else {
        const auto per_decade = detail::as_count(exp.value("checkpoints_per_decade", Json(10)),
                                                 "experiment.checkpoints_per_decade");
        if (per_decade < 1) throw ConfigError("experiment.checkpoints_per_decade", "must be >= 1");
        if (cfg.horizon < 1) throw ConfigError("experiment.horizon", "must be >= 1");
        cfg.checkpoints = log_checkpoints(cfg.horizon, static_cast<unsigned>(per_decade));
    }

    cfg.validate();
    return cfg;
}

/// Canonical, fully explicit form of a config; parse_config(to_json(cfg)) reproduces cfg.
inline Json to_json(const ExperimentConfig& cfg) {
    Json sensors = Json::array();
    for (const auto& s : cfg.system.sensors) {
        sensors.push_back({{"regressor", detail::regressor_to_json(s.regressor)},
                           {"threshold", s.threshold},
                           {"noise", detail::noise_to_json(s.noise)}});
    }
    Json edges = Json::array();
    for (const auto& e : cfg.graph.edges()) edges.push_back({e.i + 1, e.j + 1, e.weight});
    return {
        {"system",
         {{"theta", detail::to_json(cfg.system.theta)},
          {"box", {{"lo", detail::to_json(cfg.system.box.lo)}, {"hi", detail::to_json(cfg.system.box.hi)}}},
          {"initial_estimate", detail::to_json(cfg.initial_estimate)},
          {"sensors", sensors}}},
        {"graph", {{"nodes", cfg.graph.size()}, {"edges", edges}}},
        {"algorithm",
         {{"alpha", cfg.algorithm.alpha},
          {"beta", cfg.algorithm.beta},
          {"nu", cfg.algorithm.nu},
          {"p_assumed", cfg.algorithm.p_assumed}}},
        {"channel", {{"p_true", cfg.channel.p_true}}},
        {"experiment",
         {{"repetitions", cfg.repetitions},
          {"horizon", cfg.horizon},
          {"checkpoints", cfg.checkpoints},
          {"seed", cfg.seed},
          {"mode", cfg.mode == Mode::cooperative ? "cooperative" : "noncooperative"}}},
    };
}

/// FNV-1a over the canonical JSON text.
inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : to_json(cfg).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Presets.

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"paper-s5-convergence", "paper-s5-noncoop-comparison",
                                                   "paper-s5-nu-sweep"};
    return names;
}

inline const std::vector<double>& nu_sweep_values() {
    static const std::vector<double> values = {0.0, 0.1, 0.2, 0.4, 0.6};
    return values;
}

/// The six-sensor reference experiment on the C6 ring, nu = 0.1.
inline Json reference_experiment_json() {
    return {
        {"system",
         {{"theta", {1.0, -1.0, 1.0}},
          {"box", {{"lo", {0.0, -2.0, 0.0}}, {"hi", {2.0, 0.0, 2.0}}}},
          {"initial_estimate", {0.5, -0.5, 0.5}},
          {"sensor_count", 6},
          {"sensor_defaults",
           {{"regressor", {{"family", "paper_example"}}},
            {"threshold", 0.0},
            {"noise", {{"kind", "gaussian"}, {"mean", 0.0}, {"std", 1.0}}}}}}},
        {"graph", {{"nodes", 6}, {"topology", "cycle"}}},
        {"algorithm", {{"alpha", 20.0}, {"beta", 70.0}, {"nu", 0.1}, {"p_assumed", 0.1}}},
        {"channel", {{"p_true", 0.1}}},
        {"experiment",
         {{"repetitions", 100}, {"horizon", 10000}, {"checkpoints_per_decade", 10}, {"seed", 1},
          {"mode", "cooperative"}}},
    };
}

/// A labelled member of a preset. Single-config presets use an empty label.
struct PresetMember {
    std::string label;
    Json config;
};

inline std::vector<PresetMember> preset_members(std::string_view name) {
    Json base = reference_experiment_json();
    if (name == "paper-s5-convergence") return {{"", base}};
    if (name == "paper-s5-noncoop-comparison") {
        Json noncoop = base;
        noncoop["experiment"]["mode"] = "noncooperative";
        return {{"cooperative", base}, {"noncooperative", noncoop}};
    }
    if (name == "paper-s5-nu-sweep") {
        std::vector<PresetMember> out;
        for (double nu : nu_sweep_values()) {
            Json c = base;
            c["algorithm"]["nu"] = nu;
            c["experiment"]["horizon"] = 100000;
            std::ostringstream label;
            label << "nu_" << nu;
            out.push_back({label.str(), c});
        }
        return out;
    }
    throw ConfigError("preset", "unknown preset '" + std::string(name) + "'");
}

/// Overrides horizon and/or seed in a config document. Explicit checkpoints beyond the new
/// horizon are dropped and the horizon itself is appended.
inline void apply_overrides(Json& j, std::optional<std::uint64_t> seed, std::optional<std::uint64_t> horizon) {
    if (seed) j["experiment"]["seed"] = *seed;
    if (horizon) {
        j["experiment"]["horizon"] = *horizon;
        if (j["experiment"].contains("checkpoints")) {
            Json kept = Json::array();
            for (const auto& c : j["experiment"]["checkpoints"]) {
                if (detail::as_count(c, "experiment.checkpoints") < *horizon) kept.push_back(c);
            }
            kept.push_back(*horizon);
            j["experiment"]["checkpoints"] = kept;
        }
    }
}

/// Reads a config file. A top-level "preset" key starts from that preset's (first) member
/// and merges the remaining fields over it.
inline Json read_config_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config", std::string("parse error: ") + e.what());
    }
    if (j.is_object() && j.contains("preset")) {
        Json base = preset_members(j.at("preset").get<std::string>()).front().config;
        j.erase("preset");
        base.merge_patch(j);
        return base;
    }
    return j;
}

inline ExperimentConfig load_config(const std::string& path) {
    const Json j = read_config_json(path);
    try {
        return parse_config(j);
    } catch (const Json::exception& e) {
        throw ConfigError("config", std::string("type error: ") + e.what());
    }
}

} // namespace qde

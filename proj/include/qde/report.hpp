#pragma once

// Output files of an experiment: mse.csv, kappa.csv, slopes.csv, constants.txt, config.json.

#include "qde/config.hpp"
#include "qde/estimator.hpp"
#include "qde/sim.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

namespace qde {

/// 17 significant digits: round-trips every double.
inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string provenance_line(const ExperimentConfig& cfg) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "# config_hash=%016llx seed=%llu",
                  static_cast<unsigned long long>(config_hash(cfg)), static_cast<unsigned long long>(cfg.seed));
    return buf;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

inline void close_output(std::ofstream& out, const std::filesystem::path& p) {
    out.close();
    if (!out) throw std::runtime_error("error writing " + p.string());
}

} // namespace detail

inline void write_mse_csv(const std::filesystem::path& p, const ExperimentConfig& cfg, const MetricsSummary& s) {
    auto out = detail::open_output(p);
    out << provenance_line(cfg) << '\n' << "k,mse,mse_stderr\n";
    for (std::size_t c = 0; c < s.checkpoints.size(); ++c) {
        out << s.checkpoints[c] << ',' << format_real(s.mse[c]) << ',' << format_real(s.mse_stderr[c]) << '\n';
    }
    detail::close_output(out, p);
}

/// bits_sent / bits_delivered are totals over runs and directed channels.
inline void write_kappa_csv(const std::filesystem::path& p, const ExperimentConfig& cfg, const MetricsSummary& s) {
    auto out = detail::open_output(p);
    out << provenance_line(cfg) << '\n' << "k,kappa,bits_sent,bits_delivered\n";
    for (std::size_t c = 0; c < s.checkpoints.size(); ++c) {
        out << s.checkpoints[c] << ',' << format_real(s.kappa[c]) << ',' << s.bits.sent[c] << ','
            << s.bits.delivered[c] << '\n';
    }
    detail::close_output(out, p);
}

inline void write_slope_rows(std::ostream& out, const std::string& prefix, const std::vector<NamedSlope>& slopes) {
    for (const auto& ns : slopes) {
        out << prefix << ns.series << ',' << format_real(ns.k_min) << ',' << format_real(ns.k_max) << ','
            << format_real(ns.fit.slope) << ',' << format_real(ns.fit.half_width) << '\n';
    }
}

inline void write_slopes_csv(const std::filesystem::path& p, const ExperimentConfig& cfg, const MetricsSummary& s) {
    auto out = detail::open_output(p);
    out << provenance_line(cfg) << '\n' << "series,k_min,k_max,slope,half_width\n";
    write_slope_rows(out, "", s.slopes);
    detail::close_output(out, p);
}

/// Constants report with the rate-condition verdict. Non-fatal: an unmet condition is reported, not thrown.
inline std::string constants_report(const ExperimentConfig& cfg) {
    try {
        const TheoryConstants tc = compute_theory_constants(cfg.system, cfg.graph, cfg.algorithm);
        std::string text = tc.report();
        if (!tc.rate_condition()) {
            text += "warning = 2*sigma < 1 - nu; the guaranteed rate does not apply to this configuration\n";
        }
        return text;
    } catch (const std::exception& e) {
        return std::string("error = ") + e.what() + '\n';
    }
}

inline void write_constants_txt(const std::filesystem::path& p, const ExperimentConfig& cfg) {
    auto out = detail::open_output(p);
    out << provenance_line(cfg) << '\n' << constants_report(cfg);
    detail::close_output(out, p);
}

inline void write_config_json(const std::filesystem::path& p, const ExperimentConfig& cfg) {
    auto out = detail::open_output(p);
    out << to_json(cfg).dump(2) << '\n';
    detail::close_output(out, p);
}

inline void print_summary(std::ostream& log, const std::string& label, const MetricsSummary& s) {
    const std::string tag = label.empty() ? "" : "[" + label + "] ";
    const std::size_t last = s.checkpoints.size() - 1;
    log << tag << "mse: k=" << s.checkpoints[last] << " value=" << format_real(s.mse[last]);
    for (const auto& ns : s.slopes)
        if (ns.series == "mse") log << " slope=" << format_real(ns.fit.slope) << " +/- " << format_real(ns.fit.half_width);
    log << '\n' << tag << "kappa: k=" << s.checkpoints[last] << " value=" << format_real(s.kappa[last]);
    for (const auto& ns : s.slopes)
        if (ns.series == "kappa") log << " slope=" << format_real(ns.fit.slope) << " +/- " << format_real(ns.fit.half_width);
    log << '\n';
}

/// Runs the Monte Carlo experiment and writes every output file into `dir`.
inline MetricsSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                                     std::ostream& log, const MonteCarloOptions& opts = {},
                                     const std::string& label = "") {
    std::filesystem::create_directories(dir);
    MetricsSummary s = run_monte_carlo(cfg, opts);
    write_mse_csv(dir / "mse.csv", cfg, s);
    write_kappa_csv(dir / "kappa.csv", cfg, s);
    write_slopes_csv(dir / "slopes.csv", cfg, s);
    write_constants_txt(dir / "constants.txt", cfg);
    write_config_json(dir / "config.json", cfg);
    print_summary(log, label, s);
    return s;
}

/// Runs every member of a preset. Multi-member presets write one subdirectory per member
/// plus a combined slopes.csv at the top.
inline std::vector<MetricsSummary> run_preset(std::string_view name, const std::filesystem::path& dir,
                                              std::ostream& log, std::optional<std::uint64_t> seed = {},
                                              std::optional<std::uint64_t> horizon = {},
                                              const MonteCarloOptions& opts = {}) {
    std::vector<MetricsSummary> out;
    auto members = preset_members(name);
    if (members.size() == 1) {
        apply_overrides(members.front().config, seed, horizon);
        out.push_back(run_experiment(parse_config(members.front().config), dir, log, opts));
        return out;
    }
    std::filesystem::create_directories(dir);
    const auto combined_path = dir / "slopes.csv";
    auto combined = detail::open_output(combined_path);
    combined << "# preset=" << name << '\n' << "series,k_min,k_max,slope,half_width\n";
    for (auto& member : members) {
        apply_overrides(member.config, seed, horizon);
        const ExperimentConfig cfg = parse_config(member.config);
        out.push_back(run_experiment(cfg, dir / member.label, log, opts, member.label));
        write_slope_rows(combined, member.label + "/", out.back().slopes);
    }
    detail::close_output(combined, combined_path);
    return out;
}

} // namespace qde

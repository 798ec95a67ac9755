#pragma once

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "covsim/config.hpp"
#include "covsim/output.hpp"
#include "covsim/sim.hpp"

namespace covsim {

class UnrealizableRatioError : public Error { public: using Error::Error; };

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitIoError = 2;
inline constexpr int kExitNonConvergence = 3;

namespace detail {

inline void write_manifest(const FileManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    for (const FileManifest::Entry& entry : manifest.entries) {
        out << entry.name << ',' << entry.bytes << '\n';
    }
}

/// Runs one scenario and writes the full output set plus the resolved config
/// echo. Returns the trace.
inline SimTrace run_and_emit(const ScenarioConfig& config, const std::filesystem::path& out_dir) {
    SimTrace trace = run(config);
    const CostSeries cost = cost_series_from_trace(trace);
    const nlohmann::json resolved = scenario_to_json(config);
    const std::uint64_t hash = fnv1a(resolved.dump());

    FileManifest manifest = emit_outputs(trace, cost, out_dir, hash);
    const std::filesystem::path echo_path = out_dir / "config.json";
    {
        std::ofstream out = open_output(echo_path);
        out << resolved.dump(2) << '\n';
    }
    finish_file(manifest, echo_path);
    write_manifest(manifest, out_dir / "manifest.txt");
    return trace;
}

} // namespace detail

/// `run <config> --out <dir> [--seed N]`
inline int cmd_run(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                   std::optional<std::uint64_t> seed_override = std::nullopt) {
    try {
        ScenarioConfig config = load_scenario(config_path);
        if (seed_override) config.rng_seed = *seed_override;
        const SimTrace trace = detail::run_and_emit(config, out_dir);
        if (!trace.converged) {
            std::fprintf(stderr, "warning: run did not converge within %d iterations\n",
                         config.max_iterations);
            return kExitNonConvergence;
        }
        return kExitOk;
    } catch (const ConfigInvalidError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const IoFailureError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIoError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfigError;
    }
}

/// `compare <config> --out <dir> [--seed N]`: unlimited-lloyd, limited-lloyd
/// and heterogeneous from identical initial ground positions.
inline int cmd_compare(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                       std::optional<std::uint64_t> seed_override = std::nullopt) {
    try {
        ScenarioConfig base = load_scenario(config_path);
        if (seed_override) base.rng_seed = *seed_override;

        const ControllerKind kinds[] = {ControllerKind::UnlimitedLloyd, ControllerKind::LimitedLloyd,
                                        ControllerKind::Heterogeneous};
        bool all_converged = true;
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec) throw IoFailureError("cannot create output directory " + out_dir.string());
        std::ofstream table = detail::open_output(out_dir / "comparison.csv");
        table << "scenario,final_cost,iterations,converged\n";
        for (const ControllerKind kind : kinds) {
            ScenarioConfig scenario = base;
            scenario.controller = kind;
            const SimTrace trace = detail::run_and_emit(scenario, out_dir / controller_name(kind));
            table << controller_name(kind) << ',' << format_float(trace.final_cost) << ','
                  << trace.iterations << ',' << (trace.converged ? "true" : "false") << '\n';
            all_converged = all_converged && trace.converged;
        }
        if (!all_converged) {
            std::fprintf(stderr, "warning: at least one scenario did not converge\n");
            return kExitNonConvergence;
        }
        return kExitOk;
    } catch (const ConfigInvalidError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const IoFailureError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIoError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfigError;
    }
}

/// Parses "1/12,2/12" into numerator/denominator pairs.
inline std::vector<std::pair<int, int>> parse_ratios(const std::string& text) {
    std::vector<std::pair<int, int>> ratios;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t comma = text.find(',', start);
        if (comma == std::string::npos) comma = text.size();
        const std::string token = text.substr(start, comma - start);
        const std::size_t slash = token.find('/');
        if (slash == std::string::npos) {
            throw UnrealizableRatioError("ratio '" + token + "' is not of the form K/N");
        }
        try {
            const int num = std::stoi(token.substr(0, slash));
            const int den = std::stoi(token.substr(slash + 1));
            if (num < 1 || den < 1) throw std::invalid_argument("nonpositive");
            ratios.emplace_back(num, den);
        } catch (const std::exception&) {
            throw UnrealizableRatioError("ratio '" + token + "' is not a valid positive fraction");
        }
        start = comma + 1;
    }
    if (ratios.empty()) throw UnrealizableRatioError("no ratios given");
    return ratios;
}

/// K for ratio k/n at team size n_ground; throws unless K is a positive integer.
inline int realize_ratio(std::pair<int, int> ratio, int n_ground) {
    const long long scaled = static_cast<long long>(ratio.first) * n_ground;
    if (scaled % ratio.second != 0) {
        throw UnrealizableRatioError("ratio " + std::to_string(ratio.first) + "/" +
                                     std::to_string(ratio.second) + " gives a non-integer K for N = " +
                                     std::to_string(n_ground));
    }
    const long long k = scaled / ratio.second;
    if (k < 1) {
        throw UnrealizableRatioError("ratio " + std::to_string(ratio.first) + "/" +
                                     std::to_string(ratio.second) + " gives K < 1 for N = " +
                                     std::to_string(n_ground));
    }
    return static_cast<int>(k);
}

/// `sweep <config> --ratios a/b,c/d --out <dir> [--seed N]`
inline int cmd_sweep(const std::filesystem::path& config_path, const std::string& ratios_text,
                     const std::filesystem::path& out_dir,
                     std::optional<std::uint64_t> seed_override = std::nullopt) {
    try {
        ScenarioConfig base = load_scenario(config_path);
        if (seed_override) base.rng_seed = *seed_override;
        base.controller = ControllerKind::Heterogeneous;

        std::vector<ScenarioConfig> configs;
        for (const auto& ratio : parse_ratios(ratios_text)) {
            ScenarioConfig scenario = base;
            scenario.k_aerial = realize_ratio(ratio, base.n_ground);
            scenario.validate();
            configs.push_back(std::move(scenario));
        }

        const std::vector<SweepRow> rows = final_cost_sweep(configs);
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec) throw IoFailureError("cannot create output directory " + out_dir.string());
        write_sweep_csv(rows, out_dir / "sweep.csv");
        {
            std::ofstream out = detail::open_output(out_dir / "config.json");
            out << scenario_to_json(base).dump(2) << '\n';
        }
        for (const SweepRow& row : rows) {
            if (row.failed) {
                std::fprintf(stderr, "sweep row K=%d failed: %s\n", row.k_aerial, row.error.c_str());
                return kExitConfigError;
            }
        }
        return kExitOk;
    } catch (const ConfigInvalidError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const UnrealizableRatioError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const IoFailureError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIoError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfigError;
    }
}

} // namespace covsim

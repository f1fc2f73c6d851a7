// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef MIMO_COMMANDS_HPP
#define MIMO_COMMANDS_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "mimo/channel_model.hpp"
#include "mimo/errors.hpp"
#include "mimo/gaussian_outage.hpp"
#include "mimo/montecarlo.hpp"
#include "mimo/scenario.hpp"
#include "mimo/sinr_covariance.hpp"

namespace mimo {

enum class ExitCode : int { ok = 0, config = 2, numerical = 3, io = 4 };

enum class Units { nats, bpcu };

inline Units parse_units(std::string_view s) {
    if (s == "nats") return Units::nats;
    if (s == "bpcu") return Units::bpcu;
    throw ConfigError("units must be nats or bpcu");
}

struct CommandContext {
    std::filesystem::path out_dir = ".";
    Units units = Units::bpcu;
    unsigned workers = 1;
    std::ostream* out = nullptr; // progress and KS lines; may be null
};

namespace detail {

inline double mi_in(Units u, double nats) { return u == Units::bpcu ? nats_to_bits(nats) : nats; }
inline double var_in(Units u, double nats2) {
    return u == Units::bpcu ? nats2 / (std::numbers::ln2 * std::numbers::ln2) : nats2;
}

// Spec file name, or name_<index>.ext when the grid has several points.
inline std::filesystem::path grid_file(const CommandContext& ctx, const std::string& stem, const std::string& ext,
                                       bool indexed, std::size_t index) {
    return ctx.out_dir / (indexed ? stem + "_" + std::to_string(index) + ext : stem + ext);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
    if (!f) throw IoError("write failed for " + path.string());
}

inline void ensure_out_dir(const CommandContext& ctx) {
    std::error_code ec;
    std::filesystem::create_directories(ctx.out_dir, ec);
    if (ec || !std::filesystem::is_directory(ctx.out_dir))
        throw IoError("cannot create output directory " + ctx.out_dir.string());
}

inline nlohmann::json gaussian_json(const MutualInfoGaussian& g, Units u) {
    nlohmann::json j{{"c1", mi_in(u, g.c1)}, {"c2", var_in(u, g.c2)}, {"c10", mi_in(u, g.c10)},
                     {"c11", mi_in(u, g.c11)}, {"receiver", std::string(to_string(g.receiver))}};
    if (g.receiver == Receiver::mmse) j["variant"] = std::string(to_string(g.variant));
    return j;
}

inline double offdiag_mean(const RMatrix& m) {
    const auto n = m.rows();
    if (n < 2) return 0.0;
    return (m.sum() - m.trace()) / static_cast<double>(n * (n - 1));
}

// Numerical failures are re-thrown with the grid point attached.
template <class F>
auto at_grid_point(double snr_db, F f) -> decltype(f()) {
    try {
        return f();
    } catch (const NumericalError& e) {
        throw NumericalError("at snr_db=" + format_g12(snr_db) + ": " + e.what());
    }
}

inline nlohmann::json scenario_header(const Scenario& sc, const CorrelationPair& pair, std::string_view command) {
    return {{"command", std::string(command)},
            {"M", sc.M},
            {"N", sc.N},
            {"beta", static_cast<double>(sc.M) / sc.N},
            {"correlation", sc.correlation.to_json()},
            {"trace_R", pair.trace_r()},
            {"trace_T", pair.trace_t()},
            {"mean_variant", std::string(to_string(sc.mean_variant))}};
}

inline std::size_t require_trials(const Scenario& sc) {
    if (!sc.trials) throw ConfigError("this command needs \"trials\" in the scenario");
    return *sc.trials;
}

} // namespace detail

// Asymptotic statistics at every SNR grid point; no sampling.
inline nlohmann::json cmd_asymptotics(const Scenario& sc, const CommandContext& ctx) {
    const CorrelationPair pair = sc.build_pair();
    nlohmann::json report = detail::scenario_header(sc, pair, "asymptotics");
    report["units"] = ctx.units == Units::bpcu ? "bpcu" : "nats";
    nlohmann::json points = nlohmann::json::array();
    for (double snr : sc.snr_db) {
        const SystemConfig config = sc.config_at(snr);
        const AsymptoticAnalysis a = detail::at_grid_point(snr, [&] { return analyze(pair, config, sc.gaussian()); });
        nlohmann::json p;
        p["snr_db"] = snr;
        p["rho"] = config.rho();
        p["g"] = pair.is_identity() ? nlohmann::json(iid_closed_forms(config).g) : nlohmann::json(nullptr);
        p["gamma_bar"] = to_json(a.mean_sinr.gamma_bar);
        p["delta_gamma"] = to_json(a.mean_sinr.delta_gamma);
        p["eta"] = to_json(a.mean_sinr.eta);
        p["stability"] = a.mean_sinr.stability();
        p["fixed_point"] = {{"t", a.mean_sinr.solution.t},
                            {"r", a.mean_sinr.solution.r},
                            {"residual", a.mean_sinr.solution.residual},
                            {"iterations", a.mean_sinr.solution.iterations}};
        p["sigma"] = {{"diag_mean", a.sigma.sigma.diagonal().mean()},
                      {"offdiag_mean", detail::offdiag_mean(a.sigma.sigma)},
                      {"step", a.sigma.step},
                      {"method", a.sigma.method}};
        p["mmse"] = detail::gaussian_json(a.mmse, ctx.units);
        p["mmse_taylor"] = detail::gaussian_json(a.mmse_taylor, ctx.units);
        p["mmse_as_printed"] = detail::gaussian_json(a.mmse_as_printed, ctx.units);
        p["optimal"] = detail::gaussian_json(a.optimal, ctx.units);
        points.push_back(std::move(p));
        if (ctx.out)
            *ctx.out << "snr_db=" << format_g12(snr) << " c1_mmse=" << format_g12(detail::mi_in(ctx.units, a.mmse.c1))
                     << " c2_mmse=" << format_g12(detail::var_in(ctx.units, a.mmse.c2))
                     << " c1_opt=" << format_g12(detail::mi_in(ctx.units, a.optimal.c1)) << '\n';
    }
    report["points"] = std::move(points);
    detail::ensure_out_dir(ctx);
    detail::write_text(ctx.out_dir / "asymptotics.json", report.dump(2) + "\n");
    return report;
}

// Monte Carlo samples (trial order, nats) and summary JSON per SNR point.
inline void cmd_simulate(const Scenario& sc, const CommandContext& ctx) {
    const std::size_t trials = detail::require_trials(sc);
    const CorrelationPair pair = sc.build_pair();
    detail::ensure_out_dir(ctx);
    for (std::size_t i = 0; i < sc.snr_db.size(); ++i) {
        const double snr = sc.snr_db[i];
        TrialSamples raw;
        const EmpiricalSummary s =
            run_trials({sc.config_at(snr), pair, trials, sc.seed}, {ctx.workers, trials}, &raw);
        nlohmann::json j = summary_to_json(s);
        j["snr_db"] = snr;
        j["correlation"] = sc.correlation.to_json();
        write_samples_csv(detail::grid_file(ctx, "samples", ".csv", sc.snr_is_array, i), raw);
        detail::write_text(detail::grid_file(ctx, "summary", ".json", sc.snr_is_array, i), j.dump(2) + "\n");
        if (ctx.out)
            *ctx.out << "snr_db=" << format_g12(snr) << " mi_mean=" << format_g12(detail::mi_in(ctx.units, s.mi_mean))
                     << " mi_var=" << format_g12(detail::var_in(ctx.units, s.mi_var)) << '\n';
    }
}

struct CompareResult {
    double ks_mmse = 0.0;
    double ks_opt = 0.0;
};

// Analytic vs empirical CDFs of both receivers on a 200-point grid.
inline std::vector<CompareResult> cmd_compare(const Scenario& sc, const CommandContext& ctx) {
    constexpr int kGridPoints = 200;
    const std::size_t trials = detail::require_trials(sc);
    const CorrelationPair pair = sc.build_pair();
    detail::ensure_out_dir(ctx);
    std::vector<CompareResult> results;
    for (std::size_t i = 0; i < sc.snr_db.size(); ++i) {
        const double snr = sc.snr_db[i];
        const SystemConfig config = sc.config_at(snr);
        const AsymptoticAnalysis a = detail::at_grid_point(snr, [&] { return analyze(pair, config, sc.gaussian()); });
        const EmpiricalSummary s = run_trials({config, pair, trials, sc.seed}, {ctx.workers});

        const double lo = std::min(s.mi_samples.front(), s.opt_samples.front());
        const double hi = std::max(s.mi_samples.back(), s.opt_samples.back());
        std::string csv = "mi_bpcu,cdf_mmse_analytic,cdf_mmse_empirical,cdf_opt_analytic,cdf_opt_empirical\n";
        for (int k = 0; k < kGridPoints; ++k) {
            const double x = k + 1 == kGridPoints ? hi : lo + (hi - lo) * k / (kGridPoints - 1);
            csv += format_g12(nats_to_bits(x)) + ',' + format_g12(outage_probability(a.mmse, x)) + ',' +
                   format_g12(empirical_cdf(s, x, Receiver::mmse)) + ',' +
                   format_g12(outage_probability(a.optimal, x)) + ',' +
                   format_g12(empirical_cdf(s, x, Receiver::optimal)) + '\n';
        }
        detail::write_text(detail::grid_file(ctx, "cdf_compare", ".csv", sc.snr_is_array, i), csv);

        CompareResult r{ks_distance(s, a.mmse), ks_distance(s, a.optimal)};
        results.push_back(r);
        if (ctx.out)
            *ctx.out << "snr_db=" << format_g12(snr) << " ks_mmse=" << format_g12(r.ks_mmse)
                     << " ks_opt=" << format_g12(r.ks_opt) << '\n';
    }
    return results;
}

// Outage curves over the SNR grid, one file per rate.
inline void cmd_outage(const Scenario& sc, const CommandContext& ctx) {
    if (sc.rate_bpcu.empty()) throw ConfigError("this command needs \"rate_bpcu\" in the scenario");
    const std::size_t trials = detail::require_trials(sc);
    const CorrelationPair pair = sc.build_pair();
    detail::ensure_out_dir(ctx);

    std::vector<std::string> files(sc.rate_bpcu.size(),
                                   "snr_db,pout_mmse_gauss,pout_mmse_mc,pout_opt_mc,ci_halfwidth\n");
    for (double snr : sc.snr_db) {
        const SystemConfig config = sc.config_at(snr);
        const AsymptoticAnalysis a = detail::at_grid_point(snr, [&] { return analyze(pair, config, sc.gaussian()); });
        const EmpiricalSummary s = run_trials({config, pair, trials, sc.seed}, {ctx.workers});
        for (std::size_t r = 0; r < sc.rate_bpcu.size(); ++r) {
            const double rate = bits_to_nats(sc.rate_bpcu[r]);
            const OutageEstimate mmse = empirical_outage(s, rate, Receiver::mmse);
            const OutageEstimate opt = empirical_outage(s, rate, Receiver::optimal);
            files[r] += format_g12(snr) + ',' + format_g12(outage_probability(a.mmse, rate)) + ',' +
                        format_g12(mmse.probability) + ',' + format_g12(opt.probability) + ',' +
                        format_g12(mmse.ci_halfwidth) + '\n';
            if (ctx.out)
                *ctx.out << "snr_db=" << format_g12(snr) << " rate_bpcu=" << format_g12(sc.rate_bpcu[r])
                         << " pout_mmse_mc=" << format_g12(mmse.probability)
                         << " pout_opt_mc=" << format_g12(opt.probability) << '\n';
        }
    }
    for (std::size_t r = 0; r < files.size(); ++r)
        detail::write_text(detail::grid_file(ctx, "outage", ".csv", sc.rate_is_array, r), files[r]);
}

// Dispatches a verb and maps failures onto the exit-code contract.
inline ExitCode run_command(std::string_view verb, const std::filesystem::path& scenario_path,
                            const CommandContext& ctx, std::ostream& err) {
    try {
        const Scenario sc = load_scenario(scenario_path);
        if (verb == "asymptotics")
            cmd_asymptotics(sc, ctx);
        else if (verb == "simulate")
            cmd_simulate(sc, ctx);
        else if (verb == "compare")
            cmd_compare(sc, ctx);
        else if (verb == "outage")
            cmd_outage(sc, ctx);
        else
            throw ConfigError("unknown command \"" + std::string(verb) + "\"");
        return ExitCode::ok;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return ExitCode::config;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return ExitCode::io;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return ExitCode::numerical;
    } catch (const SimulationError& e) {
        err << "simulation error: " << e.what() << '\n';
        return ExitCode::numerical;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "i/o error: " << e.what() << '\n';
        return ExitCode::io;
    }
}

} // namespace mimo

#endif // MIMO_COMMANDS_HPP

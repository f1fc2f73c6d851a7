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

#ifndef MIMO_SCENARIO_HPP
#define MIMO_SCENARIO_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "mimo/channel_model.hpp"
#include "mimo/deterministic_equivalents.hpp"
#include "mimo/errors.hpp"
#include "mimo/gaussian_outage.hpp"

namespace mimo {

struct CorrelationSpec {
    enum class Type { identity, exponential, file };
    Type type = Type::identity;
    double zeta_r = 0.0;
    double zeta_t = 0.0;
    std::filesystem::path r_path;
    std::filesystem::path t_path;

    nlohmann::json to_json() const {
        switch (type) {
        case Type::identity: return {{"type", "identity"}};
        case Type::exponential: return {{"type", "exponential"}, {"zeta_r", zeta_r}, {"zeta_t", zeta_t}};
        case Type::file: return {{"type", "file"}, {"r_path", r_path.string()}, {"t_path", t_path.string()}};
        }
        return {};
    }
};

struct Scenario {
    int M = 0;
    int N = 0;
    std::vector<double> snr_db;
    bool snr_is_array = false;
    std::vector<double> rate_bpcu;
    bool rate_is_array = false;
    CorrelationSpec correlation;
    std::optional<std::size_t> trials;
    std::uint64_t seed = 0;
    MeanVariant mean_variant = MeanVariant::taylor;
    double fd_step = 1e-3;
    double tolerance = 1e-12;
    std::size_t max_iter = 10000;

    SolverOptions solver() const { return {tolerance, max_iter}; }
    GaussianOptions gaussian() const { return {mean_variant, fd_step, solver()}; }
    SystemConfig config_at(double snr) const { return SystemConfig::from_db(M, N, snr); }

    CorrelationPair build_pair() const {
        switch (correlation.type) {
        case CorrelationSpec::Type::identity: return CorrelationPair::identity(N, M);
        case CorrelationSpec::Type::exponential:
            return CorrelationPair::exponential(N, M, correlation.zeta_r, correlation.zeta_t);
        case CorrelationSpec::Type::file: {
            CorrelationPair pair(read_correlation_file(correlation.r_path), read_correlation_file(correlation.t_path));
            if (pair.N() != N || pair.M() != M)
                throw DimensionError("correlation files do not match N=" + std::to_string(N) +
                                     ", M=" + std::to_string(M));
            return pair;
        }
        }
        throw ConfigError("unknown correlation type");
    }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& item : obj.items())
        if (!allowed.count(item.key())) throw ConfigError("unknown key \"" + item.key() + "\" in " + where);
}

inline int require_int(const nlohmann::json& doc, const char* key) {
    if (!doc.contains(key)) throw ConfigError(std::string("missing required key \"") + key + "\"");
    if (!doc[key].is_number_integer()) throw ConfigError(std::string("\"") + key + "\" must be an integer");
    return doc[key].get<int>();
}

inline double require_number(const nlohmann::json& v, const std::string& what) {
    if (!v.is_number()) throw ConfigError(what + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(what + " must be finite");
    return x;
}

inline std::vector<double> number_or_array(const nlohmann::json& v, const std::string& what, bool& is_array) {
    std::vector<double> out;
    is_array = v.is_array();
    if (is_array) {
        if (v.empty()) throw ConfigError(what + " must not be empty");
        for (const auto& e : v) out.push_back(require_number(e, what + " entry"));
    } else {
        out.push_back(require_number(v, what));
    }
    return out;
}

} // namespace detail

// Validates the whole document before anything is computed. Relative
// correlation file paths resolve against `base_dir`.
inline Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {}) {
    if (!doc.is_object()) throw ConfigError("scenario must be a JSON object");
    detail::reject_unknown(doc,
                           {"M", "N", "snr_db", "rate_bpcu", "correlation", "trials", "seed", "mean_variant",
                            "fd_step", "tolerance", "max_iter"},
                           "scenario");
    Scenario s;
    s.M = detail::require_int(doc, "M");
    s.N = detail::require_int(doc, "N");
    if (s.M < 1) throw ConfigError("M must be >= 1");
    if (s.N < s.M) throw ConfigError("N must be >= M");
    if (!doc.contains("snr_db")) throw ConfigError("missing required key \"snr_db\"");
    s.snr_db = detail::number_or_array(doc["snr_db"], "snr_db", s.snr_is_array);
    if (doc.contains("rate_bpcu")) {
        s.rate_bpcu = detail::number_or_array(doc["rate_bpcu"], "rate_bpcu", s.rate_is_array);
        for (double r : s.rate_bpcu)
            if (r < 0.0) throw ConfigError("rate_bpcu must be >= 0");
    }
    if (doc.contains("correlation")) {
        const auto& c = doc["correlation"];
        if (!c.is_object() || !c.contains("type") || !c["type"].is_string())
            throw ConfigError("correlation must be an object with a string \"type\"");
        const auto type = c["type"].get<std::string>();
        if (type == "identity") {
            detail::reject_unknown(c, {"type"}, "correlation");
        } else if (type == "exponential") {
            detail::reject_unknown(c, {"type", "zeta_r", "zeta_t"}, "correlation");
            if (!c.contains("zeta_r") || !c.contains("zeta_t"))
                throw ConfigError("exponential correlation needs zeta_r and zeta_t");
            s.correlation.type = CorrelationSpec::Type::exponential;
            s.correlation.zeta_r = detail::require_number(c["zeta_r"], "zeta_r");
            s.correlation.zeta_t = detail::require_number(c["zeta_t"], "zeta_t");
            for (double z : {s.correlation.zeta_r, s.correlation.zeta_t})
                if (!(z >= 0.0 && z < 1.0)) throw ConfigError("correlation coefficients must lie in [0, 1)");
        } else if (type == "file") {
            detail::reject_unknown(c, {"type", "r_path", "t_path"}, "correlation");
            if (!c.contains("r_path") || !c.contains("t_path") || !c["r_path"].is_string() ||
                !c["t_path"].is_string())
                throw ConfigError("file correlation needs string r_path and t_path");
            s.correlation.type = CorrelationSpec::Type::file;
            auto resolve = [&](const std::string& p) {
                std::filesystem::path path(p);
                return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
            };
            s.correlation.r_path = resolve(c["r_path"].get<std::string>());
            s.correlation.t_path = resolve(c["t_path"].get<std::string>());
        } else {
            throw ConfigError("unknown correlation type \"" + type + "\"");
        }
    }
    if (doc.contains("trials")) {
        if (!doc["trials"].is_number_integer() || doc["trials"].get<long long>() < 1)
            throw ConfigError("\"trials\" must be a positive integer");
        s.trials = doc["trials"].get<std::size_t>();
    }
    if (doc.contains("seed")) {
        const auto& seed = doc["seed"];
        if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<long long>() < 0))
            throw ConfigError("\"seed\" must be a non-negative integer");
        s.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("mean_variant")) {
        if (!doc["mean_variant"].is_string()) throw ConfigError("\"mean_variant\" must be a string");
        s.mean_variant = parse_mean_variant(doc["mean_variant"].get<std::string>());
    }
    if (doc.contains("fd_step")) {
        s.fd_step = detail::require_number(doc["fd_step"], "fd_step");
        if (!(s.fd_step > 0.0)) throw ConfigError("fd_step must be positive");
    }
    if (doc.contains("tolerance")) {
        s.tolerance = detail::require_number(doc["tolerance"], "tolerance");
        if (!(s.tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    }
    if (doc.contains("max_iter")) {
        if (!doc["max_iter"].is_number_integer() || doc["max_iter"].get<long long>() < 1)
            throw ConfigError("\"max_iter\" must be a positive integer");
        s.max_iter = doc["max_iter"].get<std::size_t>();
    }
    return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed scenario " + path.string() + ": " + e.what());
    }
    return parse_scenario(doc, path.parent_path());
}

} // namespace mimo

#endif // MIMO_SCENARIO_HPP

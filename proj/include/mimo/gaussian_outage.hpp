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

#ifndef MIMO_GAUSSIAN_OUTAGE_HPP
#define MIMO_GAUSSIAN_OUTAGE_HPP

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "mimo/channel_model.hpp"
#include "mimo/deterministic_equivalents.hpp"
#include "mimo/errors.hpp"
#include "mimo/sinr_covariance.hpp"

namespace mimo {

// How the O(1) part of E[log(1 + gamma_k)] is assembled.
//   taylor:     log(1+g) + dg/(1+g) - S/(2(1+g)^2), variance expanded around g + dg
//   as_printed: log(1+g) + dg + S,               variance expanded around g
enum class MeanVariant { taylor, as_printed };
enum class Receiver { mmse, optimal };

inline std::string_view to_string(MeanVariant v) { return v == MeanVariant::taylor ? "taylor" : "as-printed"; }
inline std::string_view to_string(Receiver r) { return r == Receiver::mmse ? "mmse" : "optimal"; }

inline MeanVariant parse_mean_variant(std::string_view s) {
    if (s == "taylor") return MeanVariant::taylor;
    if (s == "as-printed") return MeanVariant::as_printed;
    throw ConfigError("unknown mean variant \"" + std::string(s) + "\" (expected taylor or as-printed)");
}

// Gaussian model of a mutual information: mean c1 = M c10 + c11, variance c2.
struct MutualInfoGaussian {
    double c1 = 0.0;
    double c2 = 0.0;
    double c10 = 0.0;
    double c11 = 0.0;
    MeanVariant variant = MeanVariant::taylor;
    Receiver receiver = Receiver::mmse;
};

struct MeanParts {
    double c1 = 0.0;
    double c10 = 0.0;
    double c11 = 0.0;
};

namespace detail {

inline void check_same_size(const MeanSinrResult& mean_sinr, const SinrCovariance& sigma) {
    const auto M = mean_sinr.gamma_bar.size();
    if (sigma.sigma.rows() != M || sigma.sigma.cols() != M)
        throw DimensionError("SINR covariance and mean SINR come from different systems");
}

} // namespace detail

inline MeanParts mmse_mi_mean(const MeanSinrResult& mean_sinr, const SinrCovariance& sigma,
                              MeanVariant variant = MeanVariant::taylor) {
    detail::check_same_size(mean_sinr, sigma);
    const auto M = mean_sinr.gamma_bar.size();
    double leading = 0.0;
    double correction = 0.0;
    for (Eigen::Index k = 0; k < M; ++k) {
        const double g = mean_sinr.gamma_bar(k);
        const double dg = mean_sinr.delta_gamma(k);
        const double s = sigma.sigma(k, k);
        leading += std::log1p(g);
        if (variant == MeanVariant::taylor) {
            // Second-order expansion of E[log(1 + gamma_k)] around the corrected
            // mean g + dg; to first order in 1/M this is log(1+g) + dg/(1+g) - s/(2(1+g)^2).
            const double m = g + dg;
            correction += std::log1p(m) - std::log1p(g) - s / (2.0 * (1.0 + m) * (1.0 + m));
        } else {
            correction += dg + s;
        }
    }
    return {leading + correction, leading / static_cast<double>(M), correction};
}

// sum_kl Sigma_kl / ((1 + m_k)(1 + m_l)), m_k the expansion point of stream k.
inline double mmse_mi_variance(const MeanSinrResult& mean_sinr, const SinrCovariance& sigma,
                               MeanVariant variant = MeanVariant::taylor) {
    detail::check_same_size(mean_sinr, sigma);
    RVector weight = mean_sinr.gamma_bar;
    if (variant == MeanVariant::taylor) weight += mean_sinr.delta_gamma;
    weight = (weight.array() + 1.0).inverse().matrix();
    return weight.dot(sigma.sigma * weight);
}

struct GaussianOptions {
    MeanVariant variant = MeanVariant::taylor;
    double fd_step = 1e-3; // scaled by natural_fd_step
    SolverOptions solver{};
};

// Everything the asymptotic analysis produces for one scenario.
struct AsymptoticAnalysis {
    MeanSinrResult mean_sinr;
    SinrCovariance sigma;
    MutualInfoGaussian mmse;            // requested variant
    MutualInfoGaussian mmse_as_printed; // always reported alongside
    MutualInfoGaussian mmse_taylor;
    MutualInfoGaussian optimal;
};

inline MutualInfoGaussian mmse_mi_gaussian(const MeanSinrResult& mean_sinr, const SinrCovariance& sigma,
                                           MeanVariant variant) {
    const MeanParts mean = mmse_mi_mean(mean_sinr, sigma, variant);
    MutualInfoGaussian out;
    out.c1 = mean.c1;
    out.c10 = mean.c10;
    out.c11 = mean.c11;
    out.c2 = mmse_mi_variance(mean_sinr, sigma, variant);
    out.variant = variant;
    out.receiver = Receiver::mmse;
    return out;
}

// Mean from the log-det deterministic equivalent, variance -log(1 - M_t2 M_r2),
// both at the undeformed fixed point.
inline MutualInfoGaussian optimal_mi_gaussian(const CorrelationPair& pair, const SystemConfig& config,
                                              const SolverOptions& options = {}) {
    const FixedPointSolution sol = solve_fixed_point(pair, config, std::nullopt, options);
    MutualInfoGaussian out;
    out.receiver = Receiver::optimal;
    out.c1 = mean_logdet_asymptotic(pair, config, std::nullopt, sol);
    out.c10 = out.c1 / static_cast<double>(config.M());
    out.c11 = 0.0;
    out.c2 = joint_cumulant_A(pair, config, 0, 0, 1.0, 1.0, options);
    return out;
}

inline AsymptoticAnalysis analyze(const CorrelationPair& pair, const SystemConfig& config,
                                  const GaussianOptions& options = {}) {
    AsymptoticAnalysis out;
    out.mean_sinr = mean_sinr_asymptotic(pair, config, options.solver);
    out.sigma = sinr_covariance_auto(pair, config, options.fd_step, options.solver);
    out.mmse_taylor = mmse_mi_gaussian(out.mean_sinr, out.sigma, MeanVariant::taylor);
    out.mmse_as_printed = mmse_mi_gaussian(out.mean_sinr, out.sigma, MeanVariant::as_printed);
    out.mmse = options.variant == MeanVariant::taylor ? out.mmse_taylor : out.mmse_as_printed;
    out.optimal = optimal_mi_gaussian(pair, config, options.solver);
    return out;
}

// Phi(z) via the complementary error function (no cancellation in either tail).
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// P(I_N <= rate) = Phi((rate - c1) / sqrt(c2)); rate in nats.
inline double outage_probability(const MutualInfoGaussian& model, double rate) {
    if (model.c2 < 0.0 || !std::isfinite(model.c2)) throw ConfigError("variance must be >= 0");
    if (model.c2 == 0.0) return rate >= model.c1 ? 1.0 : 0.0;
    return normal_cdf((rate - model.c1) / std::sqrt(model.c2));
}

inline constexpr double nats_to_bits(double nats) { return nats / std::numbers::ln2; }
inline constexpr double bits_to_nats(double bits) { return bits * std::numbers::ln2; }

} // namespace mimo

#endif // MIMO_GAUSSIAN_OUTAGE_HPP

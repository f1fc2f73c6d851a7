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

#ifndef MIMO_DETERMINISTIC_EQUIVALENTS_HPP
#define MIMO_DETERMINISTIC_EQUIVALENTS_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>

#include "mimo/channel_model.hpp"
#include "mimo/errors.hpp"
#include "mimo/mmse_exact.hpp"

namespace mimo {

struct SolverOptions {
    double tol = 1e-12;
    std::size_t max_iter = 10000;
};

// Scalars (t, r) of the coupled equations
//   t = (1/M) Tr[sqrt(rho) R (I + sqrt(rho) r R)^{-1}]
//   r = (1/M) Tr[sqrt(rho) T~ (I + sqrt(rho) t T~)^{-1}],   T~ = T J_k(x).
struct FixedPointSolution {
    double t = 0.0;
    double r = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
    std::optional<Deformation> deformation;
};

// Eigenvalues of T~ = T J. They coincide with those of T^{1/2} J T^{1/2}, which
// is Hermitian, so they are real (one may be negative when x < 0).
inline RVector deformed_t_eigenvalues(const CorrelationPair& pair, const std::optional<Deformation>& deformation) {
    if (!deformation) return pair.t_spectrum().values;
    const int M = pair.M();
    const RVector j = deformation->diagonal(M);
    if (pair.t_is_identity()) return j;
    const CMatrix& S = pair.t_sqrt();
    const CMatrix sandwich = S * j.cast<std::complex<double>>().asDiagonal() * S;
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(sandwich, Eigen::EigenvaluesOnly);
    return eig.eigenvalues();
}

// The two right-hand sides and their derivatives, in spectral form.
class FixedPointEquations {
public:
    FixedPointEquations(const RVector& r_eigs, RVector t_eigs, double rho, int M)
        : r_eigs_(r_eigs), t_eigs_(std::move(t_eigs)), sqrt_rho_(std::sqrt(rho)), rho_(rho),
          inv_m_(1.0 / static_cast<double>(M)) {}

    double rhs_t(double r) const { return sqrt_rho_ * inv_m_ * resolvent_sum(r_eigs_, r); }
    double rhs_r(double t) const { return sqrt_rho_ * inv_m_ * resolvent_sum(t_eigs_, t); }

    // (1/M) Tr[(sqrt(rho) X (I + sqrt(rho) s X)^{-1})^2]; d rhs_t/dr = -m2_r(r).
    double m2_r(double r) const { return rho_ * inv_m_ * squared_resolvent_sum(r_eigs_, r); }
    double m2_t(double t) const { return rho_ * inv_m_ * squared_resolvent_sum(t_eigs_, t); }

    bool admissible(double t, double r) const {
        return std::isfinite(t) && std::isfinite(r) && min_pivot(t_eigs_, t) > 0.0 &&
               min_pivot(r_eigs_, r) > 0.0;
    }

    double residual(double t, double r) const {
        if (!admissible(t, r)) return std::numeric_limits<double>::infinity();
        const double dt = std::abs(t - rhs_t(r)) / std::max(1.0, std::abs(t));
        const double dr = std::abs(r - rhs_r(t)) / std::max(1.0, std::abs(r));
        return std::max(dt, dr);
    }

    const RVector& t_eigs() const noexcept { return t_eigs_; }
    const RVector& r_eigs() const noexcept { return r_eigs_; }
    double sqrt_rho() const noexcept { return sqrt_rho_; }

private:
    double resolvent_sum(const RVector& eigs, double s) const {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < eigs.size(); ++i) acc += eigs(i) / (1.0 + sqrt_rho_ * s * eigs(i));
        return acc;
    }

    double squared_resolvent_sum(const RVector& eigs, double s) const {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < eigs.size(); ++i) {
            const double q = eigs(i) / (1.0 + sqrt_rho_ * s * eigs(i));
            acc += q * q;
        }
        return acc;
    }

    double min_pivot(const RVector& eigs, double s) const {
        double lo = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < eigs.size(); ++i) lo = std::min(lo, 1.0 + sqrt_rho_ * s * eigs(i));
        return lo;
    }

    const RVector& r_eigs_;
    RVector t_eigs_;
    double sqrt_rho_;
    double rho_;
    double inv_m_;
};

namespace detail {

struct Iterate {
    double t;
    double r;
    double residual;
};

// psi(t) = rhs_t(rhs_r(t)) - t. The composite map is increasing in t, so psi
// changes sign once on the admissible half-line; inadmissible points count as
// lying beyond the root.
inline double composite_defect(const FixedPointEquations& eq, double t) {
    const double r = eq.rhs_r(t);
    if (!eq.admissible(t, r)) return -std::numeric_limits<double>::infinity();
    return eq.rhs_t(r) - t;
}

inline Iterate make_iterate(const FixedPointEquations& eq, double t) {
    const double r = eq.rhs_r(t);
    return {t, r, eq.residual(t, r)};
}

} // namespace detail

inline FixedPointSolution solve_fixed_point(const CorrelationPair& pair, const SystemConfig& config,
                                            const std::optional<Deformation>& deformation = std::nullopt,
                                            const SolverOptions& options = {}) {
    pair.check_matches(config);
    if (!(options.tol > 0.0)) throw ConfigError("solver tolerance must be positive");
    if (deformation && deformation->k() >= config.M()) throw ConfigError("deformation index out of range");

    const FixedPointEquations eq(pair.r_spectrum().values, deformed_t_eigenvalues(pair, deformation),
                                 config.rho(), config.M());
    const double s = eq.sqrt_rho();
    if (!std::isfinite(detail::composite_defect(eq, 0.0)))
        throw DomainError("deformation leaves no admissible fixed point (I + sqrt(rho) t T J singular at t = 0)");

    // Bracket [lo, hi] with psi(lo) >= 0 >= psi(hi).
    double lo = 0.0;
    double hi = std::max(eq.rhs_t(0.0), 1e-300);
    for (int grow = 0; detail::composite_defect(eq, hi) > 0.0; ++grow) {
        if (grow > 2000) throw DomainError("fixed point is unbounded for this deformation");
        lo = hi;
        hi *= 2.0;
    }

    const double ratio = static_cast<double>(config.N()) / static_cast<double>(config.M());
    double t0 = s * std::min(1.0, ratio) / (1.0 + s);
    if (!(t0 > lo && t0 < hi)) t0 = 0.5 * (lo + hi);
    detail::Iterate cur = detail::make_iterate(eq, t0);

    double alpha = 1.0;
    std::size_t it = 0;
    while (cur.residual > options.tol) {
        if (it >= options.max_iter) throw NonConvergence(it, cur.residual);
        ++it;

        const double psi = detail::composite_defect(eq, cur.t);
        if (psi >= 0.0)
            lo = std::max(lo, cur.t);
        else
            hi = std::min(hi, cur.t);

        auto inside = [&](double t) { return std::isfinite(t) && t > lo && t < hi; };

        // Damped alternating substitution, collapsed onto t.
        double next = (1.0 - alpha) * cur.t + alpha * (cur.t + psi);
        // Newton on psi; d psi / dt = M_r2 M_t2 - 1.
        const double dpsi = std::isfinite(psi) ? eq.m2_r(cur.r) * eq.m2_t(cur.t) - 1.0 : 0.0;
        const double newton = dpsi != 0.0 ? cur.t - psi / dpsi : std::numeric_limits<double>::quiet_NaN();

        if (inside(newton)) {
            next = newton;
        } else if (!inside(next)) {
            alpha *= 0.5;
            next = 0.5 * (lo + hi);
        }
        if (next == cur.t) break; // bracket collapsed to one double
        cur = detail::make_iterate(eq, next);
    }

    for (int polish = 0; polish < 3 && cur.residual > 0.0; ++polish) {
        const double psi = detail::composite_defect(eq, cur.t);
        const double dpsi = eq.m2_r(cur.r) * eq.m2_t(cur.t) - 1.0;
        if (!std::isfinite(psi) || dpsi == 0.0) break;
        const detail::Iterate cand = detail::make_iterate(eq, cur.t - psi / dpsi);
        if (!(cand.residual < cur.residual)) break;
        cur = cand;
    }
    // A bracket that shrinks to one double without a small defect straddles a
    // pole of the map, not a root.
    if (!(cur.residual <= options.tol) && !(cur.residual < 1e-10))
        throw DomainError("no admissible fixed point for this deformation (defect " +
                          std::to_string(cur.residual) + " at t=" + std::to_string(cur.t) + ")");

    return {cur.t, cur.r, cur.residual, it, deformation};
}

// Tr log(I + sqrt(rho) t T~) - M t r + Tr log(I + sqrt(rho) r R): asymptotic
// mean of log det(I + (rho/M) H J H^H), nats.
inline double mean_logdet_asymptotic(const CorrelationPair& pair, const SystemConfig& config,
                                     const std::optional<Deformation>& deformation,
                                     const FixedPointSolution& solution) {
    pair.check_matches(config);
    const double s = std::sqrt(config.rho());
    const RVector t_eigs = deformed_t_eigenvalues(pair, deformation);
    const RVector& r_eigs = pair.r_spectrum().values;
    double total = -static_cast<double>(config.M()) * solution.t * solution.r;
    for (Eigen::Index a = 0; a < t_eigs.size(); ++a) {
        const double arg = s * solution.t * t_eigs(a);
        if (!(arg > -1.0)) throw DomainError("log-det argument is not positive");
        total += std::log1p(arg);
    }
    for (Eigen::Index i = 0; i < r_eigs.size(); ++i) total += std::log1p(s * solution.r * r_eigs(i));
    return total;
}

inline double mean_logdet_asymptotic(const CorrelationPair& pair, const SystemConfig& config,
                                     const std::optional<Deformation>& deformation = std::nullopt,
                                     const SolverOptions& options = {}) {
    return mean_logdet_asymptotic(pair, config, deformation, solve_fixed_point(pair, config, deformation, options));
}

struct MeanSinrResult {
    RVector gamma_bar;   // leading-order mean SINR per stream
    RVector delta_gamma; // 1/N correction per stream
    RVector eta;         // [(I + t sqrt(rho) T)^{-1}]_kk
    RVector eta_prime;   // d eta_k / d t
    double m_t2 = 0.0;
    double m_r2 = 0.0;
    FixedPointSolution solution; // undeformed (t0, r0)

    double stability() const noexcept { return 1.0 - m_t2 * m_r2; }
};

// Mean SINRs 1/eta_k - 1 at the undeformed fixed point, plus the 1/N correction
// (1/M) (eta'_k^2 / eta_k^3) M_r2 / (1 - M_t2 M_r2).
inline MeanSinrResult mean_sinr_asymptotic(const CorrelationPair& pair, const SystemConfig& config,
                                           const SolverOptions& options = {}) {
    MeanSinrResult out;
    out.solution = solve_fixed_point(pair, config, std::nullopt, options);
    const int M = config.M();
    const double rho = config.rho();
    const double s = std::sqrt(rho);
    const double c = s * out.solution.t;

    const RVector& lt = pair.t_spectrum().values;
    const CMatrix& U = pair.t_spectrum().vectors;
    const RVector& lr = pair.r_spectrum().values;

    out.m_t2 = 0.0;
    for (Eigen::Index a = 0; a < lt.size(); ++a) {
        const double q = s * lt(a) / (1.0 + c * lt(a));
        out.m_t2 += q * q;
    }
    out.m_t2 /= M;
    out.m_r2 = 0.0;
    for (Eigen::Index i = 0; i < lr.size(); ++i) {
        const double q = s * lr(i) / (1.0 + s * out.solution.r * lr(i));
        out.m_r2 += q * q;
    }
    out.m_r2 /= M;

    const double stab = out.stability();
    if (!(stab > 0.0))
        throw StabilityViolation("1 - M_t2 M_r2 = " + std::to_string(stab) + " <= 0 at rho=" +
                                 std::to_string(rho) + ", M=" + std::to_string(M) +
                                 ", N=" + std::to_string(config.N()));

    out.eta.resize(M);
    out.eta_prime.resize(M);
    out.gamma_bar.resize(M);
    out.delta_gamma.resize(M);
    for (int k = 0; k < M; ++k) {
        double eta = 0.0;
        double eta_p = 0.0;
        for (Eigen::Index a = 0; a < lt.size(); ++a) {
            const double w = std::norm(U(k, a));
            const double den = 1.0 + c * lt(a);
            eta += w / den;
            eta_p -= w * s * lt(a) / (den * den);
        }
        out.eta(k) = eta;
        out.eta_prime(k) = eta_p;
        out.gamma_bar(k) = std::max(0.0, 1.0 / eta - 1.0);
        out.delta_gamma(k) = eta_p * eta_p / (eta * eta * eta) * out.m_r2 / stab / M;
    }
    return out;
}

} // namespace mimo

#endif // MIMO_DETERMINISTIC_EQUIVALENTS_HPP

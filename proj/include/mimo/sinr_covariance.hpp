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

#ifndef MIMO_SINR_COVARIANCE_HPP
#define MIMO_SINR_COVARIANCE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "mimo/channel_model.hpp"
#include "mimo/deterministic_equivalents.hpp"
#include "mimo/errors.hpp"
#include "mimo/mmse_exact.hpp"

namespace mimo {

// F(x_k, x_l) = -log[1 - M_{t_k,t_l} M_{r_k,r_l}], the joint cumulant of the
// log-dets A(J_k(x_k)) and A(J_l(x_l)). Fixed points and transmit-side
// resolvents are cached per (stream, x) node, so a finite-difference stencil
// solves each deformation once.
class JointCumulantKernel {
public:
    JointCumulantKernel(const CorrelationPair& pair, const SystemConfig& config, SolverOptions options = {})
        : pair_(pair), config_(config), options_(options) {
        pair_.check_matches(config_);
    }

    double operator()(int k, double x_k, int l, double x_l) {
        const Node& a = node(k, x_k);
        const Node& b = node(l, x_l);
        const double rho = config_.rho();
        const double s = std::sqrt(rho);
        const double inv_m = 1.0 / static_cast<double>(config_.M());

        // Tr[A_k A_l] without forming the product.
        const double m_t = rho * inv_m * (a.resolvent.cwiseProduct(b.resolvent.transpose())).sum().real();
        const RVector& lr = pair_.r_spectrum().values;
        double m_r = 0.0;
        for (Eigen::Index i = 0; i < lr.size(); ++i)
            m_r += lr(i) * lr(i) / ((1.0 + s * a.solution.r * lr(i)) * (1.0 + s * b.solution.r * lr(i)));
        m_r *= rho * inv_m;

        const double product = m_t * m_r;
        if (!(product < 1.0))
            throw StabilityViolation("1 - M_t M_r = " + std::to_string(1.0 - product) +
                                     " <= 0 at (k=" + std::to_string(k) + ", x=" + std::to_string(x_k) +
                                     "; l=" + std::to_string(l) + ", x=" + std::to_string(x_l) + ")");
        return -std::log1p(-product);
    }

    const FixedPointSolution& solution(int k, double x) { return node(k, x).solution; }
    std::size_t cached_nodes() const noexcept { return nodes_.size(); }

private:
    struct Node {
        FixedPointSolution solution;
        CMatrix resolvent; // J T (I + sqrt(rho) t J T)^{-1}
    };

    const Node& node(int k, double x) {
        const auto key = std::make_pair(k, x);
        if (auto it = nodes_.find(key); it != nodes_.end()) return it->second;

        const Deformation def(k, x);
        Node n;
        n.solution = solve_fixed_point(pair_, config_, def, options_);
        const int M = config_.M();
        const CMatrix W = def.diagonal(M).cast<std::complex<double>>().asDiagonal() * pair_.T();
        const CMatrix lhs = CMatrix::Identity(M, M) + std::sqrt(config_.rho()) * n.solution.t * W;
        n.resolvent = lhs.partialPivLu().solve(W);
        return nodes_.emplace(key, std::move(n)).first->second;
    }

    const CorrelationPair& pair_;
    SystemConfig config_;
    SolverOptions options_;
    std::map<std::pair<int, double>, Node> nodes_;
};

inline double joint_cumulant_A(const CorrelationPair& pair, const SystemConfig& config, int k, int l,
                               double x_k, double x_l, const SolverOptions& options = {}) {
    if (k < 0 || l < 0 || k >= config.M() || l >= config.M())
        throw ConfigError("stream index out of range");
    JointCumulantKernel kernel(pair, config, options);
    return kernel(k, x_k, l, x_l);
}

struct SinrCovariance {
    RMatrix sigma; // Sigma_ij = E_c[gamma_i; gamma_j]
    double step = 0.0;
    std::string method = "central-4pt";
};

namespace detail {

// [F(h,h) - F(h,-h) - F(-h,h) + F(-h,-h)] / (4 h^2) around (0, 0).
inline double mixed_central(JointCumulantKernel& F, int i, int j, double h) {
    return (F(i, h, j, h) - F(i, h, j, -h) - F(i, -h, j, h) + F(i, -h, j, -h)) / (4.0 * h * h);
}

} // namespace detail

// Sigma_ij = -d^2 log[1 - M_{t_i,t_j} M_{r_i,r_j}] / dx_i dx_j at x_i = x_j = 0,
// with the fixed points re-solved at every stencil node. Central 4-point mixed
// differences at steps h and h/2, combined by one Richardson level.
inline SinrCovariance sinr_covariance(const CorrelationPair& pair, const SystemConfig& config, double step = 1e-3,
                                      const SolverOptions& options = {}) {
    if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("finite-difference step must be positive");
    JointCumulantKernel F(pair, config, options);
    const int M = config.M();

    // The expansion point itself must be valid; failures beyond it belong to the stencil.
    for (int k = 0; k < (pair.t_is_scalar() ? 1 : M); ++k) (void)F(k, 0.0, k, 0.0);

    auto entry = [&](int i, int j) {
        try {
            const double coarse = detail::mixed_central(F, i, j, step);
            const double fine = detail::mixed_central(F, i, j, 0.5 * step);
            return (4.0 * fine - coarse) / 3.0;
        } catch (const DomainError& e) {
            throw StepTooLarge(step, e.what());
        } catch (const StabilityViolation& e) {
            throw StepTooLarge(step, e.what());
        }
    };

    SinrCovariance out;
    out.step = step;
    out.method = "central-4pt+richardson";
    out.sigma.resize(M, M);
    if (pair.t_is_scalar()) {
        const double diag = entry(0, 0);
        const double off = M > 1 ? entry(0, 1) : 0.0;
        out.sigma.setConstant(off);
        out.sigma.diagonal().setConstant(diag);
        return out;
    }
    for (int i = 0; i < M; ++i)
        for (int j = i; j < M; ++j) out.sigma(i, j) = out.sigma(j, i) = entry(i, j);
    return out;
}

// Step scaled to the width of the admissible deformation region around x = 0,
// which shrinks like 1 / (1 + sqrt(rho) t_k T_kk) with t_k the fixed point of
// the deflated system for stream k.
inline double natural_fd_step(const CorrelationPair& pair, const SystemConfig& config, double base_step,
                              const SolverOptions& options = {}) {
    const double s = std::sqrt(config.rho());
    double widest = 0.0;
    for (int k = 0; k < (pair.t_is_scalar() ? 1 : config.M()); ++k) {
        const FixedPointSolution sol = solve_fixed_point(pair, config, Deformation(k, 0.0), options);
        widest = std::max(widest, s * sol.t * pair.T()(k, k).real());
    }
    return base_step / (1.0 + widest);
}

// sinr_covariance at the natural step, halving it while the stencil leaves the
// stability region.
inline SinrCovariance sinr_covariance_auto(const CorrelationPair& pair, const SystemConfig& config,
                                           double base_step = 1e-3, const SolverOptions& options = {}) {
    double h = natural_fd_step(pair, config, base_step, options);
    for (int attempt = 0;; ++attempt) {
        try {
            return sinr_covariance(pair, config, h, options);
        } catch (const StepTooLarge&) {
            if (attempt >= 30) throw;
            h *= 0.5;
        }
    }
}

struct IidClosedForms {
    double g = 0.0;    // mean SINR
    double v_d = 0.0;  // M * Sigma_11
    double v_od = 0.0; // M^2 * Sigma_12
};

// Uncorrelated channels (R = I, T = I), leading order in 1/M.
inline IidClosedForms iid_closed_forms(const SystemConfig& config) {
    const double beta = config.beta();
    const double rho = config.rho();
    const double a = rho * (1.0 - beta) - beta;
    IidClosedForms out;
    // Rationalized root for a < 0 avoids cancellation at small rho.
    const double disc = std::sqrt(a * a + 4.0 * rho * beta);
    out.g = a >= 0.0 ? (a + disc) / (2.0 * beta) : 2.0 * rho / (disc - a);
    const double g = out.g;
    const double q = beta * g * g / ((1.0 + g) * (1.0 + g));
    const double d = 1.0 - q;
    out.v_d = beta * g * g / d;
    const double opg2 = (1.0 + g) * (1.0 + g);
    out.v_od = beta * beta * g * g * g * (g * d - 2.0) / (opg2 * d * d * d) +
               beta * beta * beta * g * g * g * g / (opg2 * opg2 * d * d * d * d);
    return out;
}

} // namespace mimo

#endif // MIMO_SINR_COVARIANCE_HPP

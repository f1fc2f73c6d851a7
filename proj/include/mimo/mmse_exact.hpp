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

#ifndef MIMO_MMSE_EXACT_HPP
#define MIMO_MMSE_EXACT_HPP

#include <Eigen/Dense>

#include <cmath>

#include "mimo/channel_model.hpp"
#include "mimo/errors.hpp"

namespace mimo {

// Per-stream SINRs gamma_k, one entry per transmit stream.
using SinrVector = RVector;

// J_k(x) = I + (x - 1) delta_k: identity except entry (k, k) = x. Streams are
// indexed from 0.
class Deformation {
public:
    Deformation(int k, double x) : k_(k), x_(x) {
        if (k < 0) throw ConfigError("deformation index must be >= 0");
    }

    int k() const noexcept { return k_; }
    double x() const noexcept { return x_; }

    RVector diagonal(int M) const {
        if (k_ >= M) throw ConfigError("deformation index out of range");
        RVector d = RVector::Ones(M);
        d(k_) = x_;
        return d;
    }

    CMatrix matrix(int M) const { return diagonal(M).cast<std::complex<double>>().asDiagonal(); }

private:
    int k_;
    double x_;
};

namespace detail {

inline void check_channel(const CMatrix& H, double rho) {
    if (H.rows() < 1 || H.cols() < 1) throw DimensionError("channel matrix is empty");
    if (!(rho > 0.0) || !std::isfinite(rho)) throw ConfigError("rho must be positive and finite");
}

} // namespace detail

// Scratch space for the per-trial receiver computation: one Cholesky
// factorization of I + (rho/M) H^H H yields every SINR and the log-det.
struct ReceiverWorkspace {
    CMatrix gram;
    CMatrix l_inv;
    Eigen::LLT<CMatrix> llt;
};

struct ReceiverOutputs {
    SinrVector gammas;
    double mi_mmse = 0.0;
    double mi_optimal = 0.0;
};

inline void evaluate_receivers(const CMatrix& H, double rho, ReceiverWorkspace& ws, ReceiverOutputs& out) {
    const Eigen::Index M = H.cols();
    const double scale = rho / static_cast<double>(M);
    ws.gram.setIdentity(M, M);
    ws.gram.selfadjointView<Eigen::Lower>().rankUpdate(H.adjoint(), scale);
    ws.llt.compute(ws.gram);
    if (ws.llt.info() != Eigen::Success) throw NumericalError("I + (rho/M) H^H H is not positive definite");

    const auto L = ws.llt.matrixL();
    ws.l_inv.setIdentity(M, M);
    L.solveInPlace(ws.l_inv);

    out.gammas.resize(M);
    double log_det = 0.0;
    double mi = 0.0;
    for (Eigen::Index k = 0; k < M; ++k) {
        // [A^{-1}]_kk = || column k of L^{-1} ||^2
        const double inv_kk = ws.l_inv.col(k).squaredNorm();
        const double gamma = 1.0 / inv_kk - 1.0;
        out.gammas(k) = gamma > 0.0 ? gamma : 0.0;
        mi += std::log1p(out.gammas(k));
        log_det += std::log(ws.llt.matrixLLT()(k, k).real());
    }
    out.mi_mmse = mi;
    out.mi_optimal = 2.0 * log_det;
}

// gamma_k = 1 / [(I + (rho/M) H^H H)^{-1}]_kk - 1 for all k.
inline SinrVector sinr_exact(const CMatrix& H, double rho) {
    detail::check_channel(H, rho);
    ReceiverWorkspace ws;
    ReceiverOutputs out;
    evaluate_receivers(H, rho, ws, out);
    return out.gammas;
}

// Tr{ [I + (rho/M) H J_k(0) H^H]^{-1} (rho/M) H delta_k H^H }: the derivative of
// log det(I + (rho/M) H J_k(x) H^H) at x = 0, which equals gamma_k.
inline double sinr_trace_identity(const CMatrix& H, double rho, int k) {
    detail::check_channel(H, rho);
    const auto M = static_cast<int>(H.cols());
    if (k < 0 || k >= M) throw ConfigError("stream index out of range");
    const double scale = rho / static_cast<double>(M);
    const CMatrix deflated = Deformation(k, 0.0).matrix(M);
    const CMatrix delta = CMatrix::Identity(M, M) - deflated;

    const Eigen::Index N = H.rows();
    const CMatrix B = CMatrix::Identity(N, N) + scale * H * deflated * H.adjoint();
    const CMatrix rhs = scale * H * delta * H.adjoint();
    Eigen::LLT<CMatrix> llt(B);
    if (llt.info() != Eigen::Success) throw NumericalError("deflated matrix is not positive definite");
    return llt.solve(rhs).trace().real();
}

// I_N = sum_k log(1 + gamma_k), nats.
inline double mutual_info_mmse(const SinrVector& gammas) {
    double total = 0.0;
    for (Eigen::Index k = 0; k < gammas.size(); ++k) total += std::log1p(gammas(k));
    return total;
}

// log det(I + (rho/M) H H^H), nats. Evaluated on the M x M side
// (det(I + AB) = det(I + BA)) via Cholesky.
inline double mutual_info_optimal(const CMatrix& H, double rho) {
    detail::check_channel(H, rho);
    ReceiverWorkspace ws;
    ReceiverOutputs out;
    evaluate_receivers(H, rho, ws, out);
    return out.mi_optimal;
}

} // namespace mimo

#endif // MIMO_MMSE_EXACT_HPP

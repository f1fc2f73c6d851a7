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

// Test-only reference computations. Everything here takes a route that is
// independent of the library code it is used to check.

#ifndef MIMO_TESTS_ORACLES_HPP
#define MIMO_TESTS_ORACLES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <random>

namespace oracle {

using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

// Unit-variance complex Gaussian matrix from a Mersenne twister (not Philox).
inline CMatrix random_complex(int rows, int cols, std::mt19937_64& gen) {
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    CMatrix H(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) H(i, j) = {nd(gen), nd(gen)};
    return H;
}

// gamma_k = (rho/M) h_k^H [I + (rho/M) H_k H_k^H]^{-1} h_k with column k deleted,
// solved by full-pivot LU.
inline RVector sinr_deflated(const CMatrix& H, double rho) {
    const auto N = H.rows();
    const auto M = H.cols();
    const double s = rho / static_cast<double>(M);
    RVector out(M);
    for (Eigen::Index k = 0; k < M; ++k) {
        CMatrix Hk(N, M - 1);
        for (Eigen::Index a = 0, c = 0; a < M; ++a)
            if (a != k) Hk.col(c++) = H.col(a);
        const CMatrix B = CMatrix::Identity(N, N) + s * Hk * Hk.adjoint();
        const Eigen::VectorXcd x = B.fullPivLu().solve(H.col(k));
        out(k) = s * (H.col(k).adjoint() * x)(0, 0).real();
    }
    return out;
}

// sum_i log(1 + (rho/M) lambda_i(H^H H)).
inline double logdet_eigen(const CMatrix& H, double rho) {
    const double s = rho / static_cast<double>(H.cols());
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(H.adjoint() * H);
    double total = 0.0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) total += std::log1p(s * eig.eigenvalues()(i));
    return total;
}

// Mean SINR of uncorrelated channels, direct quadratic-root formula.
inline double closed_g(double beta, double rho) {
    const double a = rho * (1.0 - beta) - beta;
    return (a + std::sqrt(a * a + 4.0 * rho * beta)) / (2.0 * beta);
}

inline double v_d(double beta, double rho) {
    const double g = closed_g(beta, rho);
    return beta * g * g / (1.0 - beta * g * g / ((1.0 + g) * (1.0 + g)));
}

inline double v_od(double beta, double rho) {
    const double g = closed_g(beta, rho);
    const double D = 1.0 - beta * g * g / std::pow(1.0 + g, 2);
    return std::pow(beta, 2) * std::pow(g, 3) * (g * D - 2.0) / (std::pow(1.0 + g, 2) * std::pow(D, 3)) +
           std::pow(beta, 3) * std::pow(g, 4) / (std::pow(1.0 + g, 4) * std::pow(D, 4));
}

// Random Hermitian PSD matrix of the given rank.
inline CMatrix random_psd(int n, int rank, std::mt19937_64& gen) {
    const CMatrix B = random_complex(n, rank, gen);
    CMatrix A = B * B.adjoint();
    return 0.5 * (A + A.adjoint());
}

// Standard normal table values.
inline constexpr double kPhi2 = 0.9772498680518208;
inline constexpr double kPhiMinus3 = 0.0013498980316300933;

} // namespace oracle

#endif // MIMO_TESTS_ORACLES_HPP

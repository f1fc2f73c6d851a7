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

#ifndef MIMO_CHANNEL_MODEL_HPP
#define MIMO_CHANNEL_MODEL_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>

#include "json.hpp"

#include "mimo/errors.hpp"
#include "mimo/rng.hpp"

namespace mimo {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kPsdTol = 1e-10;

// Antenna counts and SNR of one scenario. M transmit streams, N >= M receive
// antennas, linear transmit SNR rho.
class SystemConfig {
public:
    static SystemConfig make(int M, int N, double rho) {
        if (M < 1) throw ConfigError("M must be >= 1, got " + std::to_string(M));
        if (N < M)
            throw ConfigError("N must be >= M (load factor <= 1), got M=" + std::to_string(M) +
                              " N=" + std::to_string(N));
        if (!(rho > 0.0) || !std::isfinite(rho))
            throw ConfigError("rho must be positive and finite, got " + std::to_string(rho));
        return SystemConfig(M, N, rho);
    }

    static SystemConfig from_db(int M, int N, double snr_db) {
        return make(M, N, db_to_linear(snr_db));
    }

    static double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

    int M() const noexcept { return M_; }
    int N() const noexcept { return N_; }
    double rho() const noexcept { return rho_; }
    double beta() const noexcept { return static_cast<double>(M_) / static_cast<double>(N_); }

private:
    SystemConfig(int M, int N, double rho) : M_(M), N_(N), rho_(rho) {}

    int M_;
    int N_;
    double rho_;
};

// Eigendecomposition of a validated Hermitian PSD matrix. Eigenvalues in
// [-kPsdTol, 0) are clipped to zero.
struct HermitianSpectrum {
    RVector values;
    CMatrix vectors;
};

inline HermitianSpectrum hermitian_psd_spectrum(const CMatrix& A, const std::string& name = "matrix") {
    if (A.rows() != A.cols() || A.rows() == 0)
        throw DimensionError(name + " must be square and non-empty");
    if (!A.allFinite()) throw ConfigError(name + " has non-finite entries");
    const double asym = (A - A.adjoint()).cwiseAbs().maxCoeff();
    if (asym > kHermitianTol)
        throw ConfigError(name + " is not Hermitian (max |A - A^H| = " + std::to_string(asym) + ")");
    if (A.diagonal().imag().cwiseAbs().maxCoeff() > kHermitianTol)
        throw ConfigError(name + " has non-real diagonal entries");

    Eigen::SelfAdjointEigenSolver<CMatrix> eig(A);
    if (eig.info() != Eigen::Success) throw ConfigError(name + ": eigendecomposition failed");
    HermitianSpectrum out{eig.eigenvalues(), eig.eigenvectors()};
    if (out.values.minCoeff() < -kPsdTol)
        throw ConfigError(name + " is not positive semidefinite (smallest eigenvalue " +
                          std::to_string(out.values.minCoeff()) + ")");
    out.values = out.values.cwiseMax(0.0);
    return out;
}

inline CMatrix psd_sqrt(const CMatrix& A) {
    const HermitianSpectrum s = hermitian_psd_spectrum(A);
    return s.vectors * s.values.cwiseSqrt().asDiagonal() * s.vectors.adjoint();
}

// Real symmetric Toeplitz matrix with entries zeta^|i-j|.
inline CMatrix build_exponential_correlation(int n, double zeta) {
    if (n < 1) throw ConfigError("correlation dimension must be >= 1");
    if (!(zeta >= 0.0 && zeta < 1.0))
        throw ConfigError("exponential correlation coefficient must lie in [0, 1), got " +
                          std::to_string(zeta));
    CMatrix A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = std::pow(zeta, std::abs(i - j));
    return A;
}

// Receive (N x N) and transmit (M x M) correlation matrices of the Kronecker
// model E[H_ia conj(H_jb)] = R_ij T_ab. Spectra and square roots are computed
// once at construction.
class CorrelationPair {
public:
    CorrelationPair(CMatrix R, CMatrix T) : R_(std::move(R)), T_(std::move(T)) {
        r_spec_ = hermitian_psd_spectrum(R_, "R");
        t_spec_ = hermitian_psd_spectrum(T_, "T");
        r_sqrt_ = r_spec_.vectors * r_spec_.values.cwiseSqrt().asDiagonal() * r_spec_.vectors.adjoint();
        t_sqrt_ = t_spec_.vectors * t_spec_.values.cwiseSqrt().asDiagonal() * t_spec_.vectors.adjoint();
        r_identity_ = R_.isIdentity(0.0);
        t_identity_ = T_.isIdentity(0.0);
        const std::complex<double> t0 = T_(0, 0);
        t_scalar_ = (T_ - t0 * CMatrix::Identity(T_.rows(), T_.cols())).cwiseAbs().maxCoeff() == 0.0;
    }

    static CorrelationPair identity(int N, int M) {
        return {CMatrix::Identity(N, N), CMatrix::Identity(M, M)};
    }

    static CorrelationPair exponential(int N, int M, double zeta_r, double zeta_t) {
        return {build_exponential_correlation(N, zeta_r), build_exponential_correlation(M, zeta_t)};
    }

    int N() const noexcept { return static_cast<int>(R_.rows()); }
    int M() const noexcept { return static_cast<int>(T_.rows()); }
    const CMatrix& R() const noexcept { return R_; }
    const CMatrix& T() const noexcept { return T_; }
    const HermitianSpectrum& r_spectrum() const noexcept { return r_spec_; }
    const HermitianSpectrum& t_spectrum() const noexcept { return t_spec_; }
    const CMatrix& r_sqrt() const noexcept { return r_sqrt_; }
    const CMatrix& t_sqrt() const noexcept { return t_sqrt_; }
    bool is_identity() const noexcept { return r_identity_ && t_identity_; }
    bool r_is_identity() const noexcept { return r_identity_; }
    bool t_is_identity() const noexcept { return t_identity_; }
    // T = c I: all streams are exchangeable.
    bool t_is_scalar() const noexcept { return t_scalar_; }

    double trace_r() const { return R_.trace().real(); }
    double trace_t() const { return T_.trace().real(); }

    void check_matches(const SystemConfig& config) const {
        if (N() != config.N() || M() != config.M())
            throw DimensionError("correlation pair is " + std::to_string(N()) + "x" +
                                 std::to_string(M()) + " but the system is N=" +
                                 std::to_string(config.N()) + ", M=" + std::to_string(config.M()));
    }

private:
    CMatrix R_;
    CMatrix T_;
    HermitianSpectrum r_spec_;
    HermitianSpectrum t_spec_;
    CMatrix r_sqrt_;
    CMatrix t_sqrt_;
    bool r_identity_ = false;
    bool t_identity_ = false;
    bool t_scalar_ = false;
};

struct SeedPath {
    std::uint64_t master_seed = 0;
    std::uint64_t trial_index = 0;
};

struct ChannelSample {
    CMatrix H; // N x M
    SeedPath seed_path;
};

// Fills G (N x M, column-major draw order) with unit-variance complex Gaussians
// from stream (master_seed, trial_index) and returns R^{1/2} G T^{1/2}.
inline void sample_channel_into(const CorrelationPair& pair, std::uint64_t master_seed,
                                std::uint64_t trial_index, CMatrix& H) {
    const int N = pair.N();
    const int M = pair.M();
    H.resize(N, M);
    TrialStream stream(master_seed, trial_index);
    for (int a = 0; a < M; ++a)
        for (int i = 0; i < N; ++i) H(i, a) = stream.next_complex_gaussian();
    if (!pair.r_is_identity()) H = pair.r_sqrt() * H;
    if (!pair.t_is_identity()) H = H * pair.t_sqrt();
}

inline ChannelSample sample_channel(const CorrelationPair& pair, const SystemConfig& config,
                                    std::uint64_t master_seed, std::uint64_t trial_index) {
    pair.check_matches(config);
    ChannelSample out;
    out.seed_path = {master_seed, trial_index};
    sample_channel_into(pair, master_seed, trial_index, out.H);
    return out;
}

// ---- correlation matrix files: {"n": n, "entries": [[[re, im], ...], ...]} ----

inline CMatrix correlation_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("n") || !doc.contains("entries"))
        throw ConfigError("correlation document needs keys \"n\" and \"entries\"");
    for (const auto& item : doc.items())
        if (item.key() != "n" && item.key() != "entries")
            throw ConfigError("unknown key in correlation document: " + item.key());
    if (!doc["n"].is_number_integer() || doc["n"].get<long long>() < 1)
        throw ConfigError("correlation \"n\" must be a positive integer");
    const auto n = doc["n"].get<int>();
    const auto& rows = doc["entries"];
    if (!rows.is_array() || static_cast<int>(rows.size()) != n)
        throw ConfigError("correlation \"entries\" must have n rows");
    CMatrix A(n, n);
    for (int i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            throw ConfigError("correlation row " + std::to_string(i) + " must have n entries");
        for (int j = 0; j < n; ++j) {
            const auto& e = row[static_cast<std::size_t>(j)];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                throw ConfigError("correlation entry must be a [re, im] pair");
            A(i, j) = {e[0].get<double>(), e[1].get<double>()};
        }
    }
    return A;
}

inline nlohmann::json correlation_to_json(const CMatrix& A) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < A.cols(); ++j) row.push_back({A(i, j).real(), A(i, j).imag()});
        rows.push_back(std::move(row));
    }
    return {{"n", A.rows()}, {"entries", std::move(rows)}};
}

inline CMatrix read_correlation_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open correlation file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed correlation file " + path.string() + ": " + e.what());
    }
    return correlation_from_json(doc);
}

inline void write_correlation_file(const std::filesystem::path& path, const CMatrix& A) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write correlation file " + path.string());
    out << correlation_to_json(A).dump() << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace mimo

#endif // MIMO_CHANNEL_MODEL_HPP

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

#include <gtest/gtest.h>

#include <cmath>

#include "mimo/mmse_exact.hpp"
#include "mimo/montecarlo.hpp"
#include "mimo/sinr_covariance.hpp"

#include "oracles.hpp"

namespace {

using mimo::CorrelationPair;
using mimo::SystemConfig;

TEST(JointCumulant, IidUndeformedValue) {
    // rho/(1+g)^2 and (rho/beta)/(1+rho/(1+g))^2 evaluated independently.
    const auto cfg = SystemConfig::make(8, 16, 4.0);
    const double v = mimo::joint_cumulant_A(CorrelationPair::identity(16, 8), cfg, 0, 0, 1.0, 1.0);
    EXPECT_NEAR(v, 0.4155008823577663, 1e-10);
    EXPECT_NEAR(v, 0.41552, 1e-4 * 0.41552);
}

TEST(JointCumulant, SwapSymmetry) {
    const auto pair = CorrelationPair::exponential(10, 5, 0.6, 0.4);
    const auto cfg = SystemConfig::make(5, 10, 7.0);
    mimo::JointCumulantKernel F(pair, cfg);
    for (auto [k, xk, l, xl] : {std::tuple{0, 0.3, 2, 1.2}, std::tuple{1, 0.0, 1, 0.7}, std::tuple{4, 1.0, 3, 0.001}})
        EXPECT_NEAR(F(k, xk, l, xl), F(l, xl, k, xk), 1e-14);
}

TEST(JointCumulant, VanishesAtZeroSnr) {
    const auto cfg = SystemConfig::make(4, 8, 1e-12);
    EXPECT_LE(std::abs(mimo::joint_cumulant_A(CorrelationPair::identity(8, 4), cfg, 0, 0, 1.0, 1.0)), 1e-10);
}

TEST(JointCumulant, RejectsBadIndex) {
    const auto cfg = SystemConfig::make(2, 4, 1.0);
    EXPECT_THROW(mimo::joint_cumulant_A(CorrelationPair::identity(4, 2), cfg, 2, 0, 1.0, 1.0), mimo::ConfigError);
}

TEST(JointCumulant, MatchesMonteCarloLogdetVariance) {
    const auto cfg = SystemConfig::make(8, 16, 4.0);
    const auto pair = CorrelationPair::identity(16, 8);
    mimo::ScalarMoments m;
    for (int i = 0; i < 40000; ++i) m.add(mimo::mutual_info_optimal(mimo::sample_channel(pair, cfg, 3, i).H, 4.0));
    EXPECT_NEAR(m.variance() / mimo::joint_cumulant_A(pair, cfg, 0, 0, 1.0, 1.0), 1.0, 0.05);
}

TEST(IidClosedForms, Examples) {
    const auto a = mimo::iid_closed_forms(SystemConfig::make(4, 4, 2.0));
    EXPECT_NEAR(a.g, 1.0, 1e-14);
    const auto b = mimo::iid_closed_forms(SystemConfig::make(4, 8, 4.0));
    EXPECT_NEAR(b.g, 4.701562118716424, 1e-12);
    EXPECT_NEAR(b.v_d, 16.74573066576194, 1e-10);
    EXPECT_NEAR(b.v_d, oracle::v_d(0.5, 4.0), 1e-10);
    EXPECT_NEAR(b.v_od, oracle::v_od(0.5, 4.0), 1e-10 * std::abs(b.v_od));
}

TEST(IidClosedForms, ZeroSnrLimit) {
    const auto c = mimo::iid_closed_forms(SystemConfig::make(4, 8, 1e-12));
    EXPECT_LE(c.g, 1e-11);
    EXPECT_LE(c.v_d, 1e-20);
    EXPECT_LE(std::abs(c.v_od), 1e-20);
}

TEST(SinrCovariance, IidPermutationSymmetryFromFullPath) {
    // A diagonal T that is a multiple of I is flagged scalar; use a nearly
    // identical non-scalar T to force the full path.
    mimo::CMatrix T = mimo::CMatrix::Identity(4, 4);
    T(3, 3) = 1.0 + 1e-13;
    const CorrelationPair pair(mimo::CMatrix::Identity(8, 8), T);
    ASSERT_FALSE(pair.t_is_scalar());
    const auto cfg = SystemConfig::make(4, 8, 4.0);
    const auto s = mimo::sinr_covariance(pair, cfg).sigma;
    const auto fast = mimo::sinr_covariance(CorrelationPair::identity(8, 4), cfg).sigma;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            EXPECT_NEAR(s(i, j), s(j, i), 0.0);
            EXPECT_NEAR(s(i, j), fast(i, j), 1e-6 * std::abs(fast(0, 0)));
        }
}

double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

TEST(SinrCovariance, ConvergesToClosedFormsAtRateOneOverM) {
    for (double rho : {1.0, 4.0, 10.0}) {
        double prev_d = 0.0, prev_od = 0.0;
        for (int M : {8, 16, 32, 64}) {
            const auto cfg = SystemConfig::make(M, 2 * M, rho);
            const auto sigma = mimo::sinr_covariance(CorrelationPair::identity(2 * M, M), cfg).sigma;
            const auto cf = mimo::iid_closed_forms(cfg);
            const double ed = rel_err(M * sigma(0, 0), cf.v_d);
            const double eod = rel_err(double(M) * M * sigma(0, 1), cf.v_od);
            if (M > 8) {
                EXPECT_NEAR(prev_d / ed, 2.0, 0.3) << "rho=" << rho << " M=" << M;
                EXPECT_NEAR(prev_od / eod, 2.0, 0.5) << "rho=" << rho << " M=" << M;
            }
            prev_d = ed;
            prev_od = eod;
        }
        EXPECT_LE(prev_d, 0.02);
        EXPECT_LE(prev_od, 0.05);
    }
}

TEST(SinrCovariance, ScalingLawUnderCorrelation) {
    // Self-similar extension: exponential profiles with the same coefficient.
    double prev = 0.0;
    for (int M : {4, 8, 16, 32}) {
        const auto pair = CorrelationPair::exponential(2 * M, M, 0.5, 0.3);
        const auto s = mimo::sinr_covariance(pair, SystemConfig::make(M, 2 * M, 4.0)).sigma;
        const double scaled = M * s.diagonal().mean();
        if (prev > 0.0) {
            EXPECT_NEAR(scaled / prev, 1.0, 0.25) << M;
        }
        prev = scaled;
    }
}

TEST(SinrCovariance, CorrelatedIsSymmetricPsd) {
    const auto pair = CorrelationPair::exponential(12, 6, 0.7, 0.5);
    const auto s = mimo::sinr_covariance(pair, SystemConfig::make(6, 12, 10.0)).sigma;
    EXPECT_EQ(s, s.transpose());
    Eigen::SelfAdjointEigenSolver<mimo::RMatrix> eig(s);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-6 * s.trace());
    EXPECT_GT(s.diagonal().minCoeff(), 0.0);
}

TEST(SinrCovariance, RichardsonStableAcrossSteps) {
    const auto pair = CorrelationPair::exponential(8, 4, 0.5, 0.5);
    const auto cfg = SystemConfig::make(4, 8, 4.0);
    const auto a = mimo::sinr_covariance(pair, cfg, 2e-3).sigma;
    const auto b = mimo::sinr_covariance(pair, cfg, 1e-3).sigma;
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-5 * a.cwiseAbs().maxCoeff());
}

TEST(SinrCovariance, OversizedStepReported) {
    const auto cfg = SystemConfig::from_db(4, 8, 30.0);
    EXPECT_THROW(mimo::sinr_covariance(CorrelationPair::identity(8, 4), cfg, 0.5), mimo::StepTooLarge);
    EXPECT_THROW(mimo::sinr_covariance(CorrelationPair::identity(8, 4), cfg, -1.0), mimo::ConfigError);
}

TEST(SinrCovariance, AutoStepHandlesHighSnr) {
    const auto cfg = SystemConfig::from_db(8, 16, 30.0);
    const auto pair = CorrelationPair::identity(16, 8);
    const auto s = mimo::sinr_covariance_auto(pair, cfg);
    EXPECT_LT(s.step, 1e-3);
    EXPECT_TRUE(s.sigma.allFinite());
    const auto ref = mimo::sinr_covariance(pair, cfg, 0.5 * s.step).sigma;
    EXPECT_NEAR(s.sigma(0, 0) / ref(0, 0), 1.0, 1e-4);
}

TEST(SinrCovariance, DiagonalMatchesMonteCarlo) {
    const auto cfg = SystemConfig::make(8, 16, 4.0);
    const auto pair = CorrelationPair::identity(16, 8);
    const auto sigma = mimo::sinr_covariance(pair, cfg).sigma;
    const auto mc = mimo::run_trials({cfg, pair, 200000, 11});
    EXPECT_NEAR(mc.sinr_cov.diagonal().mean() / sigma(0, 0), 1.0, 0.1);
}

} // namespace

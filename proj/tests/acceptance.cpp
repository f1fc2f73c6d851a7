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

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "mimo/gaussian_outage.hpp"
#include "mimo/mmse_exact.hpp"
#include "mimo/montecarlo.hpp"
#include "mimo/sinr_covariance.hpp"

namespace {

using mimo::CorrelationPair;
using mimo::SystemConfig;

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

mimo::CMatrix gaussian_matrix(int N, int M, std::mt19937_64& gen) {
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    mimo::CMatrix H(N, M);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < M; ++j) H(i, j) = {nd(gen), nd(gen)};
    return H;
}

void trace_identity() {
    std::mt19937_64 gen(20090101);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int M = std::uniform_int_distribution<int>(1, 8)(gen);
        const int N = std::uniform_int_distribution<int>(M, 16)(gen);
        const double rho = std::pow(10.0, std::uniform_real_distribution<double>(-1.0, 3.0)(gen));
        const auto H = gaussian_matrix(N, M, gen);
        const auto g = mimo::sinr_exact(H, rho);
        for (int k = 0; k < M; ++k)
            worst = std::max(worst, std::abs(mimo::sinr_trace_identity(H, rho, k) - g(k)) / g(k));
    }
    report(1, worst <= 1e-10, fmt("max relative deviation %.3e over 100 draws (limit 1e-10)", worst));
}

void iid_fixed_point() {
    double worst = 0.0;
    for (double beta : {0.25, 0.5, 1.0})
        for (double rho : {1.0, 10.0, 100.0}) {
            const int M = 8;
            const int N = static_cast<int>(std::lround(M / beta));
            const auto cfg = SystemConfig::make(M, N, rho);
            const auto sol = mimo::solve_fixed_point(CorrelationPair::identity(N, M), cfg);
            const double a = rho * (1.0 - beta) - beta;
            const double g = (a + std::sqrt(a * a + 4.0 * rho * beta)) / (2.0 * beta);
            worst = std::max(worst, std::abs(sol.t * std::sqrt(rho) - g));
        }
    report(2, worst <= 1e-10, fmt("max |t sqrt(rho) - g| = %.3e over 9 (beta, rho) points (limit 1e-10)", worst));
}

void covariance_reduction() {
    double worst = 0.0;
    std::string detail;
    for (double rho : {1.0, 4.0, 10.0}) {
        const auto cfg = SystemConfig::make(8, 16, rho);
        const auto sigma = mimo::sinr_covariance(CorrelationPair::identity(16, 8), cfg).sigma;
        const auto cf = mimo::iid_closed_forms(cfg);
        const double ed = std::abs(sigma(0, 0) / (cf.v_d / 8.0) - 1.0);
        const double eod = std::abs(sigma(0, 1) / (cf.v_od / 64.0) - 1.0);
        worst = std::max({worst, ed, eod});
        detail += fmt(" rho=%g: diag %.3e, offdiag %.3e;", rho, ed, eod);
    }
    report(3, worst <= 1e-4,
           "relative gap to v_d/M, v_od/M^2 at M=8 (limit 1e-4):" + detail +
               " the closed forms are leading order in 1/M, so the gap is O(1/M)");
}

struct Fit {
    double mean_err, var_err, ks;
};

Fit gaussian_fit(int M, double snr_db, unsigned workers, std::string* summary_json = nullptr) {
    const int N = 2 * M;
    const auto cfg = SystemConfig::from_db(M, N, snr_db);
    const auto pair = CorrelationPair::identity(N, M);
    const auto a = mimo::analyze(pair, cfg);
    mimo::RunOptions opts;
    opts.workers = workers;
    const auto s = mimo::run_trials({cfg, pair, 100000, 1000 + static_cast<std::uint64_t>(M)}, opts);
    if (summary_json) *summary_json = mimo::summary_to_json(s).dump();
    return {std::abs(s.mi_mean - a.mmse_taylor.c1) / a.mmse_taylor.c1,
            std::abs(s.mi_var - a.mmse_taylor.c2) / a.mmse_taylor.c2, mimo::ks_distance(s, a.mmse_taylor)};
}

void gaussian_regime() {
    bool ok = true;
    std::string detail;
    for (double snr : {3.0, 30.0}) {
        const bool low = snr < 10.0;
        const double lm = low ? 0.02 : 0.05, lv = low ? 0.10 : 0.20, lk = low ? 0.03 : 0.06;
        for (int M : {5, 10}) {
            const Fit f = gaussian_fit(M, snr, 1);
            ok = ok && f.mean_err <= lm && f.var_err <= lv && f.ks <= lk;
            detail += fmt(" [M=%d %gdB mean %.4f/%.2f var %.4f/%.2f ks %.4f/%.2f]", M, snr, f.mean_err, lm, f.var_err,
                          lv, f.ks, lk);
        }
    }
    report(4, ok, "Gaussian fit, 1e5 trials:" + detail);
}

void antenna_outage() {
    const double rate = mimo::bits_to_nats(3.0);
    auto pout = [&](int M, int N) {
        const auto cfg = SystemConfig::from_db(M, N, 15.0);
        const auto s = mimo::run_trials({cfg, CorrelationPair::identity(N, M), 1000000, 777});
        return std::pair{mimo::empirical_outage(s, rate, mimo::Receiver::mmse).probability,
                         mimo::empirical_outage(s, rate, mimo::Receiver::optimal).probability};
    };
    const auto [mmse22, opt22] = pout(2, 2);
    const double mmse24 = pout(2, 4).first;
    const double mmse33 = pout(3, 3).first;
    const bool ok = opt22 <= 1e-3 && mmse22 > 1e-3 && mmse24 <= 1e-3 && mmse33 <= 1e-3;
    report(5, ok,
           fmt("R=3 bpcu, 15 dB, 1e6 trials: opt 2x2 %.3e, mmse 2x2 %.3e, mmse 2x4 %.3e, mmse 3x3 %.3e (target 1e-3)",
               opt22, mmse22, mmse24, mmse33));
}

void large_system() {
    // Shared 1e6-trial runs at beta = 0.5, rho = 4 for criteria 6-8.
    double err[3], skew[3];
    double var16 = 0.0, model16 = 0.0;
    const int Ns[3] = {8, 16, 32};
    for (int i = 0; i < 3; ++i) {
        const int N = Ns[i];
        const int M = N / 2;
        const auto cfg = SystemConfig::make(M, N, 4.0);
        const auto pair = CorrelationPair::identity(N, M);
        const auto mean = mimo::mean_sinr_asymptotic(pair, cfg);
        const auto s = mimo::run_trials({cfg, pair, 1000000, 4242 + static_cast<std::uint64_t>(N)});
        err[i] = std::abs(s.sinr_mean.mean() - mean.gamma_bar(0) - mean.delta_gamma(0));
        skew[i] = std::abs(s.mi_skewness);
        if (M == 16) {
            var16 = s.opt_var;
            model16 = mimo::joint_cumulant_A(pair, cfg, 0, 0, 1.0, 1.0);
        }
    }
    const double r1 = err[0] / err[1], r2 = err[1] / err[2];
    report(6, r1 >= 2.5 && r2 >= 2.5,
           fmt("|E[gamma] - gamma_bar - delta| at N=8,16,32: %.3e, %.3e, %.3e; ratios %.2f, %.2f (limit 2.5)", err[0],
               err[1], err[2], r1, r2));
    report(7, skew[2] < skew[0],
           fmt("|skewness of I_N|: N=8 %.4f, N=16 %.4f, N=32 %.4f", skew[0], skew[1], skew[2]));
    const double rel = std::abs(var16 / model16 - 1.0);
    report(8, rel <= 0.10,
           fmt("M=16: MC var of log det %.5f vs %.5f, relative %.4f (limit 0.10)", var16, model16, rel));
}

void determinism() {
    bool ok = true;
    for (int M : {5, 10})
        for (double snr : {3.0, 30.0}) {
            std::string a, b;
            gaussian_fit(M, snr, 1, &a);
            gaussian_fit(M, snr, 8, &b);
            ok = ok && a == b;
        }
    report(9, ok, "criterion-4 summaries with 1 and 8 workers are byte-identical");
}

} // namespace

int main() {
    const std::pair<int, void (*)()> criteria[] = {{1, trace_identity}, {2, iid_fixed_point}, {3, covariance_reduction},
                                                   {4, gaussian_regime}, {5, antenna_outage}, {0, large_system},
                                                   {9, determinism}};
    for (const auto& [id, fn] : criteria) {
        try {
            fn();
        } catch (const std::exception& e) {
            if (id == 0)
                for (int c : {6, 7, 8}) report(c, false, std::string("error: ") + e.what());
            else
                report(id, false, std::string("error: ") + e.what());
        }
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}

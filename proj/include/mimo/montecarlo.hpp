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

#ifndef MIMO_MONTECARLO_HPP
#define MIMO_MONTECARLO_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <new>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "mimo/channel_model.hpp"
#include "mimo/errors.hpp"
#include "mimo/gaussian_outage.hpp"
#include "mimo/mmse_exact.hpp"

namespace mimo {

struct TrialBatchSpec {
    SystemConfig config;
    CorrelationPair pair;
    std::size_t n_trials = 1;
    std::uint64_t master_seed = 0;
};

struct RunOptions {
    unsigned workers = 1;                       // 0 = hardware concurrency
    std::size_t retain_limit = 10'000'000;      // beyond this, keep a quantile sketch
    std::size_t sketch_quantiles = 4096;
};

// Worker count from MIMO_ASYMPT_THREADS (0 or unset = hardware concurrency).
inline unsigned default_workers() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MIMO_ASYMPT_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return hw;
}

// Running central moments up to order 3 (Welford), mergeable (Chan et al.).
struct ScalarMoments {
    double n = 0.0;
    double mean = 0.0;
    double m2 = 0.0;
    double m3 = 0.0;

    void add(double x) {
        const double n1 = n;
        n += 1.0;
        const double delta = x - mean;
        const double delta_n = delta / n;
        const double term1 = delta * delta_n * n1;
        mean += delta_n;
        m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * m2;
        m2 += term1;
    }

    void merge(const ScalarMoments& b) {
        if (b.n == 0.0) return;
        if (n == 0.0) {
            *this = b;
            return;
        }
        const double na = n;
        const double nb = b.n;
        const double nt = na + nb;
        const double delta = b.mean - mean;
        const double m2_new = m2 + b.m2 + delta * delta * na * nb / nt;
        m3 = m3 + b.m3 + delta * delta * delta * na * nb * (na - nb) / (nt * nt) +
             3.0 * delta * (na * b.m2 - nb * m2) / nt;
        m2 = m2_new;
        mean += delta * nb / nt;
        n = nt;
    }

    double variance() const { return n > 1.0 ? m2 / (n - 1.0) : 0.0; }
    double skewness() const { return m2 > 0.0 ? std::sqrt(n) * m3 / std::pow(m2, 1.5) : 0.0; }
};

struct VectorMoments {
    double n = 0.0;
    RVector mean;
    RMatrix comoment;
    RVector m3;

    explicit VectorMoments(Eigen::Index dim = 0)
        : mean(RVector::Zero(dim)), comoment(RMatrix::Zero(dim, dim)), m3(RVector::Zero(dim)) {}

    void add(const RVector& x) {
        const double n1 = n;
        n += 1.0;
        const RVector delta = x - mean;
        const RVector delta_n = delta / n;
        for (Eigen::Index i = 0; i < delta.size(); ++i) {
            const double term1 = delta(i) * delta_n(i) * n1;
            m3(i) += term1 * delta_n(i) * (n - 2.0) - 3.0 * delta_n(i) * comoment(i, i);
        }
        mean += delta_n;
        comoment.noalias() += (n1 / n) * delta * delta.transpose();
    }

    void merge(const VectorMoments& b) {
        if (b.n == 0.0) return;
        if (n == 0.0) {
            *this = b;
            return;
        }
        const double na = n;
        const double nb = b.n;
        const double nt = na + nb;
        const RVector delta = b.mean - mean;
        for (Eigen::Index i = 0; i < delta.size(); ++i) {
            const double d = delta(i);
            m3(i) += b.m3(i) + d * d * d * na * nb * (na - nb) / (nt * nt) +
                     3.0 * d * (na * b.comoment(i, i) - nb * comoment(i, i)) / nt;
        }
        comoment += b.comoment + (na * nb / nt) * delta * delta.transpose();
        mean += delta * (nb / nt);
        n = nt;
    }

    RMatrix covariance() const {
        if (!(n > 1.0)) return RMatrix::Zero(mean.size(), mean.size());
        // Rank-one updates round differently above and below the diagonal.
        return (0.5 / (n - 1.0)) * (comoment + comoment.transpose());
    }
    RVector skewness() const {
        RVector out = RVector::Zero(mean.size());
        for (Eigen::Index i = 0; i < mean.size(); ++i)
            if (comoment(i, i) > 0.0) out(i) = std::sqrt(n) * m3(i) / std::pow(comoment(i, i), 1.5);
        return out;
    }
};

struct EmpiricalSummary {
    // Sorted ascending. When `sketched`, these hold the quantiles at
    // probabilities j / (size - 1) instead of every sample.
    std::vector<double> mi_samples;
    std::vector<double> opt_samples;
    bool sketched = false;

    RVector sinr_mean;
    RMatrix sinr_cov;
    RVector sinr_skewness;

    double mi_mean = 0.0;
    double mi_var = 0.0;
    double mi_skewness = 0.0;
    double mi_var_stderr = 0.0; // jackknife over trial blocks
    double opt_mean = 0.0;
    double opt_var = 0.0;
    double opt_skewness = 0.0;
    double opt_var_stderr = 0.0;

    std::size_t n_trials = 0;
    std::uint64_t master_seed = 0;
    int M = 0;
    int N = 0;
    double rho = 0.0;
    double trace_r = 0.0;
    double trace_t = 0.0;
};

// Per-trial values in trial-index order (not part of the summary).
struct TrialSamples {
    std::vector<double> mi_nats;
    std::vector<double> opt_nats;
};

namespace detail {

inline constexpr std::size_t kBlockTrials = 1024;
inline constexpr std::size_t kJackknifeGroups = 32;
inline constexpr std::size_t kHistogramBins = 1u << 16;

struct BlockStats {
    ScalarMoments mi;
    ScalarMoments opt;
    VectorMoments sinr;
    double mi_min = std::numeric_limits<double>::infinity();
    double mi_max = -std::numeric_limits<double>::infinity();
    double opt_min = std::numeric_limits<double>::infinity();
    double opt_max = -std::numeric_limits<double>::infinity();

    void merge(const BlockStats& b) {
        mi.merge(b.mi);
        opt.merge(b.opt);
        sinr.merge(b.sinr);
        mi_min = std::min(mi_min, b.mi_min);
        mi_max = std::max(mi_max, b.mi_max);
        opt_min = std::min(opt_min, b.opt_min);
        opt_max = std::max(opt_max, b.opt_max);
    }
};

// Runs `body(block_index, worker_state)` over all blocks on `workers` threads.
// Any exception stops the batch and is rethrown as SimulationError.
template <class MakeState, class Body>
void parallel_blocks(std::size_t n_blocks, unsigned workers, std::atomic<std::size_t>& completed_trials,
                     MakeState make_state, Body body) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto run = [&] {
        try {
            auto state = make_state();
            for (;;) {
                if (abort.load(std::memory_order_relaxed)) return;
                const std::size_t b = next.fetch_add(1);
                if (b >= n_blocks) return;
                body(b, state);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            abort = true;
        }
    };

    const unsigned n_threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n_blocks));
    if (n_threads <= 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned w = 0; w < n_threads; ++w) pool.emplace_back(run);
        for (auto& th : pool) th.join();
    }
    if (failure) {
        try {
            std::rethrow_exception(failure);
        } catch (const std::bad_alloc&) {
            throw SimulationError("out of memory during Monte Carlo batch", completed_trials.load());
        } catch (const std::exception& e) {
            throw SimulationError(std::string("Monte Carlo batch failed: ") + e.what(), completed_trials.load());
        }
    }
}

struct TrialState {
    CMatrix H;
    ReceiverWorkspace ws;
    ReceiverOutputs out;
};

template <class Sink>
void run_block(const TrialBatchSpec& spec, std::size_t block, TrialState& st, Sink sink) {
    const std::size_t first = block * kBlockTrials;
    const std::size_t last = std::min(spec.n_trials, first + kBlockTrials);
    for (std::size_t i = first; i < last; ++i) {
        sample_channel_into(spec.pair, spec.master_seed, i, st.H);
        evaluate_receivers(st.H, spec.config.rho(), st.ws, st.out);
        sink(i, st.out);
    }
}

inline double jackknife_variance_stderr(const std::vector<ScalarMoments>& groups) {
    const std::size_t G = groups.size();
    if (G < 2) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> loo(G);
    for (std::size_t g = 0; g < G; ++g) {
        ScalarMoments acc;
        for (std::size_t h = 0; h < G; ++h)
            if (h != g) acc.merge(groups[h]);
        loo[g] = acc.variance();
    }
    double mean = 0.0;
    for (double v : loo) mean += v;
    mean /= static_cast<double>(G);
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    return std::sqrt(ss * static_cast<double>(G - 1) / static_cast<double>(G));
}

inline std::vector<double> quantiles_from_histogram(const std::vector<std::uint64_t>& counts, double lo, double hi,
                                                    std::size_t n_quantiles) {
    std::vector<double> q(n_quantiles + 1);
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    const double width = (hi - lo) / static_cast<double>(counts.size());
    std::size_t bin = 0;
    double cum = 0.0;
    for (std::size_t j = 0; j <= n_quantiles; ++j) {
        const double target = total * static_cast<double>(j) / static_cast<double>(n_quantiles);
        while (bin + 1 < counts.size() && cum + static_cast<double>(counts[bin]) < target) {
            cum += static_cast<double>(counts[bin]);
            ++bin;
        }
        const double c = static_cast<double>(counts[bin]);
        const double frac = c > 0.0 ? std::clamp((target - cum) / c, 0.0, 1.0) : 0.0;
        q[j] = lo + width * (static_cast<double>(bin) + frac);
    }
    q.front() = lo;
    q.back() = hi;
    return q;
}

} // namespace detail

// Draws n_trials channels, each from stream (master_seed, trial index), and
// aggregates exact MMSE SINRs, I_N and I_N^opt. The result does not depend on
// the worker count: blocks of trials are accumulated in trial order and merged
// in block order.
inline EmpiricalSummary run_trials(const TrialBatchSpec& spec, const RunOptions& options = {},
                                   TrialSamples* raw = nullptr) {
    spec.pair.check_matches(spec.config);
    if (spec.n_trials < 1) throw ConfigError("n_trials must be >= 1");
    const bool retain = spec.n_trials <= options.retain_limit;
    if (raw && !retain) throw ConfigError("per-trial samples are only available up to the retention limit");
    const unsigned workers = options.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.workers;

    const std::size_t n = spec.n_trials;
    const std::size_t n_blocks = (n + detail::kBlockTrials - 1) / detail::kBlockTrials;
    const int M = spec.config.M();

    std::vector<detail::BlockStats> blocks;
    std::vector<double> mi;
    std::vector<double> opt;
    try {
        blocks.assign(n_blocks, detail::BlockStats{{}, {}, VectorMoments(M)});
        if (retain) {
            mi.resize(n);
            opt.resize(n);
        }
    } catch (const std::bad_alloc&) {
        throw SimulationError("cannot allocate Monte Carlo buffers", 0);
    }

    std::atomic<std::size_t> completed{0};
    detail::parallel_blocks(n_blocks, workers, completed, [] { return detail::TrialState{}; },
                            [&](std::size_t b, detail::TrialState& st) {
                                detail::BlockStats& bs = blocks[b];
                                detail::run_block(spec, b, st, [&](std::size_t i, const ReceiverOutputs& o) {
                                    bs.mi.add(o.mi_mmse);
                                    bs.opt.add(o.mi_optimal);
                                    bs.sinr.add(o.gammas);
                                    bs.mi_min = std::min(bs.mi_min, o.mi_mmse);
                                    bs.mi_max = std::max(bs.mi_max, o.mi_mmse);
                                    bs.opt_min = std::min(bs.opt_min, o.mi_optimal);
                                    bs.opt_max = std::max(bs.opt_max, o.mi_optimal);
                                    if (retain) {
                                        mi[i] = o.mi_mmse;
                                        opt[i] = o.mi_optimal;
                                    }
                                });
                                completed += std::min(n, (b + 1) * detail::kBlockTrials) - b * detail::kBlockTrials;
                            });

    detail::BlockStats total{{}, {}, VectorMoments(M)};
    const std::size_t n_groups = std::min(detail::kJackknifeGroups, n_blocks);
    std::vector<ScalarMoments> mi_groups(n_groups);
    std::vector<ScalarMoments> opt_groups(n_groups);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        total.merge(blocks[b]);
        const std::size_t g = b * n_groups / n_blocks;
        mi_groups[g].merge(blocks[b].mi);
        opt_groups[g].merge(blocks[b].opt);
    }

    EmpiricalSummary s;
    s.n_trials = n;
    s.master_seed = spec.master_seed;
    s.M = M;
    s.N = spec.config.N();
    s.rho = spec.config.rho();
    s.trace_r = spec.pair.trace_r();
    s.trace_t = spec.pair.trace_t();
    s.mi_mean = total.mi.mean;
    s.mi_var = total.mi.variance();
    s.mi_skewness = total.mi.skewness();
    s.opt_mean = total.opt.mean;
    s.opt_var = total.opt.variance();
    s.opt_skewness = total.opt.skewness();
    s.mi_var_stderr = detail::jackknife_variance_stderr(mi_groups);
    s.opt_var_stderr = detail::jackknife_variance_stderr(opt_groups);
    s.sinr_mean = total.sinr.mean;
    s.sinr_cov = total.sinr.covariance();
    s.sinr_skewness = total.sinr.skewness();

    if (retain) {
        if (raw) {
            raw->mi_nats = mi;
            raw->opt_nats = opt;
        }
        std::sort(mi.begin(), mi.end());
        std::sort(opt.begin(), opt.end());
        s.mi_samples = std::move(mi);
        s.opt_samples = std::move(opt);
        return s;
    }

    // Second pass over the same trial streams: histograms between the observed
    // extremes, reduced to a fixed quantile table. Integer counts make the
    // merge order-independent.
    const std::size_t bins = detail::kHistogramBins;
    auto bin_of = [bins](double x, double lo, double hi) {
        if (!(hi > lo)) return std::size_t{0};
        const auto b = static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(bins));
        return std::min(b, bins - 1);
    };
    std::vector<std::uint64_t> mi_hist(bins, 0);
    std::vector<std::uint64_t> opt_hist(bins, 0);
    std::mutex hist_mutex;
    completed = 0;
    struct HistState {
        detail::TrialState trial;
        std::vector<std::uint64_t> mi;
        std::vector<std::uint64_t> opt;
    };
    detail::parallel_blocks(
        n_blocks, workers, completed,
        [&] { return HistState{{}, std::vector<std::uint64_t>(bins, 0), std::vector<std::uint64_t>(bins, 0)}; },
        [&](std::size_t b, HistState& st) {
            detail::run_block(spec, b, st.trial, [&](std::size_t, const ReceiverOutputs& o) {
                ++st.mi[bin_of(o.mi_mmse, total.mi_min, total.mi_max)];
                ++st.opt[bin_of(o.mi_optimal, total.opt_min, total.opt_max)];
            });
            std::lock_guard lock(hist_mutex);
            for (std::size_t i = 0; i < bins; ++i) {
                mi_hist[i] += st.mi[i];
                opt_hist[i] += st.opt[i];
            }
            std::fill(st.mi.begin(), st.mi.end(), 0);
            std::fill(st.opt.begin(), st.opt.end(), 0);
        });
    s.sketched = true;
    s.mi_samples = detail::quantiles_from_histogram(mi_hist, total.mi_min, total.mi_max, options.sketch_quantiles);
    s.opt_samples = detail::quantiles_from_histogram(opt_hist, total.opt_min, total.opt_max, options.sketch_quantiles);
    return s;
}

namespace detail {

inline const std::vector<double>& samples_for(const EmpiricalSummary& s, Receiver receiver) {
    return receiver == Receiver::mmse ? s.mi_samples : s.opt_samples;
}

} // namespace detail

// Empirical CDF at x.
inline double empirical_cdf(const EmpiricalSummary& s, double x, Receiver receiver = Receiver::mmse) {
    const auto& v = detail::samples_for(s, receiver);
    if (v.empty()) throw ConfigError("empty summary");
    if (!s.sketched)
        return static_cast<double>(std::upper_bound(v.begin(), v.end(), x) - v.begin()) /
               static_cast<double>(v.size());
    if (x < v.front()) return 0.0;
    if (x >= v.back()) return 1.0;
    const auto it = std::upper_bound(v.begin(), v.end(), x);
    const auto j = static_cast<std::size_t>(it - v.begin()); // v[j-1] <= x < v[j]
    const double span = v[j] - v[j - 1];
    const double frac = span > 0.0 ? (x - v[j - 1]) / span : 1.0;
    return (static_cast<double>(j - 1) + frac) / static_cast<double>(v.size() - 1);
}

struct OutageEstimate {
    double probability = 0.0;
    double ci_halfwidth = 0.0; // Wilson 95%
};

inline OutageEstimate empirical_outage(const EmpiricalSummary& s, double rate, Receiver receiver = Receiver::mmse) {
    const double p = empirical_cdf(s, rate, receiver);
    const double n = static_cast<double>(s.n_trials);
    constexpr double z = 1.959963984540054;
    const double z2 = z * z;
    const double half = z / (1.0 + z2 / n) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    return {p, half};
}

// sup_x |ECDF(x) - Phi((x - c1) / sqrt(c2))| over the sample points.
inline double ks_distance(const EmpiricalSummary& s, const MutualInfoGaussian& model,
                          std::optional<Receiver> receiver = std::nullopt) {
    if (!(model.c2 > 0.0)) throw ConfigError("ks_distance needs a positive model variance");
    const auto& v = detail::samples_for(s, receiver.value_or(model.receiver));
    if (v.empty()) throw ConfigError("empty summary");
    const double sd = std::sqrt(model.c2);
    double d = 0.0;
    const auto n = static_cast<double>(v.size());
    if (s.sketched) {
        for (std::size_t j = 0; j < v.size(); ++j) {
            const double p = static_cast<double>(j) / (n - 1.0);
            d = std::max(d, std::abs(p - normal_cdf((v[j] - model.c1) / sd)));
        }
        return d;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double F = normal_cdf((v[i] - model.c1) / sd);
        d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
    }
    return d;
}

// ---- export ----

inline std::string format_g12(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline nlohmann::json to_json(const RVector& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline nlohmann::json to_json(const RMatrix& m) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(RVector(m.row(i).transpose())));
    return out;
}

// Scalar cumulants and metadata; the sample vectors are exported separately.
inline nlohmann::json summary_to_json(const EmpiricalSummary& s) {
    nlohmann::json j;
    j["units"] = "nats";
    j["M"] = s.M;
    j["N"] = s.N;
    j["rho"] = s.rho;
    j["trace_R"] = s.trace_r;
    j["trace_T"] = s.trace_t;
    j["n_trials"] = s.n_trials;
    j["master_seed"] = s.master_seed;
    j["sketched"] = s.sketched;
    j["mi_mean"] = s.mi_mean;
    j["mi_var"] = s.mi_var;
    j["mi_var_stderr"] = s.mi_var_stderr;
    j["mi_skewness"] = s.mi_skewness;
    j["opt_mean"] = s.opt_mean;
    j["opt_var"] = s.opt_var;
    j["opt_var_stderr"] = s.opt_var_stderr;
    j["opt_skewness"] = s.opt_skewness;
    j["sinr_mean"] = to_json(s.sinr_mean);
    j["sinr_cov"] = to_json(s.sinr_cov);
    j["sinr_skewness"] = to_json(s.sinr_skewness);
    if (!s.mi_samples.empty()) {
        j["mi_min"] = s.mi_samples.front();
        j["mi_max"] = s.mi_samples.back();
        j["opt_min"] = s.opt_samples.front();
        j["opt_max"] = s.opt_samples.back();
    }
    return j;
}

inline void write_samples_csv(const std::filesystem::path& path, const TrialSamples& raw) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "mi_nats,opt_nats\n";
    for (std::size_t i = 0; i < raw.mi_nats.size(); ++i)
        out << format_g12(raw.mi_nats[i]) << ',' << format_g12(raw.opt_nats[i]) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace mimo

#endif // MIMO_MONTECARLO_HPP

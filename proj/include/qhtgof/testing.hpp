#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qhtgof/estimator.hpp"
#include "qhtgof/parallel.hpp"
#include "qhtgof/rng.hpp"
#include "qhtgof/simulator.hpp"

namespace qht {

// Substream tags keeping threshold calibration disjoint from the runs it is
// later applied to.
inline constexpr std::uint64_t kCalibrationStream = 0x63616c6962ULL;
inline constexpr std::uint64_t kEvaluationStream = 0x6576616cULL;

enum class Decision { accept_h0, accept_h1 };

// |M_n| > nu rejects the null.
inline Decision decide(double mn, double nu) {
    if (!(nu > 0.0)) throw std::invalid_argument("decide: threshold must be positive");
    return std::abs(mn) > nu ? Decision::accept_h1 : Decision::accept_h0;
}

// One test instance as the CLI reports it.
struct TestConfig {
    StateSpec tau;
    double eta = 1.0;
    int bandwidth = 1;
    std::size_t n = 0;
    double alpha = 0.05;
    double nu = 0.0;  // calibrated threshold
};

// Independent replicates of M_n under rho. Replicate r simulates its dataset
// from the substream (seed, stream_tag, r), so any parallel schedule produces
// exactly the serial values, in replicate order.
inline std::vector<double> replicate_mn(const StateSpec& rho, const EstimatorConfig& cfg,
                                        std::size_t n, int runs, std::uint64_t seed,
                                        std::uint64_t stream_tag, int jobs = 0) {
    if (runs < 1) throw std::invalid_argument("replicate_mn: runs must be >= 1");
    std::vector<double> values(static_cast<std::size_t>(runs));
    parallel_for(static_cast<std::size_t>(runs), jobs, [&](std::size_t r) {
        check_interrupt();
        const std::uint64_t ds_seed = derive_stream(seed, stream_tag, r);
        const QhtDataset ds = generate_dataset(rho, n, cfg.eta, ds_seed);
        values[r] = compute_mn(ds, cfg);
    });
    return values;
}

inline double median_of(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median_of: empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return (v.size() % 2) ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Quantile step shared by calibrate_threshold and the CLI (which reuses one
// batch of null replicates for several alpha levels): the order statistic at
// the 1-based index ceil((1 - alpha) runs) of |M_n| (conservative for
// discreteness).
inline double threshold_from_null_values(std::vector<double> values, double alpha) {
    if (values.empty()) throw std::invalid_argument("threshold_from_null_values: empty sample");
    for (auto& v : values) v = std::abs(v);
    std::sort(values.begin(), values.end());
    const int runs = static_cast<int>(values.size());
    int idx = static_cast<int>(std::ceil((1.0 - alpha) * runs - 1e-9));  // 1-based
    idx = std::clamp(idx, 1, runs);
    return values[static_cast<std::size_t>(idx) - 1];
}

// Empirical (1 - alpha) quantile of |M_n| under rho = tau over `runs` fresh
// null replicates.
inline double calibrate_threshold(const StateSpec& tau_state, const EstimatorConfig& cfg,
                                  std::size_t n, double alpha, int runs, std::uint64_t seed,
                                  int jobs = 0) {
    if (runs < 100) throw std::invalid_argument("calibrate_threshold: runs must be >= 100");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("calibrate_threshold: alpha must lie in (0, 1)");
    if (!(alpha * runs >= 1.0))
        throw std::invalid_argument("calibrate_threshold: alpha * runs must be >= 1");
    auto values = replicate_mn(tau_state, cfg, n, runs, seed, kCalibrationStream, jobs);
    return threshold_from_null_values(std::move(values), alpha);
}

// Fraction of replicates rejected at threshold nu.
inline double rejection_fraction(const std::vector<double>& values, double nu) {
    if (values.empty()) throw std::invalid_argument("rejection_fraction: empty sample");
    std::size_t rejections = 0;
    for (double v : values)
        if (decide(v, nu) == Decision::accept_h1) ++rejections;
    return static_cast<double>(rejections) / static_cast<double>(values.size());
}

// Empirical first-type error: rejection rate over fresh runs under rho = tau,
// drawn from a stream disjoint from calibration.
inline double estimate_level(const StateSpec& tau_state, const EstimatorConfig& cfg,
                             std::size_t n, double nu, int runs, std::uint64_t seed,
                             int jobs = 0) {
    if (runs < 100) throw std::invalid_argument("estimate_level: runs must be >= 100");
    return rejection_fraction(replicate_mn(tau_state, cfg, n, runs, seed, kEvaluationStream, jobs),
                              nu);
}

// Empirical power: rejection rate over runs under rho (equals the level when
// rho is the null state).
inline double estimate_power(const StateSpec& rho, const EstimatorConfig& cfg, std::size_t n,
                             double nu, int runs, std::uint64_t seed, int jobs = 0) {
    if (runs < 100) throw std::invalid_argument("estimate_power: runs must be >= 100");
    return rejection_fraction(replicate_mn(rho, cfg, n, runs, seed, kEvaluationStream, jobs), nu);
}

// Theory-side threshold C* t_n^2, for studying the gap between the rate
// formulas and the calibrated nu.
inline double theoretical_threshold(double rate_phi_sq_value, double c_star) {
    if (!(rate_phi_sq_value > 0.0) || !(c_star > 0.0))
        throw std::invalid_argument("theoretical_threshold: inputs must be positive");
    return c_star * rate_phi_sq_value;
}

// Replicate summary; median and mse are recomputable from values. mse is
// taken against a caller-supplied ground-truth distance.
struct MonteCarloReport {
    std::vector<double> values;
    int runs = 0;
    std::uint64_t seed = 0;
    double median = 0.0;
    double mse = 0.0;
};

inline MonteCarloReport summarize_replicates(std::vector<double> values, double truth,
                                             std::uint64_t seed) {
    MonteCarloReport rep;
    rep.runs = static_cast<int>(values.size());
    rep.seed = seed;
    rep.median = median_of(values);
    double acc = 0.0;
    for (double v : values) acc += (v - truth) * (v - truth);
    rep.mse = acc / static_cast<double>(values.size());
    rep.values = std::move(values);
    return rep;
}

}  // namespace qht

#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <stdexcept>
#include <vector>

#include "qhtgof/pattern.hpp"
#include "qhtgof/simulator.hpp"
#include "qhtgof/states.hpp"

namespace qht {

// Everything compute_mn needs: the truncation bandwidth N, the efficiency,
// the null matrix tau (dim >= N) and a pattern table built at the same eta
// covering all pairs below N.
struct EstimatorConfig {
    int bandwidth;
    double eta;
    DensityMatrix tau;
    std::shared_ptr<const PatternTable> table;

    EstimatorConfig(int bandwidth_, double eta_, DensityMatrix tau_,
                    std::shared_ptr<const PatternTable> table_)
        : bandwidth(bandwidth_), eta(eta_), tau(std::move(tau_)), table(std::move(table_)) {
        if (bandwidth < 1) throw std::invalid_argument("EstimatorConfig: bandwidth must be >= 1");
        if (!table) throw std::invalid_argument("EstimatorConfig: missing pattern table");
        if (table->eta() != eta)
            throw std::invalid_argument("EstimatorConfig: table eta does not match");
        if (table->bandwidth() < bandwidth)
            throw std::invalid_argument("EstimatorConfig: table bandwidth too small");
        if (tau.dim() < bandwidth)
            throw std::invalid_argument("EstimatorConfig: tau dim must be >= bandwidth");
    }
};

// U-statistic estimate of the truncated squared L2 distance to tau:
//   M_n = 1/(n(n-1)) sum_{j,k<N} sum_{l != m} a_{jk,l} conj(a_{jk,m}),
//   a_{jk,l} = f^eta_{j,k}(Y_l / sqrt(eta)) e^{i(j-k) Phi_l} - tau_{j,k}.
// Uses the factorization sum_{l != m} a_l conj(a_m) = |sum_l a_l|^2 - sum_l
// |a_l|^2 together with the (j,k) <-> (k,j) conjugate symmetry, so the cost
// is O(n N^2) time with O(N^2) accumulator state. The result is real by
// construction.
inline double compute_mn(const QhtDataset& ds, const EstimatorConfig& cfg) {
    const std::size_t n = ds.size();
    if (n < 2) throw std::invalid_argument("compute_mn: need n >= 2");
    if (ds.eta != cfg.eta) throw std::invalid_argument("compute_mn: dataset eta does not match");
    const int N = cfg.bandwidth;
    const std::size_t npairs = PatternTable::pair_index(N - 1, N - 1) + 1;

    std::vector<std::complex<double>> tau_low(npairs);
    {
        std::size_t p = 0;
        for (int j = 0; j < N; ++j)
            for (int k = 0; k <= j; ++k, ++p) tau_low[p] = cfg.tau.at(j, k);
    }

    std::vector<std::complex<double>> sum_a(npairs, {0.0, 0.0});
    std::vector<double> sum_sq(npairs, 0.0);
    std::vector<double> f(cfg.table->num_pairs());
    std::vector<std::complex<double>> phase(static_cast<std::size_t>(N));
    const double inv_sqrt_eta = 1.0 / std::sqrt(cfg.eta);

    for (const auto& rec : ds.records) {
        cfg.table->eval_all_pairs(rec.y * inv_sqrt_eta, f.data());
        phase[0] = {1.0, 0.0};
        const std::complex<double> rot{std::cos(rec.phi), std::sin(rec.phi)};
        for (int d = 1; d < N; ++d) phase[d] = phase[d - 1] * rot;
        std::size_t p = 0;
        for (int j = 0; j < N; ++j)
            for (int k = 0; k <= j; ++k, ++p) {
                const std::complex<double> a = f[p] * phase[j - k] - tau_low[p];
                sum_a[p] += a;
                sum_sq[p] += std::norm(a);
            }
    }

    double total = 0.0;
    std::size_t p = 0;
    for (int j = 0; j < N; ++j)
        for (int k = 0; k <= j; ++k, ++p) {
            const double w = (j == k) ? 1.0 : 2.0;
            total += w * (std::norm(sum_a[p]) - sum_sq[p]);
        }
    return total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

// Exact mean of M_n under rho: sum_{j,k<N} |rho_{j,k} - tau_{j,k}|^2
// (zero when rho = tau).
inline double expected_mn(const DensityMatrix& rho, const DensityMatrix& tau, int bandwidth) {
    if (bandwidth < 1) throw std::invalid_argument("expected_mn: bandwidth must be >= 1");
    if (rho.dim() < bandwidth || tau.dim() < bandwidth)
        throw std::invalid_argument("expected_mn: matrix dims must be >= bandwidth");
    double total = 0.0;
    for (int j = 0; j < bandwidth; ++j)
        for (int k = 0; k < bandwidth; ++k) total += std::norm(rho.at(j, k) - tau.at(j, k));
    return total;
}

// ---------------------------------------------------------------------------
// Theoretical bandwidths and testing rates
// ---------------------------------------------------------------------------

// Derived parameter bundle; gamma = (1-eta)/(4 eta) vanishes iff eta = 1.
struct RateParams {
    double n, B, r, eta, gamma;
    RateParams(double n_, double B_, double r_, double eta_)
        : n(n_), B(B_), r(r_), eta(eta_), gamma((1.0 - eta_) / (4.0 * eta_)) {}
};

namespace detail {
inline void require_log_log(double n, const char* who) {
    if (!(n > std::exp(1.0)))
        throw std::invalid_argument(std::string(who) + ": requires n > e (log log n positive)");
}
}  // namespace detail

// Ideal-detection bandwidth: (log n/(4B) + (log log n)^2/(4B))^{2/r}.
// Real-valued; callers round up for a truncation order.
inline double bandwidth_n1(double n, double B, double r) {
    detail::require_log_log(n, "bandwidth_n1");
    if (!(B > 0.0)) throw std::invalid_argument("bandwidth_n1: requires B > 0");
    if (!(r > 0.0 && r <= 2.0)) throw std::invalid_argument("bandwidth_n1: requires r in (0, 2]");
    const double ln = std::log(n);
    const double lln = std::log(ln);
    return std::pow((ln + lln * lln) / (4.0 * B), 2.0 / r);
}

// Noisy r = 2 bandwidth: log n/(4(4 gamma + B)) (1 + 8 log log n/(3 log n)).
// gamma = 0 is accepted (the formula's ideal limit).
inline double bandwidth_n2(double n, double B, double gamma) {
    detail::require_log_log(n, "bandwidth_n2");
    if (!(B > 0.0)) throw std::invalid_argument("bandwidth_n2: requires B > 0");
    if (!(gamma >= 0.0)) throw std::invalid_argument("bandwidth_n2: requires gamma >= 0");
    const double ln = std::log(n);
    const double lln = std::log(ln);
    return ln / (4.0 * (4.0 * gamma + B)) * (1.0 + 8.0 * lln / (3.0 * ln));
}

// Unique positive root of 16 gamma N + 4 B N^{r/2} = log n, by bisection to
// 1e-12 relative width. The left side is strictly increasing in N, so the
// root always exists and is unique. r = 2 is accepted as the boundary case
// (closed form log n/(16 gamma + 4B)).
inline double bandwidth_n3(double n, double B, double r, double gamma) {
    if (!(n >= 2.0)) throw std::invalid_argument("bandwidth_n3: requires n >= 2");
    if (!(B > 0.0)) throw std::invalid_argument("bandwidth_n3: requires B > 0");
    if (!(gamma > 0.0)) throw std::invalid_argument("bandwidth_n3: requires gamma > 0");
    if (!(r > 0.0 && r <= 2.0)) throw std::invalid_argument("bandwidth_n3: requires r in (0, 2]");
    const double target = std::log(n);
    auto residual = [&](double N) {
        return 16.0 * gamma * N + 4.0 * B * std::pow(N, 0.5 * r) - target;
    };
    double hi = 1.0;
    while (residual(hi) < 0.0) hi *= 2.0;
    double lo = 0.0;
    for (int it = 0; it < 300 && (hi - lo) > 1e-12 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (residual(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

enum class RateRegime { ideal, smooth_r2, general };

// Squared testing rate phi_n^2 = t_n^2:
//   ideal     (gamma = 0, r in (0,2]):  n^{-1/2} (log n)^{17/(6r)}
//   smooth_r2 (r = 2, gamma > 0):       (log n)^{(12g - B)/(3(4g + B))} n^{-B/(2(4g + B))}
//   general   (r in (0,2), gamma > 0):  N3^{2 - r/2} e^{-2 B N3^{r/2}} at the bandwidth_n3 root.
inline double rate_phi_sq(double n, double B, double r, double gamma, RateRegime regime) {
    if (!(B > 0.0)) throw std::invalid_argument("rate_phi_sq: requires B > 0");
    switch (regime) {
        case RateRegime::ideal: {
            if (gamma != 0.0)
                throw std::invalid_argument("rate_phi_sq: ideal regime requires gamma = 0");
            if (!(r > 0.0 && r <= 2.0))
                throw std::invalid_argument("rate_phi_sq: ideal regime requires r in (0, 2]");
            detail::require_log_log(n, "rate_phi_sq");
            return std::pow(n, -0.5) * std::pow(std::log(n), 17.0 / (6.0 * r));
        }
        case RateRegime::smooth_r2: {
            if (r != 2.0 || !(gamma > 0.0))
                throw std::invalid_argument("rate_phi_sq: smooth_r2 regime requires r = 2, gamma > 0");
            detail::require_log_log(n, "rate_phi_sq");
            const double ln = std::log(n);
            const double e_log = (12.0 * gamma - B) / (3.0 * (4.0 * gamma + B));
            const double e_n = -B / (2.0 * (4.0 * gamma + B));
            return std::pow(ln, e_log) * std::pow(n, e_n);
        }
        case RateRegime::general: {
            if (!(r > 0.0 && r < 2.0) || !(gamma > 0.0))
                throw std::invalid_argument(
                    "rate_phi_sq: general regime requires r in (0, 2), gamma > 0");
            const double n3 = bandwidth_n3(n, B, r, gamma);
            return std::pow(n3, 2.0 - 0.5 * r) * std::exp(-2.0 * B * std::pow(n3, 0.5 * r));
        }
    }
    throw std::logic_error("rate_phi_sq: unreachable");
}

}  // namespace qht

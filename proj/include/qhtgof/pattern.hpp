#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qhtgof/fock.hpp"
#include "qhtgof/parallel.hpp"

namespace qht {

// ---------------------------------------------------------------------------
// Scalar special functions
// ---------------------------------------------------------------------------

// Generalized Laguerre polynomial L_k^a(u), standard three-term recurrence.
inline double laguerre(int k, int a, double u) {
    if (k < 0 || a < 0) throw std::invalid_argument("laguerre: negative index");
    double prev = 1.0;  // L_0
    if (k == 0) return prev;
    double cur = 1.0 + a - u;  // L_1
    for (int m = 1; m < k; ++m) {
        const double next = ((2.0 * m + a + 1.0 - u) * cur - (m + a) * prev) / (m + 1);
        prev = cur;
        cur = next;
    }
    return cur;
}

// Imaginary error function Erfi(x) = (2/sqrt(pi)) int_0^x e^{t^2} dt.
// Taylor series; every term has the sign of x, so no cancellation occurs.
// Converges comfortably for |x| <= 8.
inline double erfi(double x) {
    const double x2 = x * x;
    double term = x;  // x^{2n+1} / n!
    double sum = x;
    for (int n = 1; n < 600; ++n) {
        term *= x2 / n;
        const double add = term / (2 * n + 1);
        sum += add;
        if (std::abs(add) <= 1e-17 * std::abs(sum)) break;
    }
    return 1.1283791670955126 * sum;  // 2/sqrt(pi)
}

// sqrt(2^{k-j} k!/j!) for j >= k, accumulated as a product of ratios so no
// factorial is ever formed.
inline double pattern_prefactor(int j, int k) {
    double c = 1.0;
    for (int i = k + 1; i <= j; ++i) c /= 2.0 * i;
    return std::sqrt(c);
}

// ---------------------------------------------------------------------------
// Fourier-domain pattern function
// ---------------------------------------------------------------------------

// Laguerre form of the pattern-function Fourier transform, j >= k:
//   ft(t) = pi (-i)^{j-k} sqrt(2^{k-j} k!/j!) |t|^{j-k} e^{-t^2/4} L_k^{j-k}(t^2/2).
// ft(0) = pi on the diagonal, 0 for j > k; |ft| decays like a polynomial
// times e^{-t^2/4}. The x-space evaluation in pattern_eval applies, on top
// of this kernel shape, the tomographic ramp |t| (see pattern_eval).
inline std::complex<double> pattern_ft(int j, int k, double t) {
    if (k < 0 || j < k)
        throw std::invalid_argument(
            "pattern_ft: requires j >= k >= 0 (swap indices and conjugate for j < k)");
    const int d = j - k;
    const double u = 0.5 * t * t;
    const double mag = M_PI * pattern_prefactor(j, k) * std::pow(std::abs(t), d) *
                       std::exp(-0.5 * u) * laguerre(k, d, u);
    switch (d & 3) {  // (-i)^d
        case 0: return {mag, 0.0};
        case 1: return {0.0, -mag};
        case 2: return {-mag, 0.0};
        default: return {0.0, mag};
    }
}

struct PatternFT {
    int j = 0, k = 0;
    std::complex<double> operator()(double t) const { return pattern_ft(j, k, t); }
};

// ---------------------------------------------------------------------------
// x-space evaluation by quadrature
// ---------------------------------------------------------------------------

namespace detail {

// Gaussian decay rate of the eta-corrected integrand, exp(-decay * t^2) with
// decay = 1/4 - gamma = (2 eta - 1)/(4 eta). Positive only for eta > 1/2.
inline double integrand_decay(double eta) { return (2.0 * eta - 1.0) / (4.0 * eta); }

inline void require_eta(double eta) {
    if (!(eta > 0.5) || !(eta <= 1.0))
        throw std::invalid_argument("pattern: eta must lie in (1/2, 1]");
}

// Truncation point T past which the envelope
//   prefactor * C(k+d, k) * t^{d+1} (1 + t^2/2)^k e^{-decay t^2}
// contributes less than ~1e-13 to the integral. Uses the Laguerre bound
// |L_k^d(u)| <= C(k+d, k) (1 + u)^k for u >= 0.
inline double truncation_point(int j, int k, double eta) {
    const int d = j - k;
    const double decay = integrand_decay(eta);
    const double logc = std::log(pattern_prefactor(j, k));
    double log_binom = 0.0;
    for (int i = 1; i <= k; ++i) log_binom += std::log(static_cast<double>(d + i) / i);
    double t = std::sqrt((2.0 * k + d + 1.0) / (2.0 * decay)) + 2.0;
    t = std::max(t, 6.0);
    for (; t < 120.0; t += 0.5) {
        const double log_env = logc + log_binom + (d + 1) * std::log(t) +
                               k * std::log1p(0.5 * t * t) - decay * t * t;
        if (log_env - std::log(decay * t) < std::log(1e-13)) break;
    }
    return t;
}

// Simpson-weighted samples of the eta-corrected radial integrand
//   g(t) = t^{d+1} e^{-decay t^2} L_k^d(t^2/2)
// on t_i = i h, i = 0..m (m even), premultiplied by the sign, the index
// prefactor and the h/3 Simpson coefficients. Summing wg[i] * cos(t_i x)
// (even j-k) or wg[i] * sin(t_i x) (odd j-k) yields f^eta_{j,k}(x).
struct RadialKernel {
    std::vector<double> wg;
    double h = 0.0;
    int parity = 0;  // (j - k) & 1
};

inline RadialKernel build_radial_kernel(int j, int k, double eta, double step) {
    require_eta(eta);
    if (k < 0 || j < k) throw std::invalid_argument("pattern: requires j >= k >= 0");
    if (!(step > 0.0) || step > 0.01)
        throw std::invalid_argument("pattern: quadrature step must lie in (0, 0.01]");
    const int d = j - k;
    const double decay = integrand_decay(eta);
    const double tmax = truncation_point(j, k, eta);
    std::size_t m = static_cast<std::size_t>(std::ceil(tmax / step));
    if (m % 2) ++m;
    RadialKernel ker;
    ker.h = step;
    ker.parity = d & 1;
    ker.wg.resize(m + 1);
    const double sign = ((d / 2) % 2 == 0) ? 1.0 : -1.0;  // (-1)^{floor(d/2)}
    const double scale = sign * pattern_prefactor(j, k) * step / 3.0;
    for (std::size_t i = 0; i <= m; ++i) {
        const double t = static_cast<double>(i) * step;
        const double g =
            std::pow(t, d + 1) * std::exp(-decay * t * t) * laguerre(k, d, 0.5 * t * t);
        const double w = (i == 0 || i == m) ? 1.0 : ((i % 2) ? 4.0 : 2.0);
        ker.wg[i] = scale * w * g;
    }
    return ker;
}

// Half-line cosine/sine transform of the sampled kernel. The rotation
// (cos, sin)(t_i x) is advanced by one h*x step per sample, so the loop is
// trig-free; drift over ~1e4 steps is below 1e-12.
inline double eval_radial(const RadialKernel& ker, double x) {
    const double cs = std::cos(ker.h * x);
    const double sn = std::sin(ker.h * x);
    double c = 1.0, s = 0.0;
    double acc = 0.0;  // t = 0 sample vanishes (factor t^{d+1})
    const std::size_t m = ker.wg.size();
    if (ker.parity) {
        for (std::size_t i = 1; i < m; ++i) {
            const double cn = c * cs - s * sn;
            s = s * cs + c * sn;
            c = cn;
            acc += ker.wg[i] * s;
        }
    } else {
        for (std::size_t i = 1; i < m; ++i) {
            const double cn = c * cs - s * sn;
            s = s * cs + c * sn;
            c = cn;
            acc += ker.wg[i] * c;
        }
    }
    return acc;
}

}  // namespace detail

// Noise-corrected pattern function f^eta_{j,k}(x): the inverse Fourier
// transform of the ramp-filtered Laguerre kernel
//   (1/2pi) int pi sqrt(2^{k-j} k!/j!) (it)^{j-k} |t| e^{-t^2/4} e^{gamma t^2}
//                L_k^{j-k}(t^2/2) e^{-itx} dt,     gamma = (1-eta)/(4 eta).
// The ramp |t| and the i^{j-k} phase are what make the homodyne
// reconstruction identity E[f^eta_{j,k}(Y/sqrt(eta)) e^{i(j-k)Phi}] = rho_{j,k}
// hold; with them the integral reduces to a half-line cosine (even j-k) or
// sine (odd j-k) transform of a smooth Gaussian-decaying radial kernel,
// evaluated by composite Simpson with the truncation tail below 1e-13.
// The computed value is real by construction; at eta = 1 it is the plain
// pattern function f_{j,k}(x). Symmetric in (j, k).
inline double pattern_eval(int j, int k, double eta, double x, double step = 0.005) {
    if (j < 0 || k < 0) throw std::invalid_argument("pattern_eval: negative index");
    if (j < k) std::swap(j, k);
    const auto ker = detail::build_radial_kernel(j, k, eta, step);
    return detail::eval_radial(ker, x);
}

// Full-line complex form of the same inverse transform. The imaginary part
// is a pure discretization/roundoff residual (below 1e-8 by contract); kept
// as an independent cross-check of the half-line reduction.
inline std::complex<double> pattern_eval_complex(int j, int k, double eta, double x,
                                                 double step = 0.005) {
    if (j < 0 || k < 0) throw std::invalid_argument("pattern_eval_complex: negative index");
    if (j < k) std::swap(j, k);
    detail::require_eta(eta);
    const int d = j - k;
    const double decay = detail::integrand_decay(eta);
    const double tmax = detail::truncation_point(j, k, eta);
    std::size_t m = static_cast<std::size_t>(std::ceil(tmax / step));
    if (m % 2) ++m;
    const double c = pattern_prefactor(j, k);
    static const std::complex<double> kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    std::complex<double> acc{0.0, 0.0};
    for (std::int64_t i = -static_cast<std::int64_t>(m); i <= static_cast<std::int64_t>(m); ++i) {
        const double t = static_cast<double>(i) * step;
        const double mag = M_PI * c * std::abs(t) * std::pow(t, d) *
                           std::exp(-decay * t * t) * laguerre(k, d, 0.5 * t * t);
        const std::size_t ai = static_cast<std::size_t>(i + static_cast<std::int64_t>(m));
        const double w = (ai == 0 || ai == 2 * m) ? 1.0 : ((ai % 2) ? 4.0 : 2.0);
        acc += w * mag * kIPow[d & 3] *
               std::complex<double>(std::cos(t * x), -std::sin(t * x));
    }
    return acc * (step / 3.0) / (2.0 * M_PI);
}

// ---------------------------------------------------------------------------
// Cross-check path: irregular wave functions
// ---------------------------------------------------------------------------

// Pattern function via the wave-function product rule
//   f_{j,k} = 2x psi_k phi_j - sqrt(2(k+1)) psi_{k+1} phi_j - sqrt(2(j+1)) psi_k phi_{j+1}
// with the irregular (non-normalizable) oscillator solutions
//   phi_0     = pi^{3/4} e^{-x^2/2} Erfi(x),
//   phi_1     = sqrt(2) pi^{3/4} x e^{-x^2/2} Erfi(x) - sqrt(2) pi^{1/4} e^{x^2/2},
//   phi_{m+1} = x sqrt(2/(m+1)) phi_m - sqrt(m/(m+1)) phi_{m-1}.
// phi_j grows like e^{x^2/2}, so this route is restricted to |x| <= 3 and
// j <= 5. Cross-check against pattern_eval at eta = 1 only; never used by
// the estimator.
inline double recurrence_check(int j, int k, double x) {
    if (k < 0 || j < k) throw std::invalid_argument("recurrence_check: requires j >= k >= 0");
    if (j > 5) throw std::invalid_argument("recurrence_check: supported only for j <= 5");
    if (std::abs(x) > 3.0) throw std::invalid_argument("recurrence_check: requires |x| <= 3");
    const double pi34 = std::pow(M_PI, 0.75);
    const double pi14 = std::pow(M_PI, 0.25);
    const double gauss = std::exp(-0.5 * x * x);
    const double erfi_x = erfi(x);
    std::vector<double> phi(static_cast<std::size_t>(j) + 2);
    phi[0] = pi34 * gauss * erfi_x;
    phi[1] = M_SQRT2 * pi34 * x * gauss * erfi_x - M_SQRT2 * pi14 * std::exp(0.5 * x * x);
    for (int m = 1; m <= j; ++m)
        phi[m + 1] = x * std::sqrt(2.0 / (m + 1)) * phi[m] -
                     std::sqrt(static_cast<double>(m) / (m + 1)) * phi[m - 1];
    const double psi_k = fock_eval(k, x);
    const double psi_k1 = fock_eval(k + 1, x);
    return 2.0 * x * psi_k * phi[j] - std::sqrt(2.0 * (k + 1)) * psi_k1 * phi[j] -
           std::sqrt(2.0 * (j + 1)) * psi_k * phi[j + 1];
}

// ---------------------------------------------------------------------------
// PatternTable
// ---------------------------------------------------------------------------

// Precomputed grid of f^eta_{j,k} for all 0 <= k <= j < N on a uniform
// x-grid. Immutable after construction and safe for concurrent reads.
// Off-grid points use 4-point (cubic) Lagrange interpolation; points beyond
// the grid fall back to direct quadrature.
class PatternTable {
public:
    PatternTable() = default;

    double eta() const { return eta_; }
    int bandwidth() const { return bandwidth_; }
    double x_max() const { return x_max_; }
    double step() const { return step_; }
    std::size_t grid_size() const { return npoints_; }
    std::size_t num_pairs() const { return values_.size(); }
    double grid_x(std::size_t i) const { return -x_max_ + step_ * static_cast<double>(i); }

    // Index of the (j, k) row, j >= k, shared across bandwidths.
    static std::size_t pair_index(int j, int k) {
        return static_cast<std::size_t>(j) * (j + 1) / 2 + static_cast<std::size_t>(k);
    }

    double at_grid(int j, int k, std::size_t ix) const {
        if (j < k) std::swap(j, k);
        return values_[pair_index(j, k)][ix];
    }

    // f^eta_{j,k}(x); symmetric in (j, k).
    double eval(int j, int k, double x) const {
        if (j < k) std::swap(j, k);
        if (j >= bandwidth_)
            throw std::invalid_argument("PatternTable::eval: index beyond table bandwidth");
        if (std::abs(x) > x_max_) return pattern_eval(j, k, eta_, x, quad_step_);
        const Cubic cw = cubic_weights(x);
        const double* v = values_[pair_index(j, k)].data() + cw.i0;
        return cw.w[0] * v[0] + cw.w[1] * v[1] + cw.w[2] * v[2] + cw.w[3] * v[3];
    }

    // All rows at one x, written to out[pair_index(j,k)] for k <= j < N.
    // One weight computation is shared by every pair; this is the hot path
    // of the estimator.
    void eval_all_pairs(double x, double* out) const {
        if (std::abs(x) > x_max_) {
            std::size_t p = 0;
            for (int j = 0; j < bandwidth_; ++j)
                for (int k = 0; k <= j; ++k, ++p) out[p] = pattern_eval(j, k, eta_, x, quad_step_);
            return;
        }
        const Cubic cw = cubic_weights(x);
        const std::size_t npairs = values_.size();
        for (std::size_t p = 0; p < npairs; ++p) {
            const double* v = values_[p].data() + cw.i0;
            out[p] = cw.w[0] * v[0] + cw.w[1] * v[1] + cw.w[2] * v[2] + cw.w[3] * v[3];
        }
    }

    // CSV dump, header "j,k,x,value".
    void export_csv(std::ostream& os) const {
        os << "j,k,x,value\n";
        char buf[80];
        std::size_t p = 0;
        for (int j = 0; j < bandwidth_; ++j)
            for (int k = 0; k <= j; ++k, ++p)
                for (std::size_t i = 0; i < npoints_; ++i) {
                    std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", j, k, grid_x(i),
                                  values_[p][i]);
                    os << buf;
                }
    }

    void save_binary(std::ostream& os) const {
        const char magic[8] = {'Q', 'H', 'T', 'P', 'T', '0', '1', '\n'};
        os.write(magic, 8);
        const std::int64_t nb = bandwidth_, np = static_cast<std::int64_t>(npoints_);
        os.write(reinterpret_cast<const char*>(&eta_), sizeof eta_);
        os.write(reinterpret_cast<const char*>(&x_max_), sizeof x_max_);
        os.write(reinterpret_cast<const char*>(&step_), sizeof step_);
        os.write(reinterpret_cast<const char*>(&quad_step_), sizeof quad_step_);
        os.write(reinterpret_cast<const char*>(&nb), sizeof nb);
        os.write(reinterpret_cast<const char*>(&np), sizeof np);
        for (const auto& row : values_)
            os.write(reinterpret_cast<const char*>(row.data()),
                     static_cast<std::streamsize>(row.size() * sizeof(double)));
    }

    static PatternTable load_binary(std::istream& is) {
        char magic[8];
        is.read(magic, 8);
        if (!is || std::string(magic, 8) != "QHTPT01\n")
            throw std::runtime_error("PatternTable::load_binary: bad magic");
        PatternTable tab;
        std::int64_t nb = 0, np = 0;
        is.read(reinterpret_cast<char*>(&tab.eta_), sizeof tab.eta_);
        is.read(reinterpret_cast<char*>(&tab.x_max_), sizeof tab.x_max_);
        is.read(reinterpret_cast<char*>(&tab.step_), sizeof tab.step_);
        is.read(reinterpret_cast<char*>(&tab.quad_step_), sizeof tab.quad_step_);
        is.read(reinterpret_cast<char*>(&nb), sizeof nb);
        is.read(reinterpret_cast<char*>(&np), sizeof np);
        if (!is || nb < 1 || np < 4) throw std::runtime_error("PatternTable::load_binary: bad header");
        tab.bandwidth_ = static_cast<int>(nb);
        tab.npoints_ = static_cast<std::size_t>(np);
        tab.values_.assign(pair_index(tab.bandwidth_ - 1, tab.bandwidth_ - 1) + 1,
                           std::vector<double>(tab.npoints_));
        for (auto& row : tab.values_) {
            is.read(reinterpret_cast<char*>(row.data()),
                    static_cast<std::streamsize>(row.size() * sizeof(double)));
            if (!is) throw std::runtime_error("PatternTable::load_binary: truncated file");
        }
        return tab;
    }

    friend PatternTable build_table(double, int, double, double, int, double);

private:
    struct Cubic {
        std::size_t i0;
        double w[4];
    };

    Cubic cubic_weights(double x) const {
        const double u = (x + x_max_) / step_;
        long i = static_cast<long>(std::floor(u)) - 1;
        i = std::clamp(i, 0L, static_cast<long>(npoints_) - 4);
        const double s = u - static_cast<double>(i);  // in [0, 3], typically [1, 2]
        Cubic c;
        c.i0 = static_cast<std::size_t>(i);
        c.w[0] = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
        c.w[1] = s * (s - 2.0) * (s - 3.0) / 2.0;
        c.w[2] = -s * (s - 1.0) * (s - 3.0) / 2.0;
        c.w[3] = s * (s - 1.0) * (s - 2.0) / 6.0;
        return c;
    }

    double eta_ = 1.0;
    int bandwidth_ = 0;
    double x_max_ = 8.0;
    double step_ = 0.01;
    double quad_step_ = 0.005;
    std::size_t npoints_ = 0;
    std::vector<std::vector<double>> values_;  // [pair_index][grid point]
};

// Grid step meeting the 1e-5 cubic-interpolation budget. The eta < 1 kernels
// carry the e^{gamma t^2} correction and oscillate harder, so they need the
// finer grid.
inline double default_grid_step(double eta) { return eta < 1.0 ? 0.005 : 0.01; }

// Tabulates pattern_eval for all 0 <= k <= j < bandwidth on [-x_max, x_max].
// Rows are built in parallel; every stored value is checked finite.
inline PatternTable build_table(double eta, int bandwidth, double x_max = 8.0,
                                double step = 0.01, int jobs = 0, double quad_step = 0.005) {
    detail::require_eta(eta);
    if (bandwidth < 1) throw std::invalid_argument("build_table: bandwidth must be >= 1");
    if (!(step > 0.0)) throw std::invalid_argument("build_table: step must be positive");
    if (!(x_max >= 4.0 * step)) throw std::invalid_argument("build_table: x_max too small");
    PatternTable tab;
    tab.eta_ = eta;
    tab.bandwidth_ = bandwidth;
    tab.x_max_ = x_max;
    tab.step_ = step;
    tab.quad_step_ = quad_step;
    tab.npoints_ = static_cast<std::size_t>(std::llround(2.0 * x_max / step)) + 1;
    const std::size_t npairs = PatternTable::pair_index(bandwidth - 1, bandwidth - 1) + 1;
    tab.values_.assign(npairs, {});
    parallel_for(npairs, jobs, [&](std::size_t p) {
        // invert pair index: largest j with j(j+1)/2 <= p
        int j = static_cast<int>((std::sqrt(8.0 * static_cast<double>(p) + 1.0) - 1.0) / 2.0);
        while (PatternTable::pair_index(j + 1, 0) <= p) ++j;
        while (PatternTable::pair_index(j, 0) > p) --j;
        const int k = static_cast<int>(p - PatternTable::pair_index(j, 0));
        const auto ker = detail::build_radial_kernel(j, k, eta, quad_step);
        auto& row = tab.values_[p];
        row.resize(tab.npoints_);
        for (std::size_t i = 0; i < tab.npoints_; ++i)
            row[i] = detail::eval_radial(ker, tab.grid_x(i));
    });
    for (const auto& row : tab.values_)
        for (double v : row)
            if (!std::isfinite(v)) throw std::runtime_error("build_table: non-finite table value");
    return tab;
}

// Build with a per-configuration file cache. cache_dir empty means no cache.
inline PatternTable load_or_build_table(double eta, int bandwidth, double x_max, double step,
                                        const std::string& cache_dir, int jobs = 0,
                                        double quad_step = 0.005) {
    if (cache_dir.empty()) return build_table(eta, bandwidth, x_max, step, jobs, quad_step);
    char name[160];
    std::snprintf(name, sizeof name, "/ptable_eta%.6f_N%d_x%.3f_h%.4f_q%.4f.bin", eta, bandwidth,
                  x_max, step, quad_step);
    const std::string path = cache_dir + name;
    {
        std::ifstream in(path, std::ios::binary);
        if (in) {
            try {
                PatternTable tab = PatternTable::load_binary(in);
                if (tab.eta() == eta && tab.bandwidth() == bandwidth && tab.x_max() == x_max &&
                    tab.step() == step)
                    return tab;
            } catch (const std::exception&) {
                // stale or corrupt cache entry; rebuild below
            }
        }
    }
    PatternTable tab = build_table(eta, bandwidth, x_max, step, jobs, quad_step);
    const std::string tmp = path + ".tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (out) {
        tab.save_binary(out);
        out.close();
        if (out) std::rename(tmp.c_str(), path.c_str());
    }
    return tab;
}

}  // namespace qht

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qht {

enum class StateKind { vacuum, single_photon, coherent, squeezed, thermal, cat };

namespace detail {
inline std::string shortest_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}
}  // namespace detail

// Descriptor for the supported state families. The same object drives matrix
// construction (make_state), quadrature densities and sampling.
struct StateSpec {
    StateKind kind = StateKind::vacuum;
    double q0 = 0.0;       // coherent / cat displacement
    double photons = 0.0;  // squeezed: mean photon number M
    double xi = 0.0;       // squeezed: squeezing parameter
    double beta = 0.0;     // thermal: inverse temperature

    static StateSpec vacuum() { return {}; }
    static StateSpec single_photon() { return {StateKind::single_photon}; }
    static StateSpec coherent(double q0) { return {StateKind::coherent, q0}; }
    static StateSpec squeezed(double photons, double xi) {
        StateSpec s{StateKind::squeezed};
        s.photons = photons;
        s.xi = xi;
        return s;
    }
    static StateSpec thermal(double beta) {
        StateSpec s{StateKind::thermal};
        s.beta = beta;
        return s;
    }
    static StateSpec cat(double q0) { return {StateKind::cat, q0}; }

    // Canonical, parseable label: "vacuum", "coherent(3)", "squeezed(2,0.5)", ...
    std::string label() const {
        using detail::shortest_double;
        switch (kind) {
            case StateKind::vacuum: return "vacuum";
            case StateKind::single_photon: return "single_photon";
            case StateKind::coherent: return "coherent(" + shortest_double(q0) + ")";
            case StateKind::squeezed:
                return "squeezed(" + shortest_double(photons) + "," + shortest_double(xi) + ")";
            case StateKind::thermal: return "thermal(" + shortest_double(beta) + ")";
            case StateKind::cat: return "cat(" + shortest_double(q0) + ")";
        }
        return "?";
    }

    static StateSpec parse(const std::string& text);
};

namespace detail {
inline std::vector<double> parse_args(const std::string& text, std::size_t open) {
    if (text.back() != ')') throw std::invalid_argument("StateSpec::parse: missing ')' in '" + text + "'");
    std::vector<double> args;
    std::size_t pos = open + 1;
    const std::size_t end = text.size() - 1;
    while (pos < end) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos || comma > end) comma = end;
        const std::string piece = text.substr(pos, comma - pos);
        try {
            std::size_t used = 0;
            args.push_back(std::stod(piece, &used));
            if (used != piece.size()) throw std::invalid_argument(piece);
        } catch (const std::exception&) {
            throw std::invalid_argument("StateSpec::parse: bad number '" + piece + "' in '" + text + "'");
        }
        pos = comma + 1;
    }
    return args;
}
}  // namespace detail

inline StateSpec StateSpec::parse(const std::string& text) {
    const std::size_t open = text.find('(');
    const std::string name = text.substr(0, open);
    std::vector<double> args;
    if (open != std::string::npos) args = detail::parse_args(text, open);
    auto want = [&](std::size_t n) {
        if (args.size() != n)
            throw std::invalid_argument("StateSpec::parse: '" + name + "' takes " +
                                        std::to_string(n) + " parameter(s)");
    };
    if (name == "vacuum") { want(0); return vacuum(); }
    if (name == "single_photon") { want(0); return single_photon(); }
    if (name == "coherent") { want(1); return coherent(args[0]); }
    if (name == "squeezed") { want(2); return squeezed(args[0], args[1]); }
    if (name == "thermal") { want(1); return thermal(args[0]); }
    if (name == "cat") { want(1); return cat(args[0]); }
    throw std::invalid_argument("StateSpec::parse: unknown state '" + text + "'");
}

// Truncated density matrix in the Fock basis, Hermitian by construction.
class DensityMatrix {
public:
    DensityMatrix(int dim, std::string label)
        : dim_(dim), label_(std::move(label)), a_(static_cast<std::size_t>(dim) * dim) {
        if (dim < 1) throw std::invalid_argument("DensityMatrix: dim must be >= 1");
    }

    int dim() const { return dim_; }
    const std::string& label() const { return label_; }

    std::complex<double>& at(int j, int k) { return a_[static_cast<std::size_t>(j) * dim_ + k]; }
    const std::complex<double>& at(int j, int k) const {
        return a_[static_cast<std::size_t>(j) * dim_ + k];
    }

    // Entry with zero-padding beyond the truncation.
    std::complex<double> at_or_zero(int j, int k) const {
        if (j < 0 || k < 0 || j >= dim_ || k >= dim_) return {0.0, 0.0};
        return at(j, k);
    }

    double trace() const {
        double t = 0.0;
        for (int j = 0; j < dim_; ++j) t += at(j, j).real();
        return t;
    }

    // CSV dump, header "j,k,re,im".
    void export_csv(std::ostream& os) const {
        os << "j,k,re,im\n";
        char buf[96];
        for (int j = 0; j < dim_; ++j)
            for (int k = 0; k < dim_; ++k) {
                std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", j, k, at(j, k).real(),
                              at(j, k).imag());
                os << buf;
            }
    }

private:
    int dim_;
    std::string label_;
    std::vector<std::complex<double>> a_;
};

namespace detail {

// Rank-one (pure) matrix from real Fock coefficients.
inline DensityMatrix outer(const std::vector<double>& c, int dim, std::string label) {
    DensityMatrix rho(dim, std::move(label));
    for (int j = 0; j < dim; ++j)
        for (int k = 0; k < dim; ++k) rho.at(j, k) = c[j] * c[k];
    return rho;
}

}  // namespace detail

// Density matrix of a Table-style state family at the given truncation.
// All constructed matrices are real symmetric with trace -> 1 as dim grows.
inline DensityMatrix make_state(const StateSpec& s, int dim) {
    if (dim < 1) throw std::invalid_argument("make_state: dim must be >= 1");
    switch (s.kind) {
        case StateKind::vacuum: {
            DensityMatrix rho(dim, s.label());
            rho.at(0, 0) = 1.0;
            return rho;
        }
        case StateKind::single_photon: {
            if (dim < 2) throw std::invalid_argument("make_state: single_photon requires dim >= 2");
            DensityMatrix rho(dim, s.label());
            rho.at(1, 1) = 1.0;
            return rho;
        }
        case StateKind::coherent: {
            // c_j = e^{-q0^2/4} (q0/sqrt 2)^j / sqrt(j!), computed in log space.
            std::vector<double> c(static_cast<std::size_t>(dim));
            if (s.q0 == 0.0) {
                c[0] = 1.0;
            } else {
                const double la = std::log(std::abs(s.q0) * M_SQRT1_2);
                const double sgn = s.q0 < 0.0 ? -1.0 : 1.0;
                double sign = 1.0;
                for (int j = 0; j < dim; ++j, sign *= sgn)
                    c[j] = sign * std::exp(-0.25 * s.q0 * s.q0 + j * la - 0.5 * std::lgamma(j + 1.0));
            }
            return detail::outer(c, dim, s.label());
        }
        case StateKind::cat: {
            if (!(s.q0 > 0.0)) throw std::invalid_argument("make_state: cat requires q0 > 0");
            // c_j = sqrt(2) (q0/sqrt 2)^j / sqrt(j! (e^{q0^2/2} + e^{-q0^2/2})), even j only.
            const double a = 0.5 * s.q0 * s.q0;
            const double log_norm = a + std::log1p(std::exp(-2.0 * a));  // log(e^a + e^{-a})
            const double la = std::log(s.q0 * M_SQRT1_2);
            std::vector<double> c(static_cast<std::size_t>(dim), 0.0);
            for (int j = 0; j < dim; j += 2)
                c[j] = std::exp(0.5 * M_LN2 + j * la - 0.5 * std::lgamma(j + 1.0) - 0.5 * log_norm);
            return detail::outer(c, dim, s.label());
        }
        case StateKind::thermal: {
            if (!(s.beta > 0.0)) throw std::invalid_argument("make_state: thermal requires beta > 0");
            DensityMatrix rho(dim, s.label());
            for (int j = 0; j < dim; ++j)
                rho.at(j, j) = (1.0 - std::exp(-s.beta)) * std::exp(-s.beta * j);
            return rho;
        }
        case StateKind::squeezed: {
            const double sh = std::sinh(s.xi);
            if (!(s.xi > 0.0))
                throw std::invalid_argument("make_state: squeezed requires xi > 0");
            if (!(s.photons >= sh * sh))
                throw std::invalid_argument("make_state: squeezed requires M >= sinh^2(xi)");
            const double alpha = std::sqrt(s.photons - sh * sh) / (std::cosh(s.xi) - sh);
            const double delta = std::sqrt(alpha / std::sinh(2.0 * s.xi));
            const double t = 0.5 * std::tanh(s.xi);
            // g_j = (tanh(xi)/2)^j H_j(delta) / sqrt(j!), by the scaled Hermite
            // recurrence g_{m+1} = 2 delta t g_m / sqrt(m+1) - 2 t^2 sqrt(m/(m+1)) g_{m-1};
            // the overall constant comes from trace normalization.
            std::vector<double> g(static_cast<std::size_t>(dim));
            g[0] = 1.0;
            if (dim > 1) g[1] = 2.0 * delta * t;
            for (int m = 1; m + 1 < dim; ++m)
                g[m + 1] = 2.0 * delta * t * g[m] / std::sqrt(m + 1.0) -
                           2.0 * t * t * std::sqrt(m / (m + 1.0)) * g[m - 1];
            double norm_sq = 0.0, tail = 0.0;
            for (int j = 0; j < dim; ++j) norm_sq += g[j] * g[j];
            for (int j = std::max(0, dim - 4); j < dim; ++j) tail += g[j] * g[j];
            if (!(norm_sq > 0.0) || !std::isfinite(norm_sq) || tail > 1e-10 * norm_sq)
                throw std::runtime_error(
                    "make_state: squeezed-state truncation not converged; increase dim or "
                    "adjust (M, xi)");
            const double inv = 1.0 / std::sqrt(norm_sq);
            for (auto& v : g) v *= inv;
            return detail::outer(g, dim, s.label());
        }
    }
    throw std::logic_error("make_state: unreachable");
}

// Squared L2 (Frobenius) distance over the truncated matrices; the smaller
// matrix is zero-padded.
inline double l2_distance_sq(const DensityMatrix& rho, const DensityMatrix& tau) {
    const int dim = std::max(rho.dim(), tau.dim());
    double total = 0.0;
    for (int j = 0; j < dim; ++j)
        for (int k = 0; k < dim; ++k) total += std::norm(rho.at_or_zero(j, k) - tau.at_or_zero(j, k));
    return total;
}

// Tr(rho^2) = sum |rho_{j,k}|^2; equals 1 for pure states.
inline double purity(const DensityMatrix& rho) {
    double total = 0.0;
    for (int j = 0; j < rho.dim(); ++j)
        for (int k = 0; k < rho.dim(); ++k) total += std::norm(rho.at(j, k));
    return total;
}

// Exponential-decay class parameters: |rho_{j,k}| <= L exp(-B (j+k)^{r/2}).
struct StateClassParams {
    double B = 1.0;
    double r = 2.0;
    double L = 1.0;
};

// max over (j,k) of |rho_{j,k}| - L exp(-B (j+k)^{r/2}); <= 0 means the
// truncated matrix satisfies the class bound.
inline double class_margin(const DensityMatrix& rho, const StateClassParams& p) {
    if (!(p.B > 0.0) || !(p.r > 0.0 && p.r <= 2.0) || !(p.L > 0.0))
        throw std::invalid_argument("class_margin: requires B > 0, r in (0, 2], L > 0");
    double margin = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < rho.dim(); ++j)
        for (int k = 0; k < rho.dim(); ++k) {
            const double bound = p.L * std::exp(-p.B * std::pow(static_cast<double>(j + k), 0.5 * p.r));
            margin = std::max(margin, std::abs(rho.at(j, k)) - bound);
        }
    return margin;
}

// Smallest eigenvalue by cyclic Jacobi sweeps on the (real symmetric) matrix;
// the on-demand positive-semidefiniteness diagnostic. Rejects matrices with a
// non-negligible imaginary part (every constructed state is real).
inline double min_eigenvalue(const DensityMatrix& rho) {
    const int n = rho.dim();
    std::vector<double> a(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            if (std::abs(rho.at(j, k).imag()) > 1e-12)
                throw std::invalid_argument("min_eigenvalue: matrix has a complex part");
            a[static_cast<std::size_t>(j) * n + k] = rho.at(j, k).real();
        }
    auto idx = [n](int r, int c) { return static_cast<std::size_t>(r) * n + c; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a[idx(p, q)] * a[idx(p, q)];
        if (off < 1e-26) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[idx(p, q)];
                if (std::abs(apq) < 1e-300) continue;
                const double tau = (a[idx(q, q)] - a[idx(p, p)]) / (2.0 * apq);
                const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int r = 0; r < n; ++r) {
                    const double arp = a[idx(r, p)], arq = a[idx(r, q)];
                    a[idx(r, p)] = c * arp - s * arq;
                    a[idx(r, q)] = s * arp + c * arq;
                }
                for (int r = 0; r < n; ++r) {
                    const double apr = a[idx(p, r)], aqr = a[idx(q, r)];
                    a[idx(p, r)] = c * apr - s * aqr;
                    a[idx(q, r)] = s * apr + c * aqr;
                }
            }
    }
    double lo = a[0];
    for (int j = 1; j < n; ++j) lo = std::min(lo, a[idx(j, j)]);
    return lo;
}

}  // namespace qht

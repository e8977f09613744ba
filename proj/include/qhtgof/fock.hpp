#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace qht {

// Fock basis function psi_k(x) = H_k(x) e^{-x^2/2} / sqrt(sqrt(pi) 2^k k!),
// evaluated by the normalized three-term recurrence
//   psi_0     = pi^{-1/4} e^{-x^2/2},
//   psi_{k+1} = x sqrt(2/(k+1)) psi_k - sqrt(k/(k+1)) psi_{k-1}.
// Every intermediate stays on the scale of a unit-norm function, so the
// recurrence never overflows regardless of k.
inline double fock_eval(int k, double x) {
    if (k < 0) throw std::invalid_argument("fock_eval: k must be >= 0");
    const double psi0 = 0.75112554446494251 * std::exp(-0.5 * x * x);  // pi^{-1/4}
    if (k == 0) return psi0;
    double below = psi0;
    double cur = M_SQRT2 * x * psi0;
    for (int m = 1; m < k; ++m) {
        const double next =
            x * std::sqrt(2.0 / (m + 1)) * cur - std::sqrt(static_cast<double>(m) / (m + 1)) * below;
        below = cur;
        cur = next;
    }
    return cur;
}

// psi_0(x) .. psi_{count-1}(x) in one sweep.
inline std::vector<double> fock_eval_all(int count, double x) {
    if (count < 1) throw std::invalid_argument("fock_eval_all: count must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(count));
    out[0] = 0.75112554446494251 * std::exp(-0.5 * x * x);
    if (count > 1) out[1] = M_SQRT2 * x * out[0];
    for (int m = 1; m + 1 < count; ++m)
        out[m + 1] = x * std::sqrt(2.0 / (m + 1)) * out[m] -
                     std::sqrt(static_cast<double>(m) / (m + 1)) * out[m - 1];
    return out;
}

// Energy-indexed wave function with call syntax. psi_k(-x) = (-1)^k psi_k(x),
// int psi_k^2 = 1.
struct FockFunction {
    int k = 0;
    double operator()(double x) const { return fock_eval(k, x); }
};

}  // namespace qht

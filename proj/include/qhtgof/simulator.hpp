#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qhtgof/rng.hpp"
#include "qhtgof/states.hpp"

namespace qht {

struct QhtRecord {
    double y;
    double phi;
};

// One simulated homodyne dataset: n records (Y_l, Phi_l) plus the generating
// configuration. Regeneration with the same (state, eta, n, seed) is
// bit-identical; each record draws from the substream (seed, record index),
// so the output is independent of how the generation loop is sharded.
struct QhtDataset {
    std::vector<QhtRecord> records;
    double eta = 1.0;
    std::string state_label;
    std::uint64_t seed = 0;

    std::size_t size() const { return records.size(); }
};

// Quadrature density p(x | phi). Gaussian families in closed form;
// single-photon and cat carry the wave-function factors.
inline double density_eval(const StateSpec& s, double x, double phi) {
    constexpr double kInvSqrtPi = 0.5641895835477563;
    switch (s.kind) {
        case StateKind::vacuum:
            return std::exp(-x * x) * kInvSqrtPi;
        case StateKind::single_photon:
            return 2.0 * x * x * std::exp(-x * x) * kInvSqrtPi;
        case StateKind::coherent: {
            const double d = x - s.q0 * std::cos(phi);
            return std::exp(-d * d) * kInvSqrtPi;
        }
        case StateKind::thermal: {
            if (!(s.beta > 0.0)) throw std::invalid_argument("density_eval: thermal requires beta > 0");
            const double t = std::tanh(0.5 * s.beta);
            return std::sqrt(t / M_PI) * std::exp(-x * x * t);
        }
        case StateKind::squeezed: {
            // Gaussian with mean alpha cos(phi) and the phase-rotated squeezed
            // variance; reduces to the coherent density at xi = 0+.
            const double sh = std::sinh(s.xi);
            if (!(s.xi > 0.0)) throw std::invalid_argument("density_eval: squeezed requires xi > 0");
            if (!(s.photons >= sh * sh))
                throw std::invalid_argument("density_eval: squeezed requires M >= sinh^2(xi)");
            const double alpha = std::sqrt(s.photons - sh * sh) / (std::cosh(s.xi) - sh);
            const double co = std::cos(phi), si = std::sin(phi);
            const double v = std::exp(-2.0 * s.xi) * co * co + std::exp(2.0 * s.xi) * si * si;
            const double d = x - alpha * co;
            return std::exp(-d * d / v) / std::sqrt(M_PI * v);
        }
        case StateKind::cat: {
            if (!(s.q0 > 0.0)) throw std::invalid_argument("density_eval: cat requires q0 > 0");
            const double c = s.q0 * std::cos(phi);
            const double a = std::exp(-(x - c) * (x - c));
            const double b = std::exp(-(x + c) * (x + c));
            const double cross = 2.0 * std::cos(2.0 * s.q0 * x * std::sin(phi)) *
                                 std::exp(-x * x - c * c);
            const double p = (a + b + cross) /
                             (2.0 * std::sqrt(M_PI) * (1.0 + std::exp(-s.q0 * s.q0)));
            return p > 0.0 ? p : 0.0;  // clip roundoff at the wave-function zeros
        }
    }
    throw std::logic_error("density_eval: unreachable");
}

// Spec'd density with call syntax.
struct QuadratureDensity {
    StateSpec state;
    double operator()(double x, double phi) const { return density_eval(state, x, phi); }
};

// One draw X ~ p(.|phi). Gaussian families sample directly from the normal
// form; single-photon and cat use rejection with dominating envelopes:
//   single photon: 3 * N(0,1)            (peak ratio 4 sqrt(2)/e ~ 2.08, acceptance 1/3)
//   cat:           2/(1+e^{-q0^2}) * mixture of N(+-q0 cos phi, 1/2)
//                                        (the interference term is bounded by the
//                                         two Gaussians' geometric mean; acceptance >= 1/2)
// A density value above its envelope indicates a broken bound and aborts.
inline double sample_quadrature(const StateSpec& s, double phi, StreamRng& rng) {
    constexpr int kMaxRejectionIters = 100000;
    switch (s.kind) {
        case StateKind::vacuum:
            return rng.normal() * M_SQRT1_2;
        case StateKind::coherent:
            return s.q0 * std::cos(phi) + rng.normal() * M_SQRT1_2;
        case StateKind::thermal: {
            if (!(s.beta > 0.0))
                throw std::invalid_argument("sample_quadrature: thermal requires beta > 0");
            return rng.normal() / std::sqrt(2.0 * std::tanh(0.5 * s.beta));
        }
        case StateKind::squeezed: {
            const double sh = std::sinh(s.xi);
            if (!(s.xi > 0.0) || !(s.photons >= sh * sh))
                throw std::invalid_argument("sample_quadrature: invalid squeezed parameters");
            const double alpha = std::sqrt(s.photons - sh * sh) / (std::cosh(s.xi) - sh);
            const double co = std::cos(phi), si = std::sin(phi);
            const double v = std::exp(-2.0 * s.xi) * co * co + std::exp(2.0 * s.xi) * si * si;
            return alpha * co + rng.normal() * std::sqrt(0.5 * v);
        }
        case StateKind::single_photon: {
            constexpr double kInvSqrt2Pi = 0.3989422804014327;
            for (int it = 0; it < kMaxRejectionIters; ++it) {
                const double x = rng.normal();
                const double envelope = 3.0 * kInvSqrt2Pi * std::exp(-0.5 * x * x);
                const double p = density_eval(s, x, phi);
                if (p > envelope)
                    throw std::logic_error("sample_quadrature: single-photon envelope violated");
                if (rng.uniform01() * envelope < p) return x;
            }
            throw std::logic_error("sample_quadrature: rejection loop did not terminate");
        }
        case StateKind::cat: {
            if (!(s.q0 > 0.0)) throw std::invalid_argument("sample_quadrature: cat requires q0 > 0");
            const double c = s.q0 * std::cos(phi);
            const double amp = 2.0 / (1.0 + std::exp(-s.q0 * s.q0));
            constexpr double kInvSqrtPi = 0.5641895835477563;
            for (int it = 0; it < kMaxRejectionIters; ++it) {
                const double mean = rng.uniform01() < 0.5 ? c : -c;
                const double x = mean + rng.normal() * M_SQRT1_2;
                const double mix = 0.5 * kInvSqrtPi *
                                   (std::exp(-(x - c) * (x - c)) + std::exp(-(x + c) * (x + c)));
                const double envelope = amp * mix;
                const double p = density_eval(s, x, phi);
                // equality is attained at x = 0, so allow for roundoff
                if (p > envelope * (1.0 + 1e-9))
                    throw std::logic_error("sample_quadrature: cat envelope violated");
                if (rng.uniform01() * envelope < p) return x;
            }
            throw std::logic_error("sample_quadrature: rejection loop did not terminate");
        }
    }
    throw std::logic_error("sample_quadrature: unreachable");
}

// n i.i.d. records: Phi ~ U[0, pi], X ~ p(.|Phi), Y = sqrt(eta) X + sqrt((1-eta)/2) xi.
// At eta = 1 the noise term is exactly zero. Record l draws, in order, its
// phase, quadrature and noise from the substream (seed, l).
inline QhtDataset generate_dataset(const StateSpec& s, std::size_t n, double eta,
                                   std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("generate_dataset: n must be >= 1");
    if (!(eta > 0.5) || !(eta <= 1.0))
        throw std::invalid_argument("generate_dataset: eta must lie in (1/2, 1]");
    QhtDataset ds;
    ds.eta = eta;
    ds.state_label = s.label();
    ds.seed = seed;
    ds.records.resize(n);
    const double amp = std::sqrt(eta);
    const double noise_sd = std::sqrt(0.5 * (1.0 - eta));
    for (std::size_t l = 0; l < n; ++l) {
        StreamRng rng(seed, l);
        const double phi = M_PI * rng.uniform01();
        const double x = sample_quadrature(s, phi, rng);
        const double z = rng.normal();
        ds.records[l] = {amp * x + noise_sd * z, phi};
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Dataset files
// ---------------------------------------------------------------------------
//
// Format: one header line, then "y,phi" rows at 17 significant digits
// (lossless round trip for doubles):
//   # qht-dataset v1, state=<label>, eta=<val>, n=<count>, seed=<u64>

inline void save_dataset(const QhtDataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("save_dataset: cannot open '" + path + "'");
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.17g", ds.eta);
    os << "# qht-dataset v1, state=" << ds.state_label << ", eta=" << buf
       << ", n=" << ds.records.size() << ", seed=" << ds.seed << "\n";
    for (const auto& rec : ds.records) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", rec.y, rec.phi);
        os << buf;
    }
    if (!os) throw std::runtime_error("save_dataset: write failed for '" + path + "'");
}

namespace detail {
inline std::string header_field(const std::string& header, const std::string& key,
                                const char* stop = ",") {
    const std::size_t at = header.find(key);
    if (at == std::string::npos)
        throw std::runtime_error("load_dataset: header missing '" + key + "'");
    const std::size_t from = at + key.size();
    std::size_t end = header.find(stop, from);
    if (end == std::string::npos) end = header.size();
    return header.substr(from, end - from);
}
}  // namespace detail

inline QhtDataset load_dataset(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_dataset: cannot open '" + path + "'");
    std::string header;
    std::getline(is, header);
    if (header.rfind("# qht-dataset v1,", 0) != 0)
        throw std::runtime_error("load_dataset: '" + path + "' is not a qht-dataset v1 file");
    QhtDataset ds;
    // state label may contain commas; eta= is the delimiter
    const std::size_t state_at = header.find("state=");
    const std::size_t eta_at = header.find(", eta=");
    if (state_at == std::string::npos || eta_at == std::string::npos || eta_at < state_at)
        throw std::runtime_error("load_dataset: malformed header");
    ds.state_label = header.substr(state_at + 6, eta_at - state_at - 6);
    ds.eta = std::stod(detail::header_field(header, ", eta="));
    const std::size_t n = static_cast<std::size_t>(std::stoull(detail::header_field(header, ", n=")));
    ds.seed = std::stoull(detail::header_field(header, ", seed="));
    if (!(ds.eta > 0.5) || !(ds.eta <= 1.0))
        throw std::runtime_error("load_dataset: eta outside (1/2, 1]");
    ds.records.reserve(n);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("load_dataset: malformed row '" + line + "'");
        QhtRecord rec{};
        try {
            rec.y = std::stod(line.substr(0, comma));
            rec.phi = std::stod(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw std::runtime_error("load_dataset: malformed row '" + line + "'");
        }
        if (!std::isfinite(rec.y) || !std::isfinite(rec.phi))
            throw std::runtime_error("load_dataset: non-finite record");
        if (rec.phi < 0.0 || rec.phi > M_PI)
            throw std::runtime_error("load_dataset: phi outside [0, pi]");
        ds.records.push_back(rec);
    }
    if (ds.records.size() != n)
        throw std::runtime_error("load_dataset: record count does not match header n");
    return ds;
}

}  // namespace qht

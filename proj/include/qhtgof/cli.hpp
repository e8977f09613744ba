#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <csignal>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "qhtgof/estimator.hpp"
#include "qhtgof/pattern.hpp"
#include "qhtgof/simulator.hpp"
#include "qhtgof/states.hpp"
#include "qhtgof/testing.hpp"
#include "qhtgof/version.hpp"

namespace qht::cli {

// Exit codes: 0 success, 1 runtime failure, 2 validation failure.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeError = 1;
inline constexpr int kValidationError = 2;

struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline std::string slug(const std::string& label) {
    std::string out;
    for (char c : label) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-')
            out += c;
        else if (out.empty() || out.back() != '-')
            out += '-';
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out;
}

inline std::string cache_dir_from_env() {
    const char* dir = std::getenv("QHT_GOF_CACHE");
    return dir ? std::string(dir) : std::string();
}

inline void require_eta_cli(double eta) {
    if (!(eta > 0.5) || !(eta <= 1.0))
        throw validation_error("eta: must lie in (1/2, 1]");
}

// SIGINT flips the shared interrupt flag; replicate loops poll it.
inline void install_sigint_handler() {
    std::signal(SIGINT, [](int) { interrupt_flag().store(true); });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// State descriptors in JSON
// ---------------------------------------------------------------------------

inline StateSpec state_from_json(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) throw validation_error(path + ": must be an object");
    if (!j.contains("kind") || !j.at("kind").is_string())
        throw validation_error(path + ".kind: required string");
    const std::string kind = j.at("kind").get<std::string>();
    auto num = [&](const char* field) {
        if (!j.contains(field) || !j.at(field).is_number())
            throw validation_error(path + "." + field + ": required number for kind '" + kind + "'");
        return j.at(field).get<double>();
    };
    if (kind == "vacuum") return StateSpec::vacuum();
    if (kind == "single_photon") return StateSpec::single_photon();
    if (kind == "coherent") return StateSpec::coherent(num("q0"));
    if (kind == "cat") return StateSpec::cat(num("q0"));
    if (kind == "thermal") return StateSpec::thermal(num("beta"));
    if (kind == "squeezed") return StateSpec::squeezed(num("photons"), num("xi"));
    throw validation_error(path + ".kind: unknown state kind '" + kind + "'");
}

inline nlohmann::json state_to_json(const StateSpec& s) {
    nlohmann::json j;
    switch (s.kind) {
        case StateKind::vacuum: j["kind"] = "vacuum"; break;
        case StateKind::single_photon: j["kind"] = "single_photon"; break;
        case StateKind::coherent: j["kind"] = "coherent"; j["q0"] = s.q0; break;
        case StateKind::cat: j["kind"] = "cat"; j["q0"] = s.q0; break;
        case StateKind::thermal: j["kind"] = "thermal"; j["beta"] = s.beta; break;
        case StateKind::squeezed:
            j["kind"] = "squeezed";
            j["photons"] = s.photons;
            j["xi"] = s.xi;
            break;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Experiment specification
// ---------------------------------------------------------------------------

struct ExperimentSpec {
    int schema_version = 1;
    std::string case_id;  // "A", "B" or "custom"
    StateSpec tau;
    std::vector<StateSpec> alternatives;
    double eta = 1.0;
    int bandwidth = 1;
    std::size_t n = 0;
    int runs = 0;
    std::vector<double> alphas;
    std::uint64_t seed = 0;
    std::string output_dir;
};

inline ExperimentSpec parse_experiment_spec(const nlohmann::json& j) {
    if (!j.is_object()) throw validation_error("spec: must be a JSON object");
    ExperimentSpec spec;
    if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer())
        throw validation_error("spec.schema_version: required integer");
    spec.schema_version = j.at("schema_version").get<int>();
    if (spec.schema_version != 1)
        throw validation_error("spec.schema_version: unsupported version (expected 1)");

    if (!j.contains("case_id") || !j.at("case_id").is_string())
        throw validation_error("spec.case_id: required string (\"A\", \"B\" or \"custom\")");
    spec.case_id = j.at("case_id").get<std::string>();
    if (spec.case_id != "A" && spec.case_id != "B" && spec.case_id != "custom")
        throw validation_error("spec.case_id: must be \"A\", \"B\" or \"custom\"");

    if (!j.contains("tau")) throw validation_error("spec.tau: required state object");
    spec.tau = state_from_json(j.at("tau"), "spec.tau");

    if (!j.contains("alternatives") || !j.at("alternatives").is_array() ||
        j.at("alternatives").empty())
        throw validation_error("spec.alternatives: required nonempty array of state objects");
    int idx = 0;
    for (const auto& alt : j.at("alternatives"))
        spec.alternatives.push_back(
            state_from_json(alt, "spec.alternatives[" + std::to_string(idx++) + "]"));

    if (!j.contains("eta") || !j.at("eta").is_number())
        throw validation_error("spec.eta: required number");
    spec.eta = j.at("eta").get<double>();
    if (!(spec.eta > 0.5) || !(spec.eta <= 1.0))
        throw validation_error("spec.eta: must lie in (1/2, 1]");

    if (!j.contains("bandwidth") || !j.at("bandwidth").is_number_integer())
        throw validation_error("spec.bandwidth: required integer");
    spec.bandwidth = j.at("bandwidth").get<int>();
    if (spec.bandwidth < 1) throw validation_error("spec.bandwidth: must be >= 1");

    if (!j.contains("n") || !j.at("n").is_number_integer())
        throw validation_error("spec.n: required integer");
    const long long n = j.at("n").get<long long>();
    if (n < 2) throw validation_error("spec.n: must be >= 2");
    spec.n = static_cast<std::size_t>(n);

    if (!j.contains("runs") || !j.at("runs").is_number_integer())
        throw validation_error("spec.runs: required integer");
    spec.runs = j.at("runs").get<int>();
    if (spec.runs < 100) throw validation_error("spec.runs: must be >= 100");

    if (!j.contains("alphas") || !j.at("alphas").is_array() || j.at("alphas").empty())
        throw validation_error("spec.alphas: required nonempty array of levels");
    for (const auto& a : j.at("alphas")) {
        if (!a.is_number()) throw validation_error("spec.alphas: entries must be numbers");
        const double alpha = a.get<double>();
        if (!(alpha > 0.0 && alpha < 1.0))
            throw validation_error("spec.alphas: levels must lie in (0, 1)");
        spec.alphas.push_back(alpha);
    }

    if (!j.contains("seed") || !j.at("seed").is_number_unsigned())
        throw validation_error("spec.seed: required unsigned integer");
    spec.seed = j.at("seed").get<std::uint64_t>();

    if (!j.contains("output_dir") || !j.at("output_dir").is_string())
        throw validation_error("spec.output_dir: required string");
    spec.output_dir = j.at("output_dir").get<std::string>();
    if (spec.output_dir.empty()) throw validation_error("spec.output_dir: must be nonempty");
    return spec;
}

// ---------------------------------------------------------------------------
// run subcommand
// ---------------------------------------------------------------------------

struct RunOptions {
    std::string spec_path;
    bool paper_scale = false;
    int jobs = 0;
    bool seed_override = false;
    std::uint64_t seed = 0;
    std::string out_override;
};

inline int run_experiment(const RunOptions& opt) {
    nlohmann::json sj;
    std::string raw;
    try {
        raw = detail::read_file(opt.spec_path);
        sj = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error(std::string("spec: JSON parse error: ") + e.what());
    }
    ExperimentSpec spec = parse_experiment_spec(sj);
    if (opt.paper_scale) spec.runs = 1000;
    if (opt.seed_override) spec.seed = opt.seed;
    if (!opt.out_override.empty()) spec.output_dir = opt.out_override;
    for (double alpha : spec.alphas)
        if (alpha * spec.runs < 1.0)
            throw validation_error("spec.alphas: alpha * runs must be >= 1");

    const std::string spec_sha = detail::hex64(detail::fnv1a(raw));
    const std::string provenance_line = std::string("# ") + kVersionString +
                                        ", spec_sha=" + spec_sha +
                                        ", seed=" + std::to_string(spec.seed);
    std::filesystem::create_directories(spec.output_dir);
    detail::install_sigint_handler();

    std::cout << kVersionString << " run: case " << spec.case_id << ", tau " << spec.tau.label()
              << ", eta " << spec.eta << ", N " << spec.bandwidth << ", n " << spec.n << ", runs "
              << spec.runs << "\n";

    const int dim = std::max(40, spec.bandwidth);
    const auto tau_matrix = make_state(spec.tau, dim);
    auto table = std::make_shared<const PatternTable>(
        load_or_build_table(spec.eta, spec.bandwidth, 8.0, default_grid_step(spec.eta),
                            detail::cache_dir_from_env(), opt.jobs));
    const EstimatorConfig cfg(spec.bandwidth, spec.eta, tau_matrix, table);

    nlohmann::json prov;
    prov["version"] = kVersionString;
    prov["spec_sha"] = spec_sha;
    prov["seed"] = spec.seed;

    std::ostringstream summary;
    summary << provenance_line << "\n";
    summary << "case,tau,state,metric,eta,N,n,runs,alpha,nu,median,mse,value\n";
    bool interrupted = false;

    try {
        // one batch of null replicates calibrates every alpha level
        auto null_values =
            replicate_mn(spec.tau, cfg, spec.n, spec.runs, spec.seed, kCalibrationStream, opt.jobs);
        std::vector<double> nus;
        for (double alpha : spec.alphas) {
            nus.push_back(threshold_from_null_values(null_values, alpha));
            std::cout << "calibrated nu(alpha=" << alpha << ") = " << nus.back() << "\n";
        }

        for (std::size_t ai = 0; ai < spec.alternatives.size(); ++ai) {
            const StateSpec& alt = spec.alternatives[ai];
            const bool is_level = alt.label() == spec.tau.label();
            const double truth = l2_distance_sq(make_state(alt, dim), tau_matrix);
            auto values = replicate_mn(alt, cfg, spec.n, spec.runs, spec.seed,
                                       mix64(kEvaluationStream + ai), opt.jobs);
            auto rep = summarize_replicates(values, truth, spec.seed);

            const std::string base = spec.case_id + "_" + std::to_string(ai) + "_" +
                                     detail::slug(alt.label());
            {
                std::ofstream cs(spec.output_dir + "/replicates_" + base + ".csv",
                                 std::ios::trunc);
                cs << provenance_line << "\n" << "replicate,mn\n";
                char buf[48];
                for (std::size_t r = 0; r < rep.values.size(); ++r) {
                    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", r, rep.values[r]);
                    cs << buf;
                }
            }
            for (std::size_t aj = 0; aj < spec.alphas.size(); ++aj) {
                const double alpha = spec.alphas[aj];
                const double nu = nus[aj];
                const double fraction = rejection_fraction(rep.values, nu);
                nlohmann::json out;
                out["case"] = spec.case_id;
                out["state"] = alt.label();
                out["tau"] = spec.tau.label();
                out["eta"] = spec.eta;
                out["N"] = spec.bandwidth;
                out["n"] = spec.n;
                out["alpha"] = alpha;
                out["nu"] = nu;
                out["runs"] = spec.runs;
                out["median"] = rep.median;
                out["mse"] = rep.mse;
                out["metric"] = is_level ? "level" : "power";
                out["level_or_power"] = fraction;
                out["seed"] = spec.seed;
                out["ground_truth_distance"] = truth;
                out["provenance"] = prov;
                char pct[24];
                std::snprintf(pct, sizeof pct, "%g", 100.0 * alpha);
                std::ofstream js(spec.output_dir + "/report_" + base + "_a" + pct + ".json",
                                 std::ios::trunc);
                js << out.dump(2) << "\n";

                char row[256];
                std::snprintf(row, sizeof row, "%s,%s,%s,%s,%.17g,%d,%zu,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                              spec.case_id.c_str(), spec.tau.label().c_str(), alt.label().c_str(),
                              is_level ? "level" : "power", spec.eta, spec.bandwidth, spec.n,
                              spec.runs, alpha, nu, rep.median, rep.mse, fraction);
                summary << row;
            }
            std::cout << "alternative " << alt.label() << ": median " << rep.median << ", mse "
                      << rep.mse << "\n";
        }
    } catch (const interrupted_error&) {
        interrupted = true;
        std::cerr << "interrupted; flushing completed results\n";
    }

    std::ofstream ss(spec.output_dir + "/summary.csv", std::ios::trunc);
    ss << summary.str();
    ss.close();
    std::cout << "wrote " << spec.output_dir << "/summary.csv\n";
    return interrupted ? kRuntimeError : kOk;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run(const std::vector<std::string>& args) {
    CLI::App app{std::string(kVersionString) +
                 " - goodness-of-fit testing for quantum homodyne tomography data"};
    app.require_subcommand(1);

    // patterns
    auto* patterns = app.add_subcommand(
        "patterns", "Tabulate pi^{-1} f^eta_{j,k} on a grid and write a CSV");
    int pj = 0, pk = 0;
    double peta = 1.0, px_max = 5.0, pstep = 0.01;
    std::string pout = "patterns.csv";
    patterns->add_option("--j", pj, "row index j")->required();
    patterns->add_option("--k", pk, "column index k")->required();
    patterns->add_option("--eta", peta, "detection efficiency in (1/2, 1]");
    patterns->add_option("--x-max", px_max, "tabulate on [-x_max, x_max]");
    patterns->add_option("--step", pstep, "grid step");
    patterns->add_option("--out", pout, "output CSV path");

    // distance
    auto* distance = app.add_subcommand("distance", "Squared L2 distance between two states");
    std::string da, db;
    int ddim = 40;
    distance->add_option("--a", da, "first state, e.g. vacuum or coherent(3)")->required();
    distance->add_option("--b", db, "second state")->required();
    distance->add_option("--dim", ddim, "truncation dimension");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Generate a noisy homodyne dataset CSV");
    std::string sstate, sout = "dataset.csv";
    std::uint64_t sseed = 0;
    std::size_t sn = 0;
    double seta = 1.0;
    simulate->add_option("--state", sstate, "state descriptor")->required();
    simulate->add_option("--n", sn, "number of records")->required();
    simulate->add_option("--eta", seta, "detection efficiency in (1/2, 1]");
    simulate->add_option("--seed", sseed, "RNG seed");
    simulate->add_option("--out", sout, "output path");

    // estimate
    auto* estimate = app.add_subcommand("estimate", "Compute M_n for a dataset against a null state");
    std::string edata, etau;
    int ebw = 0, ejobs = 0;
    estimate->add_option("--data", edata, "dataset CSV path")->required();
    estimate->add_option("--tau", etau, "null-state descriptor")->required();
    estimate->add_option("--bandwidth", ebw, "truncation bandwidth N")->required();
    estimate->add_option("--jobs", ejobs, "worker threads (0 = auto)");

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "Monte Carlo threshold nu for a null state");
    std::string ctau;
    double ceta = 1.0, calpha = 0.05;
    int cbw = 0, cruns = 1000, cjobs = 0;
    std::size_t cn = 50000;
    std::uint64_t cseed = 0;
    calibrate->add_option("--tau", ctau, "null-state descriptor")->required();
    calibrate->add_option("--eta", ceta, "detection efficiency in (1/2, 1]");
    calibrate->add_option("--bandwidth", cbw, "truncation bandwidth N")->required();
    calibrate->add_option("--n", cn, "records per replicate");
    calibrate->add_option("--alpha", calpha, "test level in (0, 1)");
    calibrate->add_option("--runs", cruns, "null replicates");
    calibrate->add_option("--seed", cseed, "RNG seed");
    calibrate->add_option("--jobs", cjobs, "worker threads (0 = auto)");

    // run
    auto* runcmd = app.add_subcommand("run", "Run a full experiment from a JSON spec");
    RunOptions ro;
    runcmd->add_option("--spec", ro.spec_path, "experiment spec JSON")->required();
    runcmd->add_flag("--paper-scale", ro.paper_scale, "use 1000 replicates");
    runcmd->add_option("--jobs", ro.jobs, "worker threads (0 = auto)");
    auto* seed_opt = runcmd->add_option("--seed", ro.seed, "override the spec seed");
    runcmd->add_option("--out", ro.out_override, "override the spec output_dir");

    std::vector<std::string> argv_like = args;
    argv_like.insert(argv_like.begin(), "qht-gof");
    std::vector<char*> argv;
    for (auto& a : argv_like) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kValidationError;
    }

    try {
        if (*patterns) {
            detail::require_eta_cli(peta);
            if (pj < 0 || pk < 0) throw validation_error("j, k: must be >= 0");
            if (!(pstep > 0.0)) throw validation_error("step: must be positive");
            const int j = std::max(pj, pk), k = std::min(pj, pk);
            const auto ker = qht::detail::build_radial_kernel(j, k, peta, 0.005);
            std::ofstream os(pout, std::ios::trunc);
            if (!os) throw std::runtime_error("cannot open '" + pout + "'");
            os << "# " << kVersionString << ", patterns j=" << pj << " k=" << pk
               << " eta=" << peta << " step=" << pstep << "\n";
            os << "x,value\n";
            char buf[64];
            const long count = std::lround(2.0 * px_max / pstep);
            for (long i = 0; i <= count; ++i) {
                const double x = -px_max + pstep * static_cast<double>(i);
                std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", x,
                              qht::detail::eval_radial(ker, x) / M_PI);
                os << buf;
            }
            std::cout << "wrote " << pout << "\n";
            return kOk;
        }
        if (*distance) {
            StateSpec a, b;
            try {
                a = StateSpec::parse(da);
                b = StateSpec::parse(db);
            } catch (const std::invalid_argument& e) {
                throw validation_error(e.what());
            }
            if (ddim < 1) throw validation_error("dim: must be >= 1");
            std::printf("%.10g\n", l2_distance_sq(make_state(a, ddim), make_state(b, ddim)));
            return kOk;
        }
        if (*simulate) {
            detail::require_eta_cli(seta);
            StateSpec st;
            try {
                st = StateSpec::parse(sstate);
            } catch (const std::invalid_argument& e) {
                throw validation_error(e.what());
            }
            if (sn < 1) throw validation_error("n: must be >= 1");
            save_dataset(generate_dataset(st, sn, seta, sseed), sout);
            std::cout << "wrote " << sout << "\n";
            return kOk;
        }
        if (*estimate) {
            if (ebw < 1) throw validation_error("bandwidth: must be >= 1");
            StateSpec tau_s;
            try {
                tau_s = StateSpec::parse(etau);
            } catch (const std::invalid_argument& e) {
                throw validation_error(e.what());
            }
            const QhtDataset ds = load_dataset(edata);
            const auto tau = make_state(tau_s, std::max(40, ebw));
            auto table = std::make_shared<const PatternTable>(
                load_or_build_table(ds.eta, ebw, 8.0, default_grid_step(ds.eta),
                                    detail::cache_dir_from_env(), ejobs));
            std::printf("%.10g\n", compute_mn(ds, EstimatorConfig(ebw, ds.eta, tau, table)));
            return kOk;
        }
        if (*calibrate) {
            detail::require_eta_cli(ceta);
            if (cbw < 1) throw validation_error("bandwidth: must be >= 1");
            if (cruns < 100) throw validation_error("runs: must be >= 100");
            if (!(calpha > 0.0 && calpha < 1.0)) throw validation_error("alpha: must lie in (0, 1)");
            if (calpha * cruns < 1.0) throw validation_error("alpha * runs: must be >= 1");
            StateSpec tau_s;
            try {
                tau_s = StateSpec::parse(ctau);
            } catch (const std::invalid_argument& e) {
                throw validation_error(e.what());
            }
            const auto tau = make_state(tau_s, std::max(40, cbw));
            auto table = std::make_shared<const PatternTable>(
                load_or_build_table(ceta, cbw, 8.0, default_grid_step(ceta),
                                    detail::cache_dir_from_env(), cjobs));
            detail::install_sigint_handler();
            const EstimatorConfig cfg(cbw, ceta, tau, table);
            std::printf("%.10g\n", calibrate_threshold(tau_s, cfg, cn, calpha, cruns, cseed, cjobs));
            return kOk;
        }
        if (*runcmd) {
            ro.seed_override = seed_opt->count() > 0;
            return run_experiment(ro);
        }
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidationError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidationError;
    } catch (const interrupted_error&) {
        std::cerr << "interrupted\n";
        return kRuntimeError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return kOk;
}

}  // namespace qht::cli

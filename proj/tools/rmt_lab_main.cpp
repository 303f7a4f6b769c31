// rmt-lab: reproducible random-matrix experiments with CSV/JSON artifacts.
//
//   rmt-lab <experiment> [--config file.json] [overrides...]
//   rmt-lab validate --config file.json
//
// Exit codes: 0 success, 1 numeric failure, 2 usage/config error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "rmtlab/experiments.hpp"

using namespace rmtlab;

namespace {

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stoi(tok));
    }
    if (out.empty()) throw ConfigError("empty integer list");
    return out;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    // seed-level parallelism only; keep BLAS single-threaded and deterministic
    setenv("OPENBLAS_NUM_THREADS", "1", 0);

    CLI::App app{"rmt-lab: random-matrix spectral statistics experiments"};

    std::string experiment;
    app.add_option("experiment", experiment,
                   "experiment name (semicircle, mp-law, local-law, rigidity, dbm-relax, gaps, "
                   "correlations, counting-tail, reverse-flow, entropy-decay, hessian-audit) "
                   "or 'validate'")
        ->required();

    std::string config_path, n_str, kind_str, dist_str, t_str, k_str, r_str, family, output;
    int seeds = -1, workers = -1, order = -1, m = -1;
    double beta = -1, dt = -1, horizon = -1, e_center = std::nan(""), b_window = -1;
    double eta_exp = std::nan(""), tau = -1, amplitude = -1, gamma_gap = -1, interval_count = -1;
    std::uint64_t seed_base = 0;

    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--n", n_str, "matrix size(s), comma separated");
    app.add_option("--m", m, "covariance row count M (default 2N)");
    app.add_option("--kind", kind_str, "ensemble kind");
    app.add_option("--dist", dist_str, "entry distribution");
    app.add_option("--seeds", seeds, "number of seeds");
    auto* base_opt = app.add_option("--seed-base", seed_base, "base seed");
    app.add_option("--workers", workers, "worker threads (default: hardware)");
    app.add_option("--beta", beta, "flow beta");
    app.add_option("--dt", dt, "integrator step");
    app.add_option("--horizon", horizon, "flow horizon");
    app.add_option("--e", e_center, "center energy E");
    app.add_option("--b", b_window, "energy half-window b");
    app.add_option("--eta-exp", eta_exp, "eta = N^eta_exp for the local law");
    app.add_option("--tau", tau, "OU interpolation time");
    app.add_option("--order", order, "correlation order (1..3)");
    app.add_option("--interval-count", interval_count, "N|I| for counting-tail");
    app.add_option("--t-list", t_str, "times, comma separated");
    app.add_option("--k-list", k_str, "orders K, comma separated");
    app.add_option("--r-list", r_str, "localization scales R, comma separated");
    app.add_option("--family", family, "reverse-flow family (compact|hermite4)");
    app.add_option("--amplitude", amplitude, "family amplitude");
    app.add_option("--gamma-gap", gamma_gap, "classical gap for entropy-decay");
    app.add_option("--output", output, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (experiment == "validate") {
            if (config_path.empty()) {
                std::cerr << "error: validate needs --config\n";
                return 2;
            }
            ExperimentConfig cfg = config_from_json(load_json(config_path));
            std::cout << "ok: valid " << cfg.experiment << " config (" << cfg.seed_count
                      << " seeds, n=";
            for (std::size_t i = 0; i < cfg.n_list.size(); ++i)
                std::cout << (i ? "," : "") << cfg.n_list[i];
            std::cout << ")\n";
            return 0;
        }

        Json j = config_path.empty() ? Json{{"experiment", experiment}} : load_json(config_path);
        j["experiment"] = experiment;
        // flag overrides
        if (!n_str.empty()) j["ensemble"]["n"] = parse_int_list(n_str);
        if (m >= 0) j["ensemble"]["m"] = m;
        if (!kind_str.empty()) j["ensemble"]["kind"] = kind_str;
        if (!dist_str.empty()) j["ensemble"]["dist"] = dist_str;
        if (seeds >= 0) j["seeds"]["count"] = seeds;
        if (base_opt->count() > 0) j["seeds"]["base"] = seed_base;
        if (workers >= 0) j["workers"] = workers;
        if (beta >= 0) j["flow"]["beta"] = beta;
        if (dt >= 0) j["flow"]["dt"] = dt;
        if (horizon >= 0) j["flow"]["horizon"] = horizon;
        if (!std::isnan(e_center)) j["stats"]["e"] = e_center;
        if (b_window >= 0) j["stats"]["b"] = b_window;
        if (!std::isnan(eta_exp)) j["stats"]["eta_exp"] = eta_exp;
        if (tau >= 0) j["stats"]["tau"] = tau;
        if (order >= 0) j["stats"]["order"] = order;
        if (interval_count >= 0) j["stats"]["interval_count"] = interval_count;
        if (!t_str.empty()) j["stats"]["t_list"] = parse_double_list(t_str);
        if (!k_str.empty()) j["stats"]["k_list"] = parse_int_list(k_str);
        if (!r_str.empty()) j["stats"]["r_list"] = parse_double_list(r_str);
        if (!family.empty()) j["stats"]["family"] = family;
        if (amplitude >= 0) j["stats"]["amplitude"] = amplitude;
        if (gamma_gap >= 0) j["stats"]["gamma_gap"] = gamma_gap;
        if (!output.empty()) j["output_dir"] = output;
        if (!j.contains("output_dir")) j["output_dir"] = "out/" + experiment;

        ExperimentConfig cfg = config_from_json(j);
        ExperimentResult res = run_and_write(cfg);
        std::cout << res.summary["results"].dump(2) << "\n";
        std::cout << "wrote " << cfg.output_dir << "/results.csv, summary.json, meta.log\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 1;
    }
}

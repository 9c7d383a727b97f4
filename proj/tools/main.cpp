// rtedmd: simulate, estimate and analyse Koopman generators from the command line.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rtedmd/baselines.hpp"
#include "rtedmd/errors.hpp"
#include "rtedmd/estimator_rt.hpp"
#include "rtedmd/experiments.hpp"
#include "rtedmd/io.hpp"
#include "rtedmd/log.hpp"
#include "rtedmd/spectral.hpp"
#include "rtedmd/sysid.hpp"

namespace fs = std::filesystem;
using namespace rtedmd;

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::vector<std::string> methods;
    std::vector<double> freqs;
    std::optional<int> trials;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config,-c", o.config, "JSON experiment config");
    cmd->add_option("--seed", o.seed, "Base random seed");
    cmd->add_option("--out-dir,-o", o.out_dir, "Output directory (default: $RTEDMD_OUT_DIR or ./results)");
    cmd->add_option("--method", o.methods, "Estimator(s): rt, rt_mod, edmd, gedmd");
    cmd->add_option("--freq", o.freqs, "Observation rate(s) in Hz");
    cmd->add_option("--trials", o.trials, "Trials per frequency")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const Overrides& o, ExperimentConfig base) {
    ExperimentConfig c = o.config.empty() ? std::move(base) : load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    if (!o.out_dir.empty()) c.out_dir = o.out_dir;
    if (c.out_dir.empty()) c.out_dir = default_out_dir();
    if (!o.methods.empty()) {
        c.estimators.clear();
        for (const auto& m : o.methods) c.estimators.push_back(method_from_string(m));
    }
    if (!o.freqs.empty()) c.sweep.frequencies = o.freqs;
    if (o.trials) c.sweep.trials = *o.trials;
    return c;
}

double finest(const ExperimentConfig& c) {
    double f = 0.0;
    for (double x : c.sweep.frequencies) f = std::max(f, x);
    return f;
}

TrajectoryEnsemble simulate_from(const ExperimentConfig& c, double rate) {
    const std::uint64_t seed = trial_seed(c.seed, 0, 0);
    const auto initial = sample_initial_states(c.sampling, seed);
    return simulate_paths(c.build_model(), c.domain, initial, c.sampling.paths, sim_config_for(c, rate, seed),
                          c.sampling.threads);
}

nlohmann::json reference_json(const ExperimentConfig& c) {
    const SdeModel model = c.build_model();
    const auto ref = !c.model.reference.empty() ? c.model.reference : model.analytic_spectrum.value_or(std::vector<Complex>{});
    nlohmann::json out = nlohmann::json::array();
    for (const auto& z : ref) out.push_back({z.real(), z.imag()});
    return out;
}

int cmd_simulate(const Overrides& o) {
    ExperimentConfig c = resolve(o, default_ou_config());
    c.validate();
    const double rate = finest(c);
    const TrajectoryEnsemble ens = simulate_from(c, rate);
    fs::create_directories(c.out_dir);
    write_ensemble_binary(ens, c.out_dir / "ensemble.bin");
    write_ensemble_csv(ens, c.out_dir / "ensemble.csv");
    std::cout << "simulated " << ens.num_initial() << " x " << ens.paths_per_state() << " paths at "
              << format_double(rate) << " Hz; exit fraction " << format_double(ens.exit_fraction()) << '\n';
    return 0;
}

int cmd_estimate(const Overrides& o, const std::string& ensemble_path) {
    ExperimentConfig c = resolve(o, default_ou_config());
    if (c.estimators.size() != 1 && !o.methods.empty()) throw ConfigError("estimate takes a single --method");
    const Method method = o.methods.empty() ? Method::Rt : c.estimators.front();
    c.estimators = {method};
    c.validate();
    const TrajectoryEnsemble ens = ensemble_path.empty() ? simulate_from(c, finest(c)) : read_ensemble_binary(ensemble_path);
    GeneratorMatrix g = run_method(method, ens, c.dictionary, c);
    g.metadata["method"] = std::string(to_string(method));
    g.metadata["rate"] = ens.config().rate;
    g.metadata["seed"] = c.seed;
    g.metadata["reference"] = reference_json(c);
    if (c.sweep.n_match > 0) g.metadata["n_match"] = c.sweep.n_match;
    const fs::path out = c.out_dir / ("generator_" + std::string(to_string(method)) + ".json");
    write_generator(g, out);
    std::cout << "wrote " << out.string() << '\n';
    return 0;
}

int cmd_spectrum(const Overrides& o, const std::string& generator_path) {
    if (generator_path.empty()) throw ConfigError("spectrum needs --generator");
    const GeneratorMatrix g = read_generator(generator_path);
    const fs::path out_dir = !o.out_dir.empty() ? fs::path(o.out_dir) : fs::path(generator_path).parent_path();

    std::vector<Complex> reference;
    if (!o.config.empty()) {
        const ExperimentConfig c = load_config(o.config);
        for (const auto& z : reference_json(c)) reference.emplace_back(z[0].get<double>(), z[1].get<double>());
    } else if (g.metadata.contains("reference")) {
        for (const auto& z : g.metadata.at("reference")) reference.emplace_back(z[0].get<double>(), z[1].get<double>());
    }

    const SpectrumResult s = eigendecompose(g);
    const std::string method = g.metadata.value("method", std::string(to_string(g.provenance)));
    const double rate = g.metadata.value("rate", 0.0);
    std::optional<Matching> match;
    if (!reference.empty()) {
        const int n = g.metadata.value("n_match", static_cast<int>(std::min<std::size_t>(reference.size(), s.eigenvalues.size())));
        match = match_and_mae(reference, s.eigenvalues, n);
    }

    CsvWriter csv(out_dir / ("spectrum_" + method + "_" + format_double(rate) + ".csv"),
                  {"method", "rate", "index", "real", "imag", "true_index", "true_real", "true_imag", "abs_error"});
    for (std::size_t k = 0; k < s.eigenvalues.size(); ++k) {
        const Complex z = s.eigenvalues[k];
        csv.field(method).field(rate).field(static_cast<int>(k)).field(z.real()).field(z.imag());
        int ti = -1;
        if (match)
            for (const auto& [t, e] : match->pairs)
                if (e == static_cast<int>(k)) ti = t;
        if (ti < 0) {
            csv.field(std::string()).field(std::string()).field(std::string()).field(std::string());
        } else {
            const Complex r = reference[static_cast<std::size_t>(ti)];
            csv.field(ti).field(r.real()).field(r.imag()).field(std::abs(r - z));
        }
        csv.end_row();
    }
    CsvWriter mae(out_dir / "mae_summary.csv", {"method", "rate", "n_match", "mae"});
    mae.field(method).field(rate);
    if (match) mae.field(static_cast<int>(match->pairs.size())).field(match->mae);
    else mae.field(0).field(std::string("nan"));
    mae.end_row();

    for (std::size_t k = 0; k < s.eigenvalues.size(); ++k)
        std::cout << format_double(s.eigenvalues[k].real()) << (s.eigenvalues[k].imag() < 0 ? " - " : " + ")
                  << format_double(std::abs(s.eigenvalues[k].imag())) << "i\n";
    if (match) std::cout << "MAE " << format_double(match->mae) << '\n';
    return 0;
}

int cmd_sysid(const Overrides& o, const std::string& generator_path) {
    fs::path out_dir;
    GeneratorMatrix g = [&] {
        if (!generator_path.empty()) {
            out_dir = !o.out_dir.empty() ? fs::path(o.out_dir) : fs::path(generator_path).parent_path();
            return read_generator(generator_path);
        }
        ExperimentConfig c = resolve(o, default_ou_config());
        c.estimators = {Method::Rt};
        c.validate();
        out_dir = c.out_dir;
        const TrajectoryEnsemble ens = simulate_from(c, c.sysid.rate);
        return estimate_rt(ens, c.sysid.dictionary, c.rt);
    }();
    const IdentifiedModel model = identify(g);
    write_identified_model(model, out_dir / "identified_model.txt");
    const auto drift = model.drift_polynomials();
    const auto cov = model.covariance_polynomials();
    for (std::size_t i = 0; i < drift.size(); ++i) std::cout << "f" << i + 1 << "(x) = " << drift[i].to_string() << '\n';
    for (std::size_t i = 0; i < cov.size(); ++i)
        for (std::size_t j = i; j < cov.size(); ++j)
            std::cout << "bbT" << i + 1 << j + 1 << "(x) = " << cov[i][j].to_string() << '\n';
    return 0;
}

int cmd_reconstruct(const Overrides& o) {
    ExperimentConfig c = resolve(o, default_ou_config());
    const ReconstructionReport r = run_reconstruction(c);
    std::cout << "pathwise mean |error| " << format_double(r.mean_abs_error) << ", max " << format_double(r.max_abs_error)
              << '\n';
    return 0;
}

void print_medians(const ExperimentConfig& c, const SweepReport& report) {
    const std::vector<int> paths = c.sweep.paths.empty() ? std::vector<int>{c.sampling.paths} : c.sweep.paths;
    for (int j : paths)
        for (double f : c.sweep.frequencies)
            for (Method m : c.estimators)
                std::cout << to_string(m) << " J=" << j << " " << format_double(f) << " Hz: median MAE "
                          << format_double(report.median(m, f, j)) << '\n';
}

int cmd_experiment(const std::string& which, const Overrides& o) {
    if (which == "ou") {
        const ExperimentConfig c = resolve(o, default_ou_config());
        print_medians(c, run_ou_experiment(c));
    } else if (which == "lv") {
        const ExperimentConfig c = resolve(o, default_lv_config());
        print_medians(c, run_lv_experiment(c));
    } else {
        const ExperimentConfig c = resolve(o, default_ablation_config());
        const AblationReport r = run_filtered_resolvent_ablation(c);
        std::cout << "exit fraction " << format_double(r.exit_fraction) << '\n';
        for (const auto& row : r.rows)
            std::cout << "lambda " << format_double(row.lambda) << ": stopped " << format_double(row.stopped_error)
                      << ", filtered " << format_double(row.filtered_error) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Koopman generator estimation from stochastic trajectories"};
    app.require_subcommand(1);
    app.fallthrough();
    bool quiet = false;
    bool verbose = false;
    app.add_flag("--quiet,-q", quiet, "Suppress warnings");
    app.add_flag("--verbose,-v", verbose, "Progress messages");

    Overrides sim_o, est_o, spec_o, sysid_o, rec_o, exp_o;
    std::string ensemble_path, generator_path;

    auto* sim = app.add_subcommand("simulate", "Simulate an ensemble and write ensemble.bin / ensemble.csv");
    add_common(sim, sim_o);
    auto* est = app.add_subcommand("estimate", "Fit a generator matrix and write generator_<method>.json");
    add_common(est, est_o);
    est->add_option("--ensemble", ensemble_path, "Binary ensemble from 'simulate' (default: simulate afresh)");
    auto* spec = app.add_subcommand("spectrum", "Eigenvalues of a generator file and the MAE against the reference");
    add_common(spec, spec_o);
    spec->add_option("--generator,-g", generator_path, "Generator JSON file")->required();
    auto* sysid = app.add_subcommand("sysid", "Recover drift and diffusion (identified_model.txt)");
    add_common(sysid, sysid_o);
    sysid->add_option("--generator,-g", generator_path, "Generator JSON file (default: estimate from the config)");
    auto* rec = app.add_subcommand("reconstruct", "Replay the true model's noise under the identified model");
    add_common(rec, rec_o);

    auto* exp = app.add_subcommand("experiment", "Run a study: ou, lv or ablation");
    exp->require_subcommand(1);
    std::string which;
    for (const char* name : {"ou", "lv", "ablation"}) {
        auto* sub = exp->add_subcommand(name, std::string("The ") + name + " study");
        add_common(sub, exp_o);
        sub->callback([&which, name] { which = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    set_log_level(quiet ? LogLevel::Quiet : verbose ? LogLevel::Info : LogLevel::Warn);

    try {
        if (*sim) return cmd_simulate(sim_o);
        if (*est) return cmd_estimate(est_o, ensemble_path);
        if (*spec) return cmd_spectrum(spec_o, generator_path);
        if (*sysid) return cmd_sysid(sysid_o, generator_path);
        if (*rec) return cmd_reconstruct(rec_o);
        if (*exp) return cmd_experiment(which, exp_o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const DimensionError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const DictionaryError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

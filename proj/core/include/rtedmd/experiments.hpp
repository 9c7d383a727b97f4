#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "rtedmd/dictionary.hpp"
#include "rtedmd/estimator_rt.hpp"
#include "rtedmd/generator.hpp"
#include "rtedmd/sde.hpp"
#include "rtedmd/spectral.hpp"

namespace rtedmd {

enum class Method { Rt, RtMod, Edmd, Gedmd };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

struct ModelSpec {
    std::string kind = "ou";          // ou | lv | zero
    double mu = -0.5;                 // ou
    double sigma = 0.02;              // ou
    LotkaVolterraParams lv;           // lv
    std::vector<Complex> reference;   // eigenvalues the MAE is measured against
};

struct SamplingSpec {
    int initial_points = 200;         // m
    int paths = 100;                  // J
    /// Initial states: uniform in the box [init_lo, init_hi], or an evenly spaced
    /// grid along its diagonal when `grid` is set.
    Eigen::VectorXd init_lo;
    Eigen::VectorXd init_hi;
    bool grid = false;
    double horizon = 5.0;
    /// Euler-Maruyama rate; each observation rate must divide it.
    double integration_rate = 1000.0;
    int threads = 1;
};

struct SweepSpec {
    std::vector<double> frequencies{100.0};
    std::vector<int> paths;           // J values; empty means {sampling.paths}
    int trials = 1;
    int lag_steps = 1;
    int n_match = 0;                  // 0: every reference eigenvalue
};

struct SysidSpec {
    bool enabled = false;
    Dictionary dictionary = monomials_up_to_degree(1, 2, true);
    double rate = 100.0;
    int reconstruct_points = 5;
    int reconstruct_paths = 1;
};

struct AblationSpec {
    std::vector<double> lambdas{5.0, 10.0, 20.0, 40.0};
    double rate = 1000.0;
};

struct ExperimentConfig {
    std::string name = "ou";
    ModelSpec model;
    Domain domain = Domain::ball(1, 2.0);
    Dictionary dictionary = monomials_up_to_degree(1, 5, false);
    SamplingSpec sampling;
    std::vector<Method> estimators{Method::Rt, Method::Gedmd, Method::Edmd};
    RtConfig rt;
    RtConfig rt_mod;
    SweepSpec sweep;
    SysidSpec sysid;
    AblationSpec ablation;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir;

    SdeModel build_model() const;
    void validate() const;
};

/// Built-in configurations; the files under configs/ spell out the same values.
ExperimentConfig default_ou_config();
ExperimentConfig default_lv_config();
ExperimentConfig default_ablation_config();

/// Overlays a JSON document on `base`. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& doc, ExperimentConfig base);
/// Chooses the base from the "experiment" key (ou, lv, ablation).
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

/// RTEDMD_OUT_DIR when set, otherwise ./results.
std::filesystem::path default_out_dir();

/// Seed for one trial, a pure function of the base seed and the trial coordinates.
std::uint64_t trial_seed(std::uint64_t seed, int trial, int paths_index);

/// Initial states for a trial, drawn from a generator seeded by `seed`.
std::vector<Eigen::VectorXd> sample_initial_states(const SamplingSpec& sampling, std::uint64_t seed);

SimConfig sim_config_for(const ExperimentConfig& config, double rate, std::uint64_t seed);

/// One estimator on one ensemble.
GeneratorMatrix run_method(Method method, const TrajectoryEnsemble& ensemble, const Dictionary& dict,
                           const ExperimentConfig& config);

struct BoxStats {
    int count = 0;
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
    double whisker_lo = 0, whisker_hi = 0;   // furthest samples within 1.5 IQR of the box
    std::vector<double> outliers;
};

/// Quartiles by linear interpolation between order statistics.
BoxStats box_stats(std::vector<double> samples);

struct TrialResult {
    Method method;
    double rate;
    int paths;
    int trial;
    std::uint64_t seed;
    double mae;              // NaN when the estimator failed
    std::string status;      // "ok" or the error message
    std::vector<Complex> eigenvalues;
    std::vector<std::pair<int, int>> matching;
};

struct SweepReport {
    std::vector<TrialResult> trials;

    std::vector<double> maes(Method method, double rate, int paths) const;
    /// Median over successful trials; NaN when every trial failed.
    double median(Method method, double rate, int paths) const;
};

/// Runs the frequency/path-count sweep and writes spectrum_<method>_<freq>.csv,
/// mae_summary.csv and boxplot_stats.csv (plus the system-identification artefacts
/// when enabled) under config.out_dir.
SweepReport run_sweep(const ExperimentConfig& config);
SweepReport run_ou_experiment(const ExperimentConfig& config);
SweepReport run_lv_experiment(const ExperimentConfig& config);

/// Per-path-stopped means next to the naive variant that averages only over paths that
/// never left the domain. Rows for initial states whose paths all exited are dropped.
struct FilteredMeans {
    PathMeans stopped;
    PathMeans filtered;
    std::vector<int> kept;   // initial-state indices present in `filtered`
};
FilteredMeans filtered_mean_observables(const TrajectoryEnsemble& ensemble, const Dictionary& dict);

struct AblationRow {
    double lambda;
    double stopped_error;     // ||L - L*||_F
    double filtered_error;
};

struct AblationReport {
    std::vector<AblationRow> rows;
    double exit_fraction = 0.0;
    double reference_norm = 0.0;
    bool conclusive = true;   // false when fewer than 1% of paths exit
};

/// Stopped-path estimator against the survivor-filtered one, on the analytic generator.
/// Writes ablation.csv.
AblationReport run_filtered_resolvent_ablation(const ExperimentConfig& config);

struct ReconstructionReport {
    Eigen::MatrixXd drift;
    std::vector<Eigen::VectorXd> diffusion;
    double mean_abs_error = 0.0;
    double max_abs_error = 0.0;
    double clamped = 0.0;     // largest negative covariance eigenvalue removed
    int psd_failures = 0;
};

/// Estimates on the system-identification dictionary, identifies drift and diffusion,
/// and replays the true model's noise under the identified one. Writes
/// identified_model.txt and reconstruction_<i>.csv.
ReconstructionReport run_reconstruction(const ExperimentConfig& config);

}  // namespace rtedmd

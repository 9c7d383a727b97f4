#include "rtedmd/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "rtedmd/baselines.hpp"
#include "rtedmd/errors.hpp"
#include "rtedmd/io.hpp"
#include "rtedmd/log.hpp"
#include "rtedmd/sysid.hpp"

namespace rtedmd {

std::string_view to_string(Method m) {
    switch (m) {
        case Method::Rt: return "rt";
        case Method::RtMod: return "rt_mod";
        case Method::Edmd: return "edmd";
        case Method::Gedmd: return "gedmd";
    }
    return "?";
}

Method method_from_string(std::string_view s) {
    if (s == "rt") return Method::Rt;
    if (s == "rt_mod") return Method::RtMod;
    if (s == "edmd") return Method::Edmd;
    if (s == "gedmd") return Method::Gedmd;
    throw ConfigError("unknown method '" + std::string(s) + "' (expected rt, rt_mod, edmd or gedmd)");
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

int model_dim(const ModelSpec& m, int fallback) {
    if (m.kind == "ou") return 1;
    if (m.kind == "lv") return 2;
    return fallback;
}

const std::vector<Complex> kLvPrincipalPair{{-0.02509, 0.86363}, {-0.02509, -0.86363}};

}  // namespace

SdeModel ExperimentConfig::build_model() const {
    if (model.kind == "ou") return ornstein_uhlenbeck(model.mu, model.sigma);
    if (model.kind == "lv") return lotka_volterra(model.lv, model.reference.empty() ? kLvPrincipalPair : model.reference);
    if (model.kind == "zero") return zero_dynamics(dictionary.dim());
    throw ConfigError("unknown model kind '" + model.kind + "'");
}

void ExperimentConfig::validate() const {
    const SdeModel m = build_model();
    if (dictionary.dim() != m.dim) throw ConfigError("dictionary dimension differs from the model");
    if (domain.dim() != m.dim) throw ConfigError("domain dimension differs from the model");
    if (sampling.initial_points < 1 || sampling.paths < 1) throw ConfigError("sampling needs m >= 1 and J >= 1");
    if (sampling.init_lo.size() != m.dim || sampling.init_hi.size() != m.dim)
        throw ConfigError("init_lo/init_hi must have one entry per state dimension");
    if ((sampling.init_hi - sampling.init_lo).minCoeff() < 0.0) throw ConfigError("init_hi must not be below init_lo");
    if (!(sampling.horizon > 0.0) || !(sampling.integration_rate > 0.0))
        throw ConfigError("sampling horizon and integration rate must be positive");
    if (estimators.empty()) throw ConfigError("no estimators configured");
    if (sweep.trials < 1) throw ConfigError("trial count must be at least 1");
    if (sweep.lag_steps < 1) throw ConfigError("lag_steps must be at least 1");
    if (sweep.frequencies.empty()) throw ConfigError("no frequencies configured");
    for (int j : sweep.paths)
        if (j < 1) throw ConfigError("path counts must be positive");
    for (double f : sweep.frequencies) {
        if (!(f > 0.0)) throw ConfigError("frequencies must be positive");
        const double sub = sampling.integration_rate / f;
        if (std::abs(sub - std::round(sub)) > 1e-9 || std::round(sub) < 1.0)
            throw ConfigError("frequency " + format_double(f) + " Hz does not divide the integration rate");
        sim_config_for(*this, f, 0).validate();
    }
    for (Method e : estimators) {
        if (e == Method::Rt) rt.validate();
        if (e == Method::RtMod) {
            rt_mod.validate();
            if (!rt_mod.use_modification) throw ConfigError("rt_mod requires use_modification");
        }
        if ((e == Method::Rt && rt.horizon > sampling.horizon + 1e-12) ||
            (e == Method::RtMod && rt_mod.horizon > sampling.horizon + 1e-12))
            throw ConfigError("estimator horizon exceeds the sampling horizon");
    }
    if (sysid.enabled && sysid.dictionary.dim() != m.dim) throw ConfigError("sysid dictionary dimension differs from the model");
}

ExperimentConfig default_ou_config() {
    ExperimentConfig c;
    c.name = "ou";
    c.model.kind = "ou";
    c.domain = Domain::ball(1, 2.0);
    c.dictionary = monomials_up_to_degree(1, 5, false);
    c.sampling.init_lo = Eigen::VectorXd::Constant(1, -1.0);
    c.sampling.init_hi = Eigen::VectorXd::Constant(1, 1.0);
    c.rt.lambda = 1.0;
    c.rt.horizon = 5.0;
    c.rt_mod.lambda = 20.0;
    c.rt_mod.mu = 1.0;
    c.rt_mod.horizon = 5.0;
    c.rt_mod.use_modification = true;
    c.rt_mod.invert_yosida = false;
    c.sweep.frequencies = {10.0, 20.0, 50.0, 100.0, 200.0};
    c.sweep.trials = 100;
    c.sysid.enabled = true;
    c.sysid.dictionary = monomials_up_to_degree(1, 2, true);
    return c;
}

ExperimentConfig default_lv_config() {
    ExperimentConfig c = default_ou_config();
    c.name = "lv";
    c.model.kind = "lv";
    c.model.reference = kLvPrincipalPair;
    c.domain = Domain::box(Eigen::Vector2d(0.01, 0.01), Eigen::Vector2d(10.0, 10.0));
    c.dictionary = monomials_up_to_degree(2, 4, false);
    c.sampling.init_lo = Eigen::Vector2d(2.0, 1.0);
    c.sampling.init_hi = Eigen::Vector2d(4.0, 3.0);
    c.sweep.frequencies = {10.0, 20.0, 50.0, 100.0};
    c.sysid.enabled = false;
    c.sysid.dictionary = monomials_up_to_degree(2, 2, true);
    return c;
}

ExperimentConfig default_ablation_config() {
    ExperimentConfig c = default_ou_config();
    c.name = "ablation";
    c.model.sigma = 0.3;
    c.domain = Domain::ball(1, 1.2);
    c.dictionary = monomials_up_to_degree(1, 3, true);
    c.sampling.initial_points = 40;
    c.sampling.paths = 200;
    c.sampling.grid = true;
    c.sampling.init_lo = Eigen::VectorXd::Constant(1, -1.1);
    c.sampling.init_hi = Eigen::VectorXd::Constant(1, 1.1);
    c.sampling.horizon = 2.0;
    c.rt.horizon = 2.0;
    c.rt.invert_yosida = false;
    c.estimators = {Method::Rt};
    c.sweep.frequencies = {1000.0};
    c.sweep.trials = 1;
    c.sysid.enabled = false;
    return c;
}

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || item.key() == a;
        if (!ok) throw ConfigError("unknown key '" + item.key() + "' in '" + where + "'");
    }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& target) {
    if (obj.contains(key)) target = obj.at(key).get<T>();
}

Eigen::VectorXd to_vector(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::vector<Complex> to_complex_list(const json& j) {
    std::vector<Complex> out;
    for (const auto& e : j) {
        const auto p = e.get<std::vector<double>>();
        if (p.size() != 2) throw ConfigError("complex values are written as [re, im]");
        out.emplace_back(p[0], p[1]);
    }
    return out;
}

json dictionary_json_with_dim(json doc, int dim) {
    if (!doc.contains("dim")) doc["dim"] = dim;
    return doc;
}

RtConfig read_rt(const json& j, RtConfig base, const std::string& where) {
    reject_unknown(j, {"lambda", "mu", "horizon", "invert_yosida"}, where);
    read_opt(j, "lambda", base.lambda);
    read_opt(j, "mu", base.mu);
    read_opt(j, "horizon", base.horizon);
    read_opt(j, "invert_yosida", base.invert_yosida);
    return base;
}

json rt_json(const RtConfig& rt) {
    return {{"lambda", rt.lambda}, {"mu", rt.mu}, {"horizon", rt.horizon}, {"invert_yosida", rt.invert_yosida}};
}

}  // namespace

ExperimentConfig config_from_json(const json& doc, ExperimentConfig c) {
    try {
        reject_unknown(doc,
                       {"experiment", "model", "domain", "dictionary", "sampling", "estimators", "rt", "rt_mod", "sweep",
                        "sysid", "ablation", "seed", "out_dir"},
                       "config");
        read_opt(doc, "experiment", c.name);
        if (doc.contains("model")) {
            const json& m = doc.at("model");
            reject_unknown(m, {"kind", "mu", "sigma", "a1", "b1", "c1", "a2", "b2", "c2", "sigma1", "sigma2", "reference"},
                           "model");
            read_opt(m, "kind", c.model.kind);
            read_opt(m, "mu", c.model.mu);
            read_opt(m, "sigma", c.model.sigma);
            auto& lv = c.model.lv;
            read_opt(m, "a1", lv.a1);
            read_opt(m, "b1", lv.b1);
            read_opt(m, "c1", lv.c1);
            read_opt(m, "a2", lv.a2);
            read_opt(m, "b2", lv.b2);
            read_opt(m, "c2", lv.c2);
            read_opt(m, "sigma1", lv.sigma1);
            read_opt(m, "sigma2", lv.sigma2);
            if (m.contains("reference")) c.model.reference = to_complex_list(m.at("reference"));
        }
        const int dim = model_dim(c.model, c.dictionary.dim());
        if (doc.contains("domain")) {
            const json& d = doc.at("domain");
            reject_unknown(d, {"kind", "radius", "lo", "hi"}, "domain");
            const auto kind = d.value("kind", std::string("ball"));
            if (kind == "ball") c.domain = Domain::ball(dim, d.at("radius").get<double>());
            else if (kind == "box") c.domain = Domain::box(to_vector(d.at("lo")), to_vector(d.at("hi")));
            else throw ConfigError("domain kind must be ball or box");
        }
        if (doc.contains("dictionary")) c.dictionary = dictionary_from_json(dictionary_json_with_dim(doc.at("dictionary"), dim));
        if (doc.contains("sampling")) {
            const json& s = doc.at("sampling");
            reject_unknown(s, {"initial_points", "paths", "init_lo", "init_hi", "grid", "horizon", "integration_rate", "threads"},
                           "sampling");
            read_opt(s, "initial_points", c.sampling.initial_points);
            read_opt(s, "paths", c.sampling.paths);
            if (s.contains("init_lo")) c.sampling.init_lo = to_vector(s.at("init_lo"));
            if (s.contains("init_hi")) c.sampling.init_hi = to_vector(s.at("init_hi"));
            read_opt(s, "grid", c.sampling.grid);
            read_opt(s, "horizon", c.sampling.horizon);
            read_opt(s, "integration_rate", c.sampling.integration_rate);
            read_opt(s, "threads", c.sampling.threads);
        }
        if (doc.contains("estimators")) {
            c.estimators.clear();
            for (const auto& e : doc.at("estimators")) c.estimators.push_back(method_from_string(e.get<std::string>()));
        }
        if (doc.contains("rt")) c.rt = read_rt(doc.at("rt"), c.rt, "rt");
        if (doc.contains("rt_mod")) c.rt_mod = read_rt(doc.at("rt_mod"), c.rt_mod, "rt_mod");
        c.rt.use_modification = false;
        c.rt_mod.use_modification = true;
        if (doc.contains("sweep")) {
            const json& s = doc.at("sweep");
            reject_unknown(s, {"frequencies", "paths", "trials", "lag_steps", "n_match"}, "sweep");
            read_opt(s, "frequencies", c.sweep.frequencies);
            read_opt(s, "paths", c.sweep.paths);
            read_opt(s, "trials", c.sweep.trials);
            read_opt(s, "lag_steps", c.sweep.lag_steps);
            read_opt(s, "n_match", c.sweep.n_match);
        }
        if (doc.contains("sysid")) {
            const json& s = doc.at("sysid");
            reject_unknown(s, {"enabled", "dictionary", "rate", "reconstruct_points", "reconstruct_paths"}, "sysid");
            read_opt(s, "enabled", c.sysid.enabled);
            if (s.contains("dictionary")) c.sysid.dictionary = dictionary_from_json(dictionary_json_with_dim(s.at("dictionary"), dim));
            read_opt(s, "rate", c.sysid.rate);
            read_opt(s, "reconstruct_points", c.sysid.reconstruct_points);
            read_opt(s, "reconstruct_paths", c.sysid.reconstruct_paths);
        }
        if (doc.contains("ablation")) {
            const json& s = doc.at("ablation");
            reject_unknown(s, {"lambdas", "rate"}, "ablation");
            read_opt(s, "lambdas", c.ablation.lambdas);
            read_opt(s, "rate", c.ablation.rate);
        }
        read_opt(doc, "seed", c.seed);
        if (doc.contains("out_dir")) c.out_dir = doc.at("out_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
    return c;
}

ExperimentConfig config_from_json(const json& doc) {
    const auto name = doc.is_object() ? doc.value("experiment", std::string("ou")) : std::string("ou");
    if (name == "ou") return config_from_json(doc, default_ou_config());
    if (name == "lv") return config_from_json(doc, default_lv_config());
    if (name == "ablation") return config_from_json(doc, default_ablation_config());
    throw ConfigError("unknown experiment '" + name + "' (expected ou, lv or ablation)");
}

ExperimentConfig load_config(const std::filesystem::path& path) { return config_from_json(read_json_file(path)); }

json config_to_json(const ExperimentConfig& c) {
    json model = {{"kind", c.model.kind}};
    if (c.model.kind == "ou") {
        model["mu"] = c.model.mu;
        model["sigma"] = c.model.sigma;
    } else if (c.model.kind == "lv") {
        const auto& lv = c.model.lv;
        model.update({{"a1", lv.a1}, {"b1", lv.b1}, {"c1", lv.c1}, {"a2", lv.a2}, {"b2", lv.b2}, {"c2", lv.c2},
                      {"sigma1", lv.sigma1}, {"sigma2", lv.sigma2}});
    }
    if (!c.model.reference.empty()) {
        json ref = json::array();
        for (const auto& z : c.model.reference) ref.push_back({z.real(), z.imag()});
        model["reference"] = ref;
    }
    json domain;
    if (c.domain.kind() == Domain::Kind::Ball) domain = {{"kind", "ball"}, {"radius", c.domain.radius()}};
    else domain = {{"kind", "box"}, {"lo", from_vector(c.domain.lower())}, {"hi", from_vector(c.domain.upper())}};
    json estimators = json::array();
    for (Method m : c.estimators) estimators.push_back(std::string(to_string(m)));
    return {{"experiment", c.name},
            {"model", model},
            {"domain", domain},
            {"dictionary", dictionary_to_json(c.dictionary)},
            {"sampling",
             {{"initial_points", c.sampling.initial_points},
              {"paths", c.sampling.paths},
              {"init_lo", from_vector(c.sampling.init_lo)},
              {"init_hi", from_vector(c.sampling.init_hi)},
              {"grid", c.sampling.grid},
              {"horizon", c.sampling.horizon},
              {"integration_rate", c.sampling.integration_rate},
              {"threads", c.sampling.threads}}},
            {"estimators", estimators},
            {"rt", rt_json(c.rt)},
            {"rt_mod", rt_json(c.rt_mod)},
            {"sweep",
             {{"frequencies", c.sweep.frequencies},
              {"paths", c.sweep.paths},
              {"trials", c.sweep.trials},
              {"lag_steps", c.sweep.lag_steps},
              {"n_match", c.sweep.n_match}}},
            {"sysid",
             {{"enabled", c.sysid.enabled},
              {"dictionary", dictionary_to_json(c.sysid.dictionary)},
              {"rate", c.sysid.rate},
              {"reconstruct_points", c.sysid.reconstruct_points},
              {"reconstruct_paths", c.sysid.reconstruct_paths}}},
            {"ablation", {{"lambdas", c.ablation.lambdas}, {"rate", c.ablation.rate}}},
            {"seed", c.seed}};
}

std::filesystem::path default_out_dir() {
    if (const char* env = std::getenv("RTEDMD_OUT_DIR"); env && *env) return env;
    return "results";
}

// ---------------------------------------------------------------------------
// Sampling

std::uint64_t trial_seed(std::uint64_t seed, int trial, int paths_index) {
    return path_stream_seed(seed ^ 0x747269616cULL, static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(paths_index));
}

std::vector<Eigen::VectorXd> sample_initial_states(const SamplingSpec& s, std::uint64_t seed) {
    const auto d = s.init_lo.size();
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(s.initial_points));
    if (s.grid) {
        for (int i = 0; i < s.initial_points; ++i) {
            const double w = s.initial_points == 1 ? 0.5 : static_cast<double>(i) / (s.initial_points - 1);
            out.emplace_back(s.init_lo + w * (s.init_hi - s.init_lo));
        }
        return out;
    }
    std::mt19937_64 rng(path_stream_seed(seed, 0x696e6974ULL, 0));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < s.initial_points; ++i) {
        Eigen::VectorXd x(d);
        for (Eigen::Index c = 0; c < d; ++c) x[c] = s.init_lo[c] + unif(rng) * (s.init_hi[c] - s.init_lo[c]);
        out.push_back(std::move(x));
    }
    return out;
}

SimConfig sim_config_for(const ExperimentConfig& config, double rate, std::uint64_t seed) {
    SimConfig sc;
    sc.horizon = config.sampling.horizon;
    sc.rate = rate;
    sc.substeps_per_observation = static_cast<int>(std::lround(config.sampling.integration_rate / rate));
    sc.seed = seed;
    return sc;
}

GeneratorMatrix run_method(Method method, const TrajectoryEnsemble& ensemble, const Dictionary& dict,
                           const ExperimentConfig& config) {
    switch (method) {
        case Method::Rt: return estimate_rt(ensemble, dict, config.rt);
        case Method::RtMod: return fit_generator_modified(ensemble, dict, config.rt_mod);
        case Method::Edmd: return generator_from_log(fit_koopman(ensemble, dict, config.sweep.lag_steps));
        case Method::Gedmd: return gedmd_fdm(ensemble, dict, config.sweep.lag_steps);
    }
    throw ConfigError("unknown method");
}

// ---------------------------------------------------------------------------
// Statistics

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

BoxStats box_stats(std::vector<double> samples) {
    BoxStats b;
    std::erase_if(samples, [](double x) { return !std::isfinite(x); });
    b.count = static_cast<int>(samples.size());
    if (samples.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        b.min = b.q1 = b.median = b.q3 = b.max = b.whisker_lo = b.whisker_hi = nan;
        return b;
    }
    std::sort(samples.begin(), samples.end());
    b.min = samples.front();
    b.max = samples.back();
    b.q1 = quantile_sorted(samples, 0.25);
    b.median = quantile_sorted(samples, 0.5);
    b.q3 = quantile_sorted(samples, 0.75);
    const double iqr = b.q3 - b.q1;
    const double lo_fence = b.q1 - 1.5 * iqr;
    const double hi_fence = b.q3 + 1.5 * iqr;
    b.whisker_lo = b.q1;
    b.whisker_hi = b.q3;
    for (double x : samples) {
        if (x < lo_fence || x > hi_fence) {
            b.outliers.push_back(x);
            continue;
        }
        b.whisker_lo = std::min(b.whisker_lo, x);
        b.whisker_hi = std::max(b.whisker_hi, x);
    }
    return b;
}

std::vector<double> SweepReport::maes(Method method, double rate, int paths) const {
    std::vector<double> out;
    for (const auto& t : trials)
        if (t.method == method && t.rate == rate && t.paths == paths) out.push_back(t.mae);
    return out;
}

double SweepReport::median(Method method, double rate, int paths) const {
    const BoxStats b = box_stats(maes(method, rate, paths));
    return b.median;
}

// ---------------------------------------------------------------------------
// Sweep

namespace {

std::string sanitize(std::string s) {
    for (char& ch : s)
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    return s;
}

int resolve_n_match(const ExperimentConfig& config, const std::vector<Complex>& reference, int n_obs) {
    if (config.sweep.n_match > 0) return config.sweep.n_match;
    return static_cast<int>(std::min<std::size_t>(reference.size(), static_cast<std::size_t>(n_obs)));
}

struct RtEcho {
    double lambda;
    double mu;
    double horizon;
};

RtEcho echo_for(Method m, const ExperimentConfig& c) {
    switch (m) {
        case Method::Rt: return {c.rt.lambda, 0.0, c.rt.horizon};
        case Method::RtMod: return {c.rt_mod.lambda, c.rt_mod.mu, c.rt_mod.horizon};
        default: {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            return {nan, nan, nan};
        }
    }
}

// Simulates once at the finest rate and derives coarser ensembles by subsampling
// when every frequency divides it; otherwise simulates per frequency.
class EnsembleSource {
public:
    EnsembleSource(const ExperimentConfig& config, const SdeModel& model, const std::vector<Eigen::VectorXd>& initial,
                   int paths, std::uint64_t seed)
        : config_(config), model_(model), initial_(initial), paths_(paths), seed_(seed) {
        finest_ = *std::max_element(config.sweep.frequencies.begin(), config.sweep.frequencies.end());
        for (double f : config.sweep.frequencies) {
            const double ratio = finest_ / f;
            shared_ = shared_ && std::abs(ratio - std::round(ratio)) < 1e-9 &&
                      sim_config_for(config, finest_, seed).intervals() % static_cast<int>(std::lround(ratio)) == 0;
        }
    }

    TrajectoryEnsemble at(double rate) {
        if (!shared_) return simulate(rate);
        if (!finest_ensemble_) finest_ensemble_.emplace(simulate(finest_));
        const int factor = static_cast<int>(std::lround(finest_ / rate));
        if (factor == 1) return *finest_ensemble_;
        return subsample(*finest_ensemble_, factor);
    }

private:
    TrajectoryEnsemble simulate(double rate) const {
        return simulate_paths(model_, config_.domain, initial_, paths_, sim_config_for(config_, rate, seed_),
                              config_.sampling.threads);
    }

    const ExperimentConfig& config_;
    const SdeModel& model_;
    const std::vector<Eigen::VectorXd>& initial_;
    int paths_;
    std::uint64_t seed_;
    double finest_ = 0.0;
    bool shared_ = true;
    std::optional<TrajectoryEnsemble> finest_ensemble_;
};

void write_sweep_outputs(const ExperimentConfig& config, const SweepReport& report,
                         const std::vector<Complex>& reference) {
    const auto& dir = config.out_dir;
    std::filesystem::create_directories(dir);

    {
        std::ofstream echo(dir / "config.json");
        echo << config_to_json(config).dump(2) << '\n';
    }

    for (Method method : config.estimators)
        for (double rate : config.sweep.frequencies) {
            CsvWriter csv(dir / ("spectrum_" + std::string(to_string(method)) + "_" + format_double(rate) + ".csv"),
                          {"method", "rate", "paths", "trial", "lambda", "mu", "horizon", "index", "real", "imag",
                           "true_index", "true_real", "true_imag", "abs_error"});
            const RtEcho e = echo_for(method, config);
            for (const auto& t : report.trials) {
                if (t.method != method || t.rate != rate) continue;
                std::map<int, int> est_to_true;
                for (const auto& [ti, ei] : t.matching) est_to_true[ei] = ti;
                for (std::size_t k = 0; k < t.eigenvalues.size(); ++k) {
                    const Complex z = t.eigenvalues[k];
                    csv.field(std::string(to_string(method))).field(rate).field(t.paths).field(t.trial);
                    csv.field(e.lambda).field(e.mu).field(e.horizon).field(static_cast<int>(k)).field(z.real()).field(z.imag());
                    const auto it = est_to_true.find(static_cast<int>(k));
                    if (it == est_to_true.end()) {
                        csv.field(std::string()).field(std::string()).field(std::string()).field(std::string());
                    } else {
                        const Complex r = reference[static_cast<std::size_t>(it->second)];
                        csv.field(it->second).field(r.real()).field(r.imag()).field(std::abs(r - z));
                    }
                    csv.end_row();
                }
            }
        }

    CsvWriter mae(dir / "mae_summary.csv", {"method", "rate", "paths", "trial", "seed", "mae", "status"});
    for (const auto& t : report.trials) {
        mae.field(std::string(to_string(t.method))).field(t.rate).field(t.paths).field(t.trial);
        mae.field(std::to_string(t.seed)).field(t.mae).field(sanitize(t.status));
        mae.end_row();
    }

    CsvWriter box(dir / "boxplot_stats.csv", {"method", "rate", "paths", "count", "failed", "min", "q1", "median", "q3",
                                              "max", "whisker_lo", "whisker_hi", "outliers"});
    std::vector<int> path_values = config.sweep.paths.empty() ? std::vector<int>{config.sampling.paths} : config.sweep.paths;
    for (Method method : config.estimators)
        for (double rate : config.sweep.frequencies)
            for (int paths : path_values) {
                const auto v = report.maes(method, rate, paths);
                const BoxStats b = box_stats(v);
                std::string outliers;
                for (double o : b.outliers) outliers += (outliers.empty() ? "" : ";") + format_double(o);
                box.field(std::string(to_string(method))).field(rate).field(paths).field(b.count);
                box.field(static_cast<int>(v.size()) - b.count);
                box.field(b.min).field(b.q1).field(b.median).field(b.q3).field(b.max).field(b.whisker_lo).field(b.whisker_hi);
                box.field(outliers);
                box.end_row();
            }
}

}  // namespace

SweepReport run_sweep(const ExperimentConfig& config) {
    config.validate();
    const SdeModel model = config.build_model();
    const std::vector<Complex> reference =
        !config.model.reference.empty() ? config.model.reference : model.analytic_spectrum.value_or(std::vector<Complex>{});
    if (reference.empty()) throw ConfigError("model '" + model.name + "' has no reference spectrum");
    const int n_match = resolve_n_match(config, reference, config.dictionary.size());

    const std::vector<int> path_values =
        config.sweep.paths.empty() ? std::vector<int>{config.sampling.paths} : config.sweep.paths;

    SweepReport report;
    for (std::size_t pi = 0; pi < path_values.size(); ++pi) {
        const int paths = path_values[pi];
        for (int trial = 0; trial < config.sweep.trials; ++trial) {
            const std::uint64_t seed = trial_seed(config.seed, trial, static_cast<int>(pi));
            const auto initial = sample_initial_states(config.sampling, seed);
            EnsembleSource source(config, model, initial, paths, seed);
            for (double rate : config.sweep.frequencies) {
                std::optional<TrajectoryEnsemble> ensemble;
                std::string sim_failure;
                try {
                    ensemble.emplace(source.at(rate));
                } catch (const NumericalError& e) {
                    sim_failure = e.what();
                }
                for (Method method : config.estimators) {
                    TrialResult r{method, rate, paths, trial, seed, std::numeric_limits<double>::quiet_NaN(), "ok", {}, {}};
                    if (!ensemble) {
                        r.status = sim_failure;
                    } else {
                        try {
                            const GeneratorMatrix g = run_method(method, *ensemble, config.dictionary, config);
                            const SpectrumResult s = eigendecompose(g);
                            const Matching match = match_and_mae(reference, s.eigenvalues, n_match);
                            r.eigenvalues = s.eigenvalues;
                            r.matching = match.pairs;
                            r.mae = match.mae;
                        } catch (const NumericalError& e) {
                            r.status = e.what();
                            log_warning(std::string(to_string(method)) + " failed at " + format_double(rate) +
                                        " Hz, trial " + std::to_string(trial) + ": " + e.what());
                        }
                    }
                    report.trials.push_back(std::move(r));
                }
            }
            log_info("trial " + std::to_string(trial + 1) + "/" + std::to_string(config.sweep.trials) +
                     " done (J = " + std::to_string(paths) + ")");
        }
    }

    if (!config.out_dir.empty()) write_sweep_outputs(config, report, reference);
    return report;
}

SweepReport run_ou_experiment(const ExperimentConfig& config) {
    if (config.model.kind != "ou") throw ConfigError("the OU experiment needs an ou model");
    SweepReport report = run_sweep(config);
    if (config.sysid.enabled) run_reconstruction(config);
    return report;
}

SweepReport run_lv_experiment(const ExperimentConfig& config) {
    if (config.model.kind != "lv") throw ConfigError("the LV experiment needs an lv model");
    SweepReport report = run_sweep(config);
    if (config.sysid.enabled) run_reconstruction(config);
    return report;
}

// ---------------------------------------------------------------------------
// Ablation

FilteredMeans filtered_mean_observables(const TrajectoryEnsemble& ensemble, const Dictionary& dict) {
    if (ensemble.dim() != dict.dim()) throw DimensionError("ensemble and dictionary dimensions differ");
    FilteredMeans out;
    out.stopped = mean_observables(ensemble, dict);
    const int n_obs = dict.size();
    const int snaps = ensemble.snapshots();
    Eigen::VectorXd z(n_obs);
    for (int i = 0; i < ensemble.num_initial(); ++i) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(snaps, n_obs);
        int survivors = 0;
        for (int j = 0; j < ensemble.paths_per_state(); ++j) {
            if (ensemble.exited(i, j)) continue;
            ++survivors;
            for (int k = 0; k < snaps; ++k) {
                dict.evaluate_into(ensemble.state(i, j, k).data(), z.data());
                acc.row(k) += z.transpose();
            }
        }
        if (survivors == 0) continue;
        out.filtered.push_back(acc / survivors);
        out.kept.push_back(i);
    }
    return out;
}

AblationReport run_filtered_resolvent_ablation(const ExperimentConfig& config) {
    const SdeModel model = config.build_model();
    if (!model.polynomial) throw ConfigError("the ablation needs a polynomial model with an analytic generator");
    if (config.sampling.init_lo.size() != model.dim || config.sampling.init_hi.size() != model.dim)
        throw ConfigError("init_lo/init_hi must have one entry per state dimension");
    const GeneratorMatrix exact = analytic_generator(config.dictionary, model);

    const std::uint64_t seed = trial_seed(config.seed, 0, 0);
    const auto initial = sample_initial_states(config.sampling, seed);
    SimConfig sc = sim_config_for(config, config.ablation.rate, seed);
    sc.validate();
    const TrajectoryEnsemble ensemble =
        simulate_paths(model, config.domain, initial, config.sampling.paths, sc, config.sampling.threads);

    AblationReport report;
    report.exit_fraction = ensemble.exit_fraction();
    report.reference_norm = exact.entries.norm();
    report.conclusive = report.exit_fraction >= 0.01;
    if (!report.conclusive)
        log_warning("ablation inconclusive: only " + format_double(100.0 * report.exit_fraction) + "% of paths exit");

    const FilteredMeans means = filtered_mean_observables(ensemble, config.dictionary);
    const Eigen::MatrixXd features = config.dictionary.feature_matrix(initial);
    Eigen::MatrixXd kept_features(static_cast<Eigen::Index>(means.kept.size()), features.cols());
    for (std::size_t r = 0; r < means.kept.size(); ++r)
        kept_features.row(static_cast<Eigen::Index>(r)) = features.row(means.kept[r]);

    for (double lambda : config.ablation.lambdas) {
        RtConfig rt = config.rt;
        rt.lambda = lambda;
        rt.use_modification = false;
        rt.validate();
        const GeneratorMatrix stopped = estimate_rt_from_means(features, means.stopped, sc.rate, config.dictionary, rt);
        const GeneratorMatrix filtered = estimate_rt_from_means(kept_features, means.filtered, sc.rate, config.dictionary, rt);
        report.rows.push_back({lambda, (stopped.entries - exact.entries).norm(), (filtered.entries - exact.entries).norm()});
    }

    if (!config.out_dir.empty()) {
        std::filesystem::create_directories(config.out_dir);
        CsvWriter csv(config.out_dir / "ablation.csv",
                      {"lambda", "stopped_error", "filtered_error", "reference_norm", "exit_fraction"});
        for (const auto& r : report.rows) {
            csv.field(r.lambda).field(r.stopped_error).field(r.filtered_error).field(report.reference_norm);
            csv.field(report.exit_fraction);
            csv.end_row();
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// System identification and reconstruction

ReconstructionReport run_reconstruction(const ExperimentConfig& config) {
    config.validate();
    const SdeModel model = config.build_model();
    const Dictionary& dict = config.sysid.dictionary;

    const std::uint64_t seed = trial_seed(config.seed, -1, 0);
    const auto initial = sample_initial_states(config.sampling, seed);
    const SimConfig sc = sim_config_for(config, config.sysid.rate, seed);
    const TrajectoryEnsemble data =
        simulate_paths(model, config.domain, initial, config.sampling.paths, sc, config.sampling.threads);
    const GeneratorMatrix generator = estimate_rt(data, dict, config.rt);
    const IdentifiedModel identified = identify(generator);

    ReconstructionReport report;
    report.drift = identified.drift;
    report.diffusion = identified.diffusion;
    report.psd_failures = check_covariance(identified, initial).failing_points;
    if (report.psd_failures > 0)
        log_warning("identified diffusion is not positive semi-definite at " + std::to_string(report.psd_failures) +
                    " sample points");

    SamplingSpec grid = config.sampling;
    grid.grid = true;
    grid.initial_points = config.sysid.reconstruct_points;
    // Keep the replay starts off the edges of the sampling box.
    const Eigen::VectorXd pad = 0.1 * (grid.init_hi - grid.init_lo);
    grid.init_lo += pad;
    grid.init_hi -= pad;
    const auto starts = sample_initial_states(grid, seed);
    const SimConfig replay = sim_config_for(config, config.sysid.rate, trial_seed(config.seed, -2, 0));
    const TrajectoryEnsemble truth = simulate_paths(model, config.domain, starts, config.sysid.reconstruct_paths, replay);
    const TrajectoryEnsemble recon = reconstruct_paths(identified, config.domain, starts, config.sysid.reconstruct_paths, replay);
    const PathwiseError err = pathwise_error(truth, recon);
    report.mean_abs_error = err.mean_abs;
    report.max_abs_error = err.max_abs;
    for (const auto& x : starts) {
        double clamped = 0.0;
        covariance_sqrt(identified.covariance_at(x), &clamped);
        report.clamped = std::max(report.clamped, clamped);
    }

    if (!config.out_dir.empty()) {
        std::filesystem::create_directories(config.out_dir);
        write_identified_model(identified, config.out_dir / "identified_model.txt");
        const int d = truth.dim();
        std::vector<std::string> header{"j", "t"};
        for (int c = 0; c < d; ++c) header.push_back("true_x" + std::to_string(c + 1));
        for (int c = 0; c < d; ++c) header.push_back("reconstructed_x" + std::to_string(c + 1));
        for (int c = 0; c < d; ++c) header.push_back("abs_error_x" + std::to_string(c + 1));
        for (int i = 0; i < truth.num_initial(); ++i) {
            CsvWriter csv(config.out_dir / ("reconstruction_" + std::to_string(i) + ".csv"), header);
            for (int j = 0; j < truth.paths_per_state(); ++j)
                for (int k = 0; k < truth.snapshots(); ++k) {
                    const auto a = truth.state(i, j, k);
                    const auto b = recon.state(i, j, k);
                    csv.field(j).field(replay.time_at(k));
                    for (int c = 0; c < d; ++c) csv.field(a[c]);
                    for (int c = 0; c < d; ++c) csv.field(b[c]);
                    for (int c = 0; c < d; ++c) csv.field(std::abs(a[c] - b[c]));
                    csv.end_row();
                }
        }
    }
    return report;
}

}  // namespace rtedmd

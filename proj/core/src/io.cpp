#include "rtedmd/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "rtedmd/errors.hpp"

namespace rtedmd {

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
    return out;
}

}  // namespace

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : out_(open_for_write(path)), columns_(header.size()) {
    for (std::size_t c = 0; c < header.size(); ++c) out_ << (c ? "," : "") << header[c];
    out_ << '\n';
}

CsvWriter& CsvWriter::field(const std::string& text) {
    if (pending_ == columns_) throw DimensionError("CSV row has more fields than the header");
    out_ << (pending_ ? "," : "") << text;
    ++pending_;
    return *this;
}

void CsvWriter::end_row() {
    if (pending_ != columns_) throw DimensionError("CSV row has fewer fields than the header");
    out_ << '\n';
    pending_ = 0;
}

void write_ensemble_csv(const TrajectoryEnsemble& ensemble, const std::filesystem::path& path) {
    std::vector<std::string> header{"i", "j", "k", "t"};
    for (int c = 0; c < ensemble.dim(); ++c) header.push_back("x_" + std::to_string(c + 1));
    header.emplace_back("stopped_flag");
    CsvWriter csv(path, header);
    const SimConfig& cfg = ensemble.config();
    for (int i = 0; i < ensemble.num_initial(); ++i)
        for (int j = 0; j < ensemble.paths_per_state(); ++j) {
            const int stop = ensemble.stop_index(i, j);
            const bool exited = ensemble.exited(i, j);
            for (int k = 0; k < ensemble.snapshots(); ++k) {
                csv.field(i).field(j).field(k).field(cfg.time_at(k));
                const auto x = ensemble.state(i, j, k);
                for (int c = 0; c < ensemble.dim(); ++c) csv.field(x[c]);
                csv.field((exited && k >= stop) ? 1 : 0);
                csv.end_row();
            }
        }
}

namespace {

constexpr char kMagic[8] = {'R', 'T', 'E', 'N', 'S', 'B', '0', '1'};

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ConfigError("truncated ensemble file '" + path.string() + "'");
    return v;
}

}  // namespace

void write_ensemble_binary(const TrajectoryEnsemble& ensemble, const std::filesystem::path& path) {
    auto out = open_for_write(path, std::ios::out | std::ios::binary);
    out.write(kMagic, sizeof(kMagic));
    const SimConfig& cfg = ensemble.config();
    put<std::int32_t>(out, ensemble.dim());
    put<std::int32_t>(out, ensemble.num_initial());
    put<std::int32_t>(out, ensemble.paths_per_state());
    put<std::int32_t>(out, ensemble.intervals());
    put<double>(out, cfg.horizon);
    put<double>(out, cfg.rate);
    put<std::int32_t>(out, cfg.substeps_per_observation);
    put<std::uint64_t>(out, cfg.seed);
    for (const auto& x : ensemble.initial_states())
        for (Eigen::Index c = 0; c < x.size(); ++c) put<double>(out, x[c]);
    for (int i = 0; i < ensemble.num_initial(); ++i)
        for (int j = 0; j < ensemble.paths_per_state(); ++j) {
            put<std::int32_t>(out, ensemble.stop_index(i, j));
            put<std::uint8_t>(out, ensemble.exited(i, j) ? 1 : 0);
            const auto s = ensemble.stopped_value(i, j);
            for (Eigen::Index c = 0; c < s.size(); ++c) put<double>(out, s[c]);
            for (int k = 0; k < ensemble.snapshots(); ++k) {
                const auto x = ensemble.state(i, j, k);
                out.write(reinterpret_cast<const char*>(x.data()), static_cast<std::streamsize>(sizeof(double) * x.size()));
            }
        }
    if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

TrajectoryEnsemble read_ensemble_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open ensemble file '" + path.string() + "'");
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ConfigError("'" + path.string() + "' is not an ensemble dump");
    const int dim = get<std::int32_t>(in, path);
    const int m = get<std::int32_t>(in, path);
    const int paths = get<std::int32_t>(in, path);
    const int intervals = get<std::int32_t>(in, path);
    SimConfig cfg;
    cfg.horizon = get<double>(in, path);
    cfg.rate = get<double>(in, path);
    cfg.substeps_per_observation = get<std::int32_t>(in, path);
    cfg.seed = get<std::uint64_t>(in, path);
    if (dim < 1 || m < 1 || paths < 1 || cfg.intervals() != intervals)
        throw ConfigError("inconsistent header in '" + path.string() + "'");

    std::vector<Eigen::VectorXd> initial(static_cast<std::size_t>(m), Eigen::VectorXd(dim));
    for (auto& x : initial)
        for (int c = 0; c < dim; ++c) x[c] = get<double>(in, path);
    TrajectoryEnsemble ens(dim, cfg, std::move(initial), paths);
    Eigen::VectorXd buf(dim);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < paths; ++j) {
            const int stop = get<std::int32_t>(in, path);
            const bool exited = get<std::uint8_t>(in, path) != 0;
            for (int c = 0; c < dim; ++c) buf[c] = get<double>(in, path);
            ens.set_stop(i, j, stop, exited, buf);
            for (int k = 0; k <= intervals; ++k) {
                for (int c = 0; c < dim; ++c) buf[c] = get<double>(in, path);
                ens.set_state(i, j, k, buf);
            }
        }
    return ens;
}

nlohmann::json dictionary_to_json(const Dictionary& dict) {
    return {{"dim", dict.dim()}, {"exponents", dict.exponents()}};
}

Dictionary dictionary_from_json(const nlohmann::json& doc) {
    try {
        const int dim = doc.at("dim").get<int>();
        if (doc.contains("exponents")) return Dictionary(dim, doc.at("exponents").get<std::vector<MultiIndex>>());
        return monomials_up_to_degree(dim, doc.at("max_degree").get<int>(), doc.value("include_constant", false));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad dictionary description: ") + e.what());
    }
}

nlohmann::json generator_to_json(const GeneratorMatrix& generator) {
    const auto& a = generator.entries;
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(a.size()));
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c) flat.push_back(a(r, c));
    return {{"format", "rtedmd-generator"},
            {"version", 1},
            {"provenance", std::string(to_string(generator.provenance))},
            {"dictionary", dictionary_to_json(generator.dictionary)},
            {"rows", a.rows()},
            {"cols", a.cols()},
            {"entries", flat},
            {"imaginary_residue", generator.imaginary_residue},
            {"metadata", generator.metadata}};
}

GeneratorMatrix generator_from_json(const nlohmann::json& doc) {
    try {
        if (doc.value("format", std::string()) != "rtedmd-generator") throw ConfigError("not a generator file");
        const auto rows = doc.at("rows").get<Eigen::Index>();
        const auto cols = doc.at("cols").get<Eigen::Index>();
        const auto flat = doc.at("entries").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(flat.size()) != rows * cols) throw ConfigError("generator entry count mismatch");
        Eigen::MatrixXd a(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) a(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
        GeneratorMatrix g(std::move(a), dictionary_from_json(doc.at("dictionary")),
                          provenance_from_string(doc.at("provenance").get<std::string>()));
        g.imaginary_residue = doc.value("imaginary_residue", 0.0);
        g.metadata = doc.value("metadata", nlohmann::json::object());
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad generator file: ") + e.what());
    }
}

void write_generator(const GeneratorMatrix& generator, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    out << generator_to_json(generator).dump(2) << '\n';
}

GeneratorMatrix read_generator(const std::filesystem::path& path) { return generator_from_json(read_json_file(path)); }

void write_identified_model(const IdentifiedModel& model, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    const int d = model.dim();
    const Dictionary& dict = model.dictionary;
    out << "# source: " << to_string(model.source) << '\n';
    const auto drift = model.drift_polynomials();
    for (int i = 0; i < d; ++i) out << "f" << i + 1 << "(x) = " << drift[static_cast<std::size_t>(i)].to_string(8) << '\n';
    const auto cov = model.covariance_polynomials();
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
            out << "bbT" << i + 1 << j + 1 << "(x) = " << cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].to_string(8)
                << '\n';

    out << "\n[coefficients]\nobservables";
    for (int n = 0; n < dict.size(); ++n) out << ' ' << dict.name(n);
    out << '\n';
    for (int i = 0; i < d; ++i) {
        out << "drift " << i + 1;
        for (int n = 0; n < dict.size(); ++n) out << ' ' << format_double(model.drift(i, n));
        out << '\n';
    }
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            out << "diffusion " << i + 1 << ' ' << j + 1;
            const auto& c = model.covariance_coeffs(i, j);
            for (int n = 0; n < dict.size(); ++n) out << ' ' << format_double(c[n]);
            out << '\n';
        }
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("cannot parse '" + path.string() + "': " + e.what());
    }
}

}  // namespace rtedmd

#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rtedmd/generator.hpp"
#include "rtedmd/sde.hpp"
#include "rtedmd/sysid.hpp"

namespace rtedmd {

/// Shortest text that reads back to the same double ("nan", "inf" for the specials).
std::string format_double(double value);

/// Minimal CSV writer: fixed header, rows of pre-formatted fields, '\n' line endings.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

    CsvWriter& field(const std::string& text);
    CsvWriter& field(double value) { return field(format_double(value)); }
    CsvWriter& field(int value) { return field(std::to_string(value)); }
    CsvWriter& field(long long value) { return field(std::to_string(value)); }
    CsvWriter& field(std::size_t value) { return field(std::to_string(value)); }
    void end_row();

private:
    std::ofstream out_;
    std::size_t columns_;
    std::size_t pending_ = 0;
};

/// Columns i, j, k, t, x_1..x_d, stopped_flag (1 once the path has been stopped).
void write_ensemble_csv(const TrajectoryEnsemble& ensemble, const std::filesystem::path& path);

/// Native-endian binary dump; see README for the layout.
void write_ensemble_binary(const TrajectoryEnsemble& ensemble, const std::filesystem::path& path);
TrajectoryEnsemble read_ensemble_binary(const std::filesystem::path& path);

nlohmann::json generator_to_json(const GeneratorMatrix& generator);
GeneratorMatrix generator_from_json(const nlohmann::json& doc);
void write_generator(const GeneratorMatrix& generator, const std::filesystem::path& path);
GeneratorMatrix read_generator(const std::filesystem::path& path);

nlohmann::json dictionary_to_json(const Dictionary& dict);
/// Accepts {"dim", "exponents"} or {"dim", "max_degree", "include_constant"}.
Dictionary dictionary_from_json(const nlohmann::json& doc);

/// Readable polynomials followed by the raw coefficient arrays.
void write_identified_model(const IdentifiedModel& model, const std::filesystem::path& path);

/// Reads a whole JSON file; ConfigError names the path when it is missing or malformed.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace rtedmd

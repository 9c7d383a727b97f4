#include "rtedmd/generator.hpp"

#include <variant>

#include "rtedmd/errors.hpp"

namespace rtedmd {

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::RtEdmd: return "rt_edmd";
        case Provenance::RtEdmdModified: return "rt_edmd_modified";
        case Provenance::EdmdKlm: return "edmd_klm";
        case Provenance::GedmdFdm: return "gedmd_fdm";
        case Provenance::Analytic: return "analytic";
    }
    return "unknown";
}

Provenance provenance_from_string(std::string_view s) {
    if (s == "rt_edmd") return Provenance::RtEdmd;
    if (s == "rt_edmd_modified") return Provenance::RtEdmdModified;
    if (s == "edmd_klm") return Provenance::EdmdKlm;
    if (s == "gedmd_fdm") return Provenance::GedmdFdm;
    if (s == "analytic") return Provenance::Analytic;
    throw ConfigError("unknown provenance '" + std::string(s) + "'");
}

GeneratorMatrix::GeneratorMatrix(Eigen::MatrixXd e, Dictionary dict, Provenance p)
    : entries(std::move(e)), dictionary(std::move(dict)), provenance(p) {
    validate();
}

void GeneratorMatrix::validate() const {
    if (entries.rows() != dictionary.size() || entries.cols() != dictionary.size())
        throw DimensionError("generator matrix is " + std::to_string(entries.rows()) + "x" +
                             std::to_string(entries.cols()) + " but the dictionary has " +
                             std::to_string(dictionary.size()) + " observables");
    if (!entries.allFinite()) throw NumericalError("generator matrix has non-finite entries");
}

GeneratorMatrix analytic_generator(const Dictionary& dict, const SdeModel& model) {
    auto result = analytic_generator_matrix(dict, model);
    if (auto* failure = std::get_if<ClosureFailure>(&result)) throw DictionaryError(failure->message);
    return GeneratorMatrix(std::get<Eigen::MatrixXd>(std::move(result)), dict, Provenance::Analytic);
}

}  // namespace rtedmd

#pragma once

#include <string>
#include <string_view>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "rtedmd/dictionary.hpp"

namespace rtedmd {

enum class Provenance { RtEdmd, RtEdmdModified, EdmdKlm, GedmdFdm, Analytic };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

/// Finite-rank generator on the span of a dictionary.
///
/// Column n of `entries` holds the coefficients of L z_n over the dictionary, i.e.
/// (L h)(x) ~ Z_N(x) (entries * theta) for h = Z_N theta. Right eigenvectors are
/// therefore eigenfunction coefficient vectors.
struct GeneratorMatrix {
    Eigen::MatrixXd entries;
    Dictionary dictionary;
    Provenance provenance = Provenance::RtEdmd;
    /// Free-form echo of the producing configuration; serialised verbatim.
    nlohmann::json metadata = nlohmann::json::object();
    /// Largest imaginary part dropped when the matrix came from a complex computation.
    double imaginary_residue = 0.0;

    GeneratorMatrix(Eigen::MatrixXd entries, Dictionary dictionary, Provenance provenance);

    int size() const { return dictionary.size(); }

    /// Coefficients of L z_n over the dictionary.
    Eigen::VectorXd image_of(int n) const { return entries.col(n); }

    /// Throws if the shape disagrees with the dictionary or any entry is non-finite.
    void validate() const;
};

/// Wraps analytic_generator_matrix; throws DictionaryError when closure fails.
GeneratorMatrix analytic_generator(const Dictionary& dict, const SdeModel& model);

}  // namespace rtedmd

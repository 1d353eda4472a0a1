#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "ibmot/measures.hpp"

namespace ibmot {

/// {"atoms": [...], "weights": [...]}; weights optional (uniform if absent).
EmpiricalMeasure measure_from_json(const nlohmann::json& j);
nlohmann::json measure_to_json(const EmpiricalMeasure& m);

/// One sample per line under a `value` header column; yields the uniform
/// empirical measure of the samples. A headerless single column is accepted.
EmpiricalMeasure measure_from_csv(std::istream& in);

/// Dispatches on extension: .json -> JSON, anything else -> CSV.
EmpiricalMeasure load_measure(const std::string& path);
void save_measure(const std::string& path, const EmpiricalMeasure& m);

}  // namespace ibmot

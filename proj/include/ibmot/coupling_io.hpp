#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "ibmot/coupling.hpp"

namespace ibmot {

/// Long format with header `i,j,x,y,p` (0-based indices), one line per entry,
/// full round-trip precision.
void write_coupling_csv(std::ostream& out, const Coupling& c);
Coupling read_coupling_csv(std::istream& in);

void save_coupling_csv(const std::string& path, const Coupling& c);
Coupling load_coupling_csv(const std::string& path);

/// {"x": [...], "y": [...], "p": [[row 0], [row 1], ...]}
nlohmann::json coupling_to_json(const Coupling& c);
Coupling coupling_from_json(const nlohmann::json& j);

}  // namespace ibmot

#include "ibmot/measures_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <vector>

#include "ibmot/errors.hpp"

namespace ibmot {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r\""));
    const auto end = cell.find_last_not_of(" \t\r\"");
    cell.erase(end == std::string::npos ? 0 : end + 1);
    cells.push_back(cell);
  }
  return cells;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("csv line " + std::to_string(line_no) + ": cannot parse '" + s + "'");
  }
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

EmpiricalMeasure measure_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("atoms")) throw InvalidArgument("measure json: missing 'atoms'");
  std::vector<double> atoms;
  std::vector<double> weights;
  try {
    atoms = j.at("atoms").get<std::vector<double>>();
    if (j.contains("weights")) weights = j.at("weights").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("measure json: ") + e.what());
  }
  if (weights.empty()) return uniform_measure(atoms);
  return make_measure(atoms, weights);
}

nlohmann::json measure_to_json(const EmpiricalMeasure& m) {
  return {{"atoms", std::vector<double>(m.atoms().begin(), m.atoms().end())},
          {"weights", std::vector<double>(m.weights().begin(), m.weights().end())}};
}

EmpiricalMeasure measure_from_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::ptrdiff_t column = 0;
  std::vector<double> samples;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      const auto it = std::find(cells.begin(), cells.end(), "value");
      if (it != cells.end()) {
        column = it - cells.begin();
        continue;
      }
      if (cells.size() != 1) throw InvalidArgument("csv: no 'value' column in header");
    }
    if (static_cast<std::size_t>(column) >= cells.size())
      throw InvalidArgument("csv line " + std::to_string(line_no) + ": missing value column");
    samples.push_back(parse_double(cells[static_cast<std::size_t>(column)], line_no));
  }
  if (samples.empty()) throw InvalidArgument("csv: no samples");
  return uniform_measure(samples);
}

EmpiricalMeasure load_measure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  if (ends_with(path, ".json")) {
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": " + e.what());
    }
    return measure_from_json(j);
  }
  return measure_from_csv(in);
}

void save_measure(const std::string& path, const EmpiricalMeasure& m) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << measure_to_json(m).dump(2) << '\n';
}

}  // namespace ibmot

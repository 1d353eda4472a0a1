#include "ibmot/coupling_io.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <vector>

#include "ibmot/errors.hpp"

namespace ibmot {

void write_coupling_csv(std::ostream& out, const Coupling& c) {
  out << "i,j,x,y,p\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < c.p.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.p.cols(); ++j) {
      out << i << ',' << j << ',' << c.x(i) << ',' << c.y(j) << ',' << c.p(i, j) << '\n';
    }
  }
}

Coupling read_coupling_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("coupling csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "i,j,x,y,p") throw InvalidArgument("coupling csv: expected header i,j,x,y,p");

  struct Entry {
    long i, j;
    double x, y, p;
  };
  std::vector<Entry> entries;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    Entry e{};
    char c1 = 0, c2 = 0, c3 = 0, c4 = 0;
    if (!(ss >> e.i >> c1 >> e.j >> c2 >> e.x >> c3 >> e.y >> c4 >> e.p) || c1 != ',' || c2 != ',' ||
        c3 != ',' || c4 != ',' || e.i < 0 || e.j < 0)
      throw ParseError("coupling csv line " + std::to_string(line_no) + ": malformed");
    entries.push_back(e);
  }
  if (entries.empty()) throw InvalidArgument("coupling csv: no entries");

  long l = 0, m = 0;
  for (const Entry& e : entries) {
    l = std::max(l, e.i + 1);
    m = std::max(m, e.j + 1);
  }
  Coupling c{Eigen::MatrixXd::Zero(l, m), Eigen::VectorXd::Constant(l, std::nan("")),
             Eigen::VectorXd::Constant(m, std::nan(""))};
  for (const Entry& e : entries) {
    c.p(e.i, e.j) = e.p;
    c.x(e.i) = e.x;
    c.y(e.j) = e.y;
  }
  if (!c.x.allFinite() || !c.y.allFinite())
    throw InvalidArgument("coupling csv: some row or column index never appears");
  return c;
}

void save_coupling_csv(const std::string& path, const Coupling& c) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  write_coupling_csv(out, c);
}

Coupling load_coupling_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  return read_coupling_csv(in);
}

nlohmann::json coupling_to_json(const Coupling& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < c.p.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(c.p.cols()));
    for (Eigen::Index j = 0; j < c.p.cols(); ++j) row[static_cast<std::size_t>(j)] = c.p(i, j);
    rows.push_back(row);
  }
  return {{"x", std::vector<double>(c.x.begin(), c.x.end())},
          {"y", std::vector<double>(c.y.begin(), c.y.end())},
          {"p", rows}};
}

Coupling coupling_from_json(const nlohmann::json& j) {
  try {
    const auto x = j.at("x").get<std::vector<double>>();
    const auto y = j.at("y").get<std::vector<double>>();
    const auto rows = j.at("p").get<std::vector<std::vector<double>>>();
    if (rows.size() != x.size()) throw InvalidArgument("coupling json: row count mismatch");
    Coupling c{Eigen::MatrixXd(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(y.size())),
               Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())),
               Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()))};
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != y.size()) throw InvalidArgument("coupling json: column count mismatch");
      for (std::size_t k = 0; k < y.size(); ++k)
        c.p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("coupling json: ") + e.what());
  }
}

}  // namespace ibmot

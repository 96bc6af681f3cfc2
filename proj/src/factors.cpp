#include "lulcc/factors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "lulcc/error.hpp"

namespace lulcc {

namespace {

constexpr const char* kModule = "factors";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back()))) field.pop_back();
    std::size_t b = 0;
    while (b < field.size() && std::isspace(static_cast<unsigned char>(field[b]))) ++b;
    out.push_back(field.substr(b));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

}  // namespace

void FactorTable::validate(int max_year_step) const {
  if (years.empty()) throw Error(kModule, "no records");
  if (factor_names.empty()) throw Error(kModule, "no factor columns");
  if (values.rows() != static_cast<Eigen::Index>(years.size()) ||
      values.cols() != static_cast<Eigen::Index>(factor_names.size()))
    throw Error(kModule, "value matrix shape does not match years x factors");
  for (std::size_t t = 1; t < years.size(); ++t) {
    if (years[t] == years[t - 1]) throw Error(kModule, "duplicate year " + std::to_string(years[t]));
    if (years[t] < years[t - 1]) throw Error(kModule, "unsorted years");
    if (years[t] - years[t - 1] > max_year_step)
      throw Error(kModule, "year gap after " + std::to_string(years[t - 1]));
  }
  if (!values.allFinite()) throw Error(kModule, "missing or non-finite value");
}

namespace factors {

FactorTable load_factor_table(const std::filesystem::path& path, int max_year_step) {
  std::ifstream in(path);
  if (!in) throw Error(kModule, "unreadable file: " + path.string());
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    header = split_csv(line);
    break;
  }
  if (header.size() < 2) throw Error(kModule, "header must be 'year,<factor>,...'");
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

  FactorTable table;
  table.factor_names.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  std::set<int> seen;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw Error(kModule, "missing value on line " + std::to_string(lineno));
    int year = 0;
    if (!parse_number(fields[0], year))
      throw Error(kModule, "non-numeric year on line " + std::to_string(lineno));
    if (!seen.insert(year).second) throw Error(kModule, "duplicate year " + std::to_string(year));
    std::vector<double> row;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      if (fields[k].empty()) throw Error(kModule, "missing value on line " + std::to_string(lineno));
      double v = 0.0;
      if (!parse_number(fields[k], v) || !std::isfinite(v))
        throw Error(kModule, "non-numeric cell '" + fields[k] + "' on line " + std::to_string(lineno));
      row.push_back(v);
    }
    table.years.push_back(year);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(kModule, "no records");
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.factor_names.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t d = 0; d < rows[t].size(); ++d)
      table.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(d)) = rows[t][d];
  table.validate(max_year_step);
  return table;
}

void write_factor_table(const FactorTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(kModule, "unwritable path: " + path.string());
  out << "year";
  for (const auto& n : table.factor_names) out << ',' << n;
  out << '\n';
  char buf[32];
  for (std::size_t t = 0; t < table.years.size(); ++t) {
    out << table.years[t];
    for (Eigen::Index d = 0; d < table.values.cols(); ++d) {
      std::snprintf(buf, sizeof buf, "%.17g", table.values(static_cast<Eigen::Index>(t), d));
      out << ',' << buf;
    }
    out << '\n';
  }
}

FactorTable normalize_min_max(const FactorTable& table) {
  FactorTable out = table;
  for (Eigen::Index d = 0; d < out.values.cols(); ++d) {
    auto col = out.values.col(d);
    const double lo = col.minCoeff();
    const double hi = col.maxCoeff();
    if (hi == lo) {
      col.setZero();
      continue;
    }
    for (Eigen::Index t = 0; t < col.size(); ++t) col(t) = (col(t) - lo) / (hi - lo);
  }
  return out;
}

ObservationSequence build_observation_sequence(const FactorTable& table, int repeat_factor) {
  if (repeat_factor < 1) throw Error(kModule, "repeat_factor must be >= 1");
  if (table.years.empty()) throw Error(kModule, "no records");
  constexpr double slack = 1e-12;
  if ((table.values.array() < -slack).any() || (table.values.array() > 1.0 + slack).any())
    throw Error(kModule, "unnormalized input: values must lie in [0, 1]");
  const Eigen::Index T = table.values.rows();
  ObservationSequence seq;
  seq.repeat_factor = repeat_factor;
  seq.observations.resize(T * repeat_factor, table.values.cols());
  for (Eigen::Index t = 0; t < T; ++t)
    for (int k = 0; k < repeat_factor; ++k)
      seq.observations.row(t * repeat_factor + k) = table.values.row(t);
  return seq;
}

}  // namespace factors
}  // namespace lulcc

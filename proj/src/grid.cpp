#include "lulcc/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lulcc {

namespace {

constexpr const char* kModule = "grid";

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<double> parse_real(std::string_view tok) {
  double v = 0.0;
  const char* first = tok.data();
  if (!tok.empty() && tok.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct RawGrid {
  GridHeader header;
  std::vector<std::vector<std::string_view>> rows;
  std::string text;
};

void parse_raw(const std::filesystem::path& path, RawGrid& raw) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(kModule, "unreadable file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  raw.text = ss.str();

  std::vector<std::string_view> lines;
  std::string_view all(raw.text);
  std::size_t pos = 0;
  while (pos <= all.size()) {
    std::size_t nl = all.find('\n', pos);
    if (nl == std::string_view::npos) nl = all.size();
    std::string_view line = all.substr(pos, nl - pos);
    if (!split_ws(line).empty()) lines.push_back(line);
    pos = nl + 1;
  }

  static const char* const keys[] = {"ncols", "nrows", "xllcorner",
                                     "yllcorner", "cellsize", "nodata_value"};
  std::map<std::string, double> seen;
  std::size_t li = 0;
  for (; li < lines.size() && li < 6; ++li) {
    auto toks = split_ws(lines[li]);
    if (toks.size() != 2) throw Error(kModule, "malformed header line " + std::to_string(li + 1));
    std::string key = lower(std::string(toks[0]));
    if (std::find(std::begin(keys), std::end(keys), key) == std::end(keys))
      throw Error(kModule, "malformed header: unknown key '" + std::string(toks[0]) + "'");
    if (seen.count(key)) throw Error(kModule, "malformed header: duplicate key '" + key + "'");
    auto v = parse_real(toks[1]);
    if (!v) throw Error(kModule, "malformed header: bad value for '" + key + "'");
    seen[key] = *v;
  }
  for (const char* k : keys)
    if (!seen.count(k)) throw Error(kModule, std::string("malformed header: missing key '") + k + "'");

  auto as_int = [&](const char* k) {
    double v = seen[k];
    if (v != std::floor(v) || v < 1 || v > 1e9)
      throw Error(kModule, std::string("malformed header: '") + k + "' must be a positive integer");
    return static_cast<int>(v);
  };
  raw.header.ncols = as_int("ncols");
  raw.header.nrows = as_int("nrows");
  raw.header.xllcorner = seen["xllcorner"];
  raw.header.yllcorner = seen["yllcorner"];
  raw.header.cellsize = seen["cellsize"];
  raw.header.nodata_value = seen["nodata_value"];
  raw.header.validate();

  for (; li < lines.size(); ++li) raw.rows.push_back(split_ws(lines[li]));
  if (raw.rows.size() != static_cast<std::size_t>(raw.header.nrows))
    throw Error(kModule, "cell count mismatch: expected " + std::to_string(raw.header.nrows) +
                             " rows, found " + std::to_string(raw.rows.size()));
  for (std::size_t r = 0; r < raw.rows.size(); ++r)
    if (raw.rows[r].size() != static_cast<std::size_t>(raw.header.ncols))
      throw Error(kModule, "cell count mismatch: row " + std::to_string(r + 1) + " has " +
                               std::to_string(raw.rows[r].size()) + " values, expected " +
                               std::to_string(raw.header.ncols));
}

void write_header(std::ostream& out, const GridHeader& h) {
  out << "ncols " << h.ncols << '\n'
      << "nrows " << h.nrows << '\n'
      << "xllcorner " << format_real(h.xllcorner) << '\n'
      << "yllcorner " << format_real(h.yllcorner) << '\n'
      << "cellsize " << format_real(h.cellsize) << '\n'
      << "NODATA_value " << format_real(h.nodata_value) << '\n';
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(kModule, "unwritable path: " + path.string());
  return out;
}

}  // namespace

Legend canonical_legend() {
  return {{kVegetation, "V"}, {kImpervious, "I"}, {kSoil, "S"}, {kWater, "Water"}};
}

void GridHeader::validate() const {
  if (ncols < 1) throw Error(kModule, "ncols must be >= 1");
  if (nrows < 1) throw Error(kModule, "nrows must be >= 1");
  if (!(cellsize > 0.0) || !std::isfinite(cellsize)) throw Error(kModule, "cellsize must be > 0");
  if (!std::isfinite(xllcorner) || !std::isfinite(yllcorner) || !std::isfinite(nodata_value))
    throw Error(kModule, "header values must be finite");
}

template <typename T>
Raster<T>::Raster(GridHeader header, T fill) : header_(header) {
  header_.validate();
  cells_.assign(header_.size(), fill);
}

template <typename T>
Raster<T>::Raster(GridHeader header, std::vector<T> cells)
    : header_(header), cells_(std::move(cells)) {
  header_.validate();
  if (cells_.size() != header_.size()) throw Error(kModule, "cell count mismatch");
}

template class Raster<int>;
template class Raster<double>;

ContinuousGrid::ContinuousGrid(GridHeader header, double fill)
    : ContinuousGrid(header, std::vector<double>(header.size(), fill)) {}

ContinuousGrid::ContinuousGrid(GridHeader header, std::vector<double> cells)
    : Raster<double>(header, std::move(cells)) {
  for (double v : cells_)
    if (!std::isfinite(v)) throw Error(kModule, "continuous grid holds a non-finite value");
}

CategoricalGrid::CategoricalGrid(GridHeader header, int fill, Legend legend)
    : CategoricalGrid(header, std::vector<int>(header.size(), fill), std::move(legend)) {}

CategoricalGrid::CategoricalGrid(GridHeader header, std::vector<int> cells, Legend legend)
    : Raster<int>(header, std::move(cells)), legend_(std::move(legend)) {
  if (header_.nodata_value != std::floor(header_.nodata_value))
    throw Error(kModule, "categorical grid needs an integral nodata value");
  validate_legend();
}

void CategoricalGrid::set_legend(Legend legend) {
  legend_ = std::move(legend);
  validate_legend();
}

void CategoricalGrid::validate_legend() const {
  if (legend_.empty()) return;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (is_nodata(i)) continue;
    if (!legend_.count(cells_[i]))
      throw Error(kModule, "code " + std::to_string(cells_[i]) + " missing from legend");
  }
}

std::filesystem::path legend_path(const std::filesystem::path& grid_path) {
  auto p = grid_path;
  p.replace_extension(".legend.json");
  return p;
}

CategoricalGrid read_categorical_grid(const std::filesystem::path& path) {
  RawGrid raw;
  parse_raw(path, raw);
  if (raw.header.nodata_value != std::floor(raw.header.nodata_value))
    throw Error(kModule, "categorical grid needs an integral nodata value");
  std::vector<int> cells;
  cells.reserve(raw.header.size());
  for (const auto& row : raw.rows) {
    for (auto tok : row) {
      auto v = parse_real(tok);
      if (!v || *v != std::floor(*v) || std::fabs(*v) > 2e9)
        throw Error(kModule, "non-integer value in categorical grid: '" + std::string(tok) + "'");
      cells.push_back(static_cast<int>(*v));
    }
  }
  Legend legend;
  auto lp = legend_path(path);
  if (std::filesystem::exists(lp)) {
    std::ifstream in(lp);
    nlohmann::json j;
    try {
      in >> j;
      for (auto& [code, name] : j.items()) legend[std::stoi(code)] = name.get<std::string>();
    } catch (const std::exception& e) {
      throw Error(kModule, "malformed legend sidecar " + lp.string() + ": " + e.what());
    }
  }
  return CategoricalGrid(raw.header, std::move(cells), std::move(legend));
}

ContinuousGrid read_continuous_grid(const std::filesystem::path& path) {
  RawGrid raw;
  parse_raw(path, raw);
  std::vector<double> cells;
  cells.reserve(raw.header.size());
  for (const auto& row : raw.rows) {
    for (auto tok : row) {
      auto v = parse_real(tok);
      if (!v || !std::isfinite(*v))
        throw Error(kModule, "non-numeric value in grid: '" + std::string(tok) + "'");
      cells.push_back(*v);
    }
  }
  return ContinuousGrid(raw.header, std::move(cells));
}

void write_ascii_grid(const CategoricalGrid& grid, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  write_header(out, grid.header());
  for (int r = 0; r < grid.nrows(); ++r) {
    for (int c = 0; c < grid.ncols(); ++c) {
      if (c) out << ' ';
      out << grid.at(r, c);
    }
    out << '\n';
  }
  if (!out) throw Error(kModule, "unwritable path: " + path.string());
  if (!grid.legend().empty()) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [code, name] : grid.legend()) j[std::to_string(code)] = name;
    std::ofstream lout(legend_path(path));
    if (!lout) throw Error(kModule, "unwritable path: " + legend_path(path).string());
    lout << j.dump(2) << '\n';
  }
}

void write_ascii_grid(const ContinuousGrid& grid, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  write_header(out, grid.header());
  const std::string nodata = format_real(grid.header().nodata_value);
  for (int r = 0; r < grid.nrows(); ++r) {
    for (int c = 0; c < grid.ncols(); ++c) {
      if (c) out << ' ';
      const std::size_t i = grid.index(r, c);
      out << (grid.is_nodata(i) ? nodata : format_real(grid[i]));
    }
    out << '\n';
  }
  if (!out) throw Error(kModule, "unwritable path: " + path.string());
}

std::vector<double> class_frequencies(const CategoricalGrid& grid,
                                      std::span<const int> classes, const Mask& mask) {
  if (classes.empty()) throw Error(kModule, "class list is empty");
  if (mask) validate_alignment(grid, *mask);
  std::vector<std::size_t> counts(classes.size(), 0);
  std::size_t total = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.is_nodata(i) || masked(mask, i)) continue;
    auto it = std::find(classes.begin(), classes.end(), grid[i]);
    if (it == classes.end()) continue;
    ++counts[static_cast<std::size_t>(it - classes.begin())];
    ++total;
  }
  if (total == 0) throw Error(kModule, "no countable cells");
  std::vector<double> freq(classes.size());
  for (std::size_t k = 0; k < classes.size(); ++k)
    freq[k] = static_cast<double>(counts[k]) / static_cast<double>(total);
  return freq;
}

CategoricalGrid reclass_group(const CategoricalGrid& grid, const std::map<int, int>& group_map) {
  std::vector<int> cells(grid.cells().begin(), grid.cells().end());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (grid.is_nodata(i)) continue;
    auto it = group_map.find(cells[i]);
    if (it == group_map.end())
      throw Error(kModule, "unmapped code " + std::to_string(cells[i]));
    cells[i] = it->second;
  }
  return CategoricalGrid(grid.header(), std::move(cells));
}

void validate_alignment(std::span<const GridHeader> headers) {
  if (headers.empty()) throw Error(kModule, "no grids to align");
  const GridHeader& ref = headers.front();
  for (std::size_t k = 1; k < headers.size(); ++k) {
    const GridHeader& h = headers[k];
    auto fail = [&](const char* field) {
      throw Error(kModule, std::string("grids not aligned: ") + field + " differs (grid " +
                               std::to_string(k) + ")");
    };
    if (h.ncols != ref.ncols) fail("ncols");
    if (h.nrows != ref.nrows) fail("nrows");
    if (h.xllcorner != ref.xllcorner) fail("xllcorner");
    if (h.yllcorner != ref.yllcorner) fail("yllcorner");
    if (h.cellsize != ref.cellsize) fail("cellsize");
    if (h.nodata_value != ref.nodata_value) fail("nodata_value");
  }
}

}  // namespace lulcc

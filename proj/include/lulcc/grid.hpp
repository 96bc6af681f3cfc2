#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lulcc/error.hpp"

namespace lulcc {

// Canonical class codes. Code 0 is reserved and never a valid class.
inline constexpr int kVegetation = 1;
inline constexpr int kImpervious = 2;
inline constexpr int kSoil = 3;
inline constexpr int kWater = 4;

using Legend = std::map<int, std::string>;

Legend canonical_legend();

struct GridHeader {
  int ncols = 1;
  int nrows = 1;
  double xllcorner = 0.0;
  double yllcorner = 0.0;
  double cellsize = 1.0;
  double nodata_value = -9999.0;

  void validate() const;
  std::size_t size() const {
    return static_cast<std::size_t>(ncols) * static_cast<std::size_t>(nrows);
  }
  bool operator==(const GridHeader&) const = default;
};

// Row-major raster, top row first. Shared by the categorical and continuous
// variants; nodata cells hold exactly header().nodata_value.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(GridHeader header, T fill);
  Raster(GridHeader header, std::vector<T> cells);

  const GridHeader& header() const { return header_; }
  int nrows() const { return header_.nrows; }
  int ncols() const { return header_.ncols; }
  std::size_t size() const { return cells_.size(); }

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * header_.ncols + col;
  }
  T& at(int row, int col) { return cells_[index(row, col)]; }
  const T& at(int row, int col) const { return cells_[index(row, col)]; }
  T& operator[](std::size_t i) { return cells_[i]; }
  const T& operator[](std::size_t i) const { return cells_[i]; }

  std::span<const T> cells() const { return cells_; }
  std::span<T> cells() { return cells_; }

  T nodata() const { return static_cast<T>(header_.nodata_value); }
  bool is_nodata(std::size_t i) const {
    return static_cast<double>(cells_[i]) == header_.nodata_value;
  }

  bool operator==(const Raster&) const = default;

 protected:
  GridHeader header_;
  std::vector<T> cells_;
};

extern template class Raster<int>;
extern template class Raster<double>;

// Cells are finite reals; nodata is marked by the header value.
class ContinuousGrid : public Raster<double> {
 public:
  ContinuousGrid() = default;
  ContinuousGrid(GridHeader header, double fill);
  ContinuousGrid(GridHeader header, std::vector<double> cells);
};

// Class codes plus a code -> name legend. An empty legend means the legend is
// unspecified; otherwise every non-nodata code must appear in it.
class CategoricalGrid : public Raster<int> {
 public:
  CategoricalGrid() = default;
  CategoricalGrid(GridHeader header, int fill, Legend legend = {});
  CategoricalGrid(GridHeader header, std::vector<int> cells, Legend legend = {});

  const Legend& legend() const { return legend_; }
  void set_legend(Legend legend);
  void validate_legend() const;

  bool operator==(const CategoricalGrid&) const = default;

 private:
  Legend legend_;
};

// Mask convention: a cell is excluded when the mask holds a nonzero code or
// nodata. Water masks therefore carry 1 on water and 0 elsewhere.
using Mask = std::optional<CategoricalGrid>;

inline bool masked(const Mask& mask, std::size_t i) {
  return mask && (mask->is_nodata(i) || (*mask)[i] != 0);
}

enum class GridKind { categorical, continuous };

CategoricalGrid read_categorical_grid(const std::filesystem::path& path);
ContinuousGrid read_continuous_grid(const std::filesystem::path& path);
void write_ascii_grid(const CategoricalGrid& grid, const std::filesystem::path& path);
void write_ascii_grid(const ContinuousGrid& grid, const std::filesystem::path& path);

// Sidecar path `<stem>.legend.json` next to an ASCII grid.
std::filesystem::path legend_path(const std::filesystem::path& grid_path);

std::vector<double> class_frequencies(const CategoricalGrid& grid,
                                      std::span<const int> classes,
                                      const Mask& mask = std::nullopt);

CategoricalGrid reclass_group(const CategoricalGrid& grid,
                              const std::map<int, int>& group_map);

// Throws naming the first mismatching header field.
void validate_alignment(std::span<const GridHeader> headers);

template <typename First, typename... Rest>
  requires requires(const First& g) { g.header(); }
void validate_alignment(const First& first, const Rest&... rest) {
  const GridHeader headers[] = {first.header(), rest.header()...};
  validate_alignment(std::span<const GridHeader>(headers));
}

}  // namespace lulcc

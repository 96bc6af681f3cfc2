#include "lulcc/suitability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

namespace lulcc::suitability {

namespace {

constexpr const char* kModule = "suitability";

// Squared 1-D distance transform of a sampled function (lower envelope of
// parabolas). f holds squared distances, inf where no target.
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
            std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  const double inf = std::numeric_limits<double>::infinity();
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    double s;
    while (true) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[k]) {
        if (--k < 0) break;
      } else {
        break;
      }
    }
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), inf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double diff = q - v[j];
    d[q] = diff * diff + f[v[j]];
  }
}

}  // namespace

ContinuousGrid slope_from_dem(const ContinuousGrid& dem) {
  const int nr = dem.nrows(), nc = dem.ncols();
  if (nr < 2 || nc < 2) throw Error(kModule, "slope needs a grid of at least 2x2");
  const double cs = dem.header().cellsize;
  auto valid = [&](int r, int c) {
    return r >= 0 && r < nr && c >= 0 && c < nc && !dem.is_nodata(dem.index(r, c));
  };
  // Derivative along one axis in the line through (r, c); dr/dc select the axis.
  auto line_derivative = [&](int r, int c, int dr, int dc, double& out) {
    if (!valid(r, c)) return false;
    const bool fwd = valid(r + dr, c + dc);
    const bool back = valid(r - dr, c - dc);
    const double z0 = dem.at(r, c);
    if (fwd && back) {
      out = (dem.at(r + dr, c + dc) - dem.at(r - dr, c - dc)) / (2.0 * cs);
    } else if (fwd) {
      out = (dem.at(r + dr, c + dc) - z0) / cs;
    } else if (back) {
      out = (z0 - dem.at(r - dr, c - dc)) / cs;
    } else {
      return false;
    }
    return true;
  };

  std::vector<double> raw(dem.size(), 0.0);
  std::vector<bool> defined(dem.size(), false);
  static constexpr int kOffsets[3] = {-1, 0, 1};
  static constexpr double kWeights[3] = {1.0, 2.0, 1.0};
  for (int r = 0; r < nr; ++r) {
    for (int c = 0; c < nc; ++c) {
      const std::size_t i = dem.index(r, c);
      if (dem.is_nodata(i)) continue;
      double gx = 0.0, wx = 0.0, gy = 0.0, wy = 0.0;
      for (int k = 0; k < 3; ++k) {
        double g;
        // East-west derivative in rows r-1, r, r+1.
        if (line_derivative(r + kOffsets[k], c, 0, 1, g)) {
          gx += kWeights[k] * g;
          wx += kWeights[k];
        }
        // North-south derivative in columns c-1, c, c+1.
        if (line_derivative(r, c + kOffsets[k], 1, 0, g)) {
          gy += kWeights[k] * g;
          wy += kWeights[k];
        }
      }
      if (wx > 0.0) gx /= wx;
      if (wy > 0.0) gy /= wy;
      raw[i] = std::sqrt(gx * gx + gy * gy);
      defined[i] = true;
    }
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < raw.size(); ++i)
    if (defined[i]) {
      lo = std::min(lo, raw[i]);
      hi = std::max(hi, raw[i]);
    }
  std::vector<double> out(dem.size(), dem.header().nodata_value);
  const double span = hi - lo;
  const bool flat = !(span > 1e-12 * std::max(1.0, std::fabs(hi)));
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!defined[i]) continue;
    out[i] = flat ? 0.0 : 255.0 * (raw[i] - lo) / span;
  }
  return ContinuousGrid(dem.header(), std::move(out));
}

double slope_suitability(double slope) {
  if (std::isnan(slope) || slope < 0.0) throw Error(kModule, "negative slope value");
  return std::pow(std::max(slope, 1.0), -0.1);
}

ContinuousGrid slope_suitability(const ContinuousGrid& slope) {
  ContinuousGrid out = slope;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!slope.is_nodata(i)) out[i] = slope_suitability(slope[i]);
  return out;
}

ContinuousGrid proximity_transform(const CategoricalGrid& target_mask, int target_code) {
  const int nr = target_mask.nrows(), nc = target_mask.ncols();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> f(target_mask.size(), inf);
  bool any = false;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!target_mask.is_nodata(i) && target_mask[i] == target_code) {
      f[i] = 0.0;
      any = true;
    }
  if (!any) throw Error(kModule, "no target cells");

  const int n = std::max(nr, nc);
  std::vector<double> line(static_cast<std::size_t>(n)), d(static_cast<std::size_t>(n));
  std::vector<int> v(static_cast<std::size_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n) + 1);

  // Columns first, then rows.
  line.resize(static_cast<std::size_t>(nr));
  d.resize(static_cast<std::size_t>(nr));
  for (int c = 0; c < nc; ++c) {
    for (int r = 0; r < nr; ++r) line[static_cast<std::size_t>(r)] = f[target_mask.index(r, c)];
    edt_1d(line, d, v, z);
    for (int r = 0; r < nr; ++r) f[target_mask.index(r, c)] = d[static_cast<std::size_t>(r)];
  }
  line.resize(static_cast<std::size_t>(nc));
  d.resize(static_cast<std::size_t>(nc));
  for (int r = 0; r < nr; ++r) {
    for (int c = 0; c < nc; ++c) line[static_cast<std::size_t>(c)] = f[target_mask.index(r, c)];
    edt_1d(line, d, v, z);
    for (int c = 0; c < nc; ++c) f[target_mask.index(r, c)] = d[static_cast<std::size_t>(c)];
  }

  const double cs = target_mask.header().cellsize;
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = std::sqrt(f[i]) * cs;
  return ContinuousGrid(target_mask.header(), std::move(out));
}

double cramers_v(const Eigen::MatrixXd& table) {
  if ((table.array() < 0.0).any()) throw Error(kModule, "negative contingency count");
  std::vector<Eigen::Index> rows, cols;
  for (Eigen::Index i = 0; i < table.rows(); ++i)
    if (table.row(i).sum() > 0.0) rows.push_back(i);
  for (Eigen::Index j = 0; j < table.cols(); ++j)
    if (table.col(j).sum() > 0.0) cols.push_back(j);
  if (cols.size() < 2) throw Error(kModule, "fewer than 2 outcome categories");
  if (rows.size() < 2) return 0.0;

  const double n = table.sum();
  std::vector<double> row_sum(rows.size()), col_sum(cols.size());
  for (std::size_t a = 0; a < rows.size(); ++a) row_sum[a] = table.row(rows[a]).sum();
  for (std::size_t b = 0; b < cols.size(); ++b) col_sum[b] = table.col(cols[b]).sum();
  double chi2 = 0.0;
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = 0; b < cols.size(); ++b) {
      const double expected = row_sum[a] * col_sum[b] / n;
      const double diff = table(rows[a], cols[b]) - expected;
      chi2 += diff * diff / expected;
    }
  const double k = static_cast<double>(std::min(rows.size(), cols.size()) - 1);
  return std::min(1.0, std::sqrt(chi2 / (n * k)));
}

double cramers_v(const ContinuousGrid& driver, const CategoricalGrid& outcome, int bins,
                 const Mask& mask) {
  if (bins < 1) throw Error(kModule, "bins must be positive");
  validate_alignment(driver, outcome);
  if (mask) validate_alignment(driver, *mask);

  std::vector<std::size_t> cells;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::map<int, Eigen::Index> outcome_col;
  for (std::size_t i = 0; i < driver.size(); ++i) {
    if (driver.is_nodata(i) || outcome.is_nodata(i) || masked(mask, i)) continue;
    cells.push_back(i);
    lo = std::min(lo, driver[i]);
    hi = std::max(hi, driver[i]);
    outcome_col.emplace(outcome[i], 0);
  }
  if (outcome_col.size() < 2) throw Error(kModule, "fewer than 2 outcome categories");
  if (hi == lo) return 0.0;
  Eigen::Index next = 0;
  for (auto& [code, col] : outcome_col) col = next++;

  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(bins, next);
  const double width = (hi - lo) / bins;
  for (std::size_t i : cells) {
    auto b = static_cast<Eigen::Index>(std::floor((driver[i] - lo) / width));
    b = std::clamp<Eigen::Index>(b, 0, bins - 1);
    table(b, outcome_col[outcome[i]]) += 1.0;
  }
  return cramers_v(table);
}

}  // namespace lulcc::suitability

#include "lulcc/validate.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

namespace lulcc {

namespace {

constexpr const char* kModule = "validate";

int find_root(std::vector<int>& parent, int x) {
  while (parent[static_cast<std::size_t>(x)] != x) {
    parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    x = parent[static_cast<std::size_t>(x)];
  }
  return x;
}

void unite(std::vector<int>& parent, int a, int b) {
  a = find_root(parent, a);
  b = find_root(parent, b);
  if (a == b) return;
  if (a < b) parent[static_cast<std::size_t>(b)] = a;
  else parent[static_cast<std::size_t>(a)] = b;
}

BlobStats stats_for(std::span<const std::uint8_t> fg, int nrows, int ncols) {
  int count = 0;
  const auto labels = validate::label_components(fg, nrows, ncols, count);
  std::vector<long long> area(static_cast<std::size_t>(count) + 1, 0);
  for (int l : labels) ++area[static_cast<std::size_t>(l)];
  BlobStats s;
  s.count = count;
  for (int l = 1; l <= count; ++l) {
    s.total_area += area[static_cast<std::size_t>(l)];
    s.largest_area = std::max(s.largest_area, area[static_cast<std::size_t>(l)]);
  }
  s.mean_area = count ? static_cast<double>(s.total_area) / count : 0.0;
  return s;
}

nlohmann::json blob_json(const BlobStats& s) {
  return {{"count", s.count}, {"total_area", s.total_area}, {"mean_area", s.mean_area},
          {"largest_area", s.largest_area}};
}

}  // namespace

nlohmann::json to_json(const ConfusionMatrix& cm) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < cm.counts.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < cm.counts.cols(); ++j) row.push_back(cm.counts(i, j));
    rows.push_back(std::move(row));
  }
  return {{"classes", cm.classes}, {"counts", rows}};
}

nlohmann::json to_json(const std::vector<ClassScore>& scores) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : scores) {
    out.push_back({{"class", s.code},
                   {"precision", s.precision ? nlohmann::json(*s.precision) : nlohmann::json(nullptr)},
                   {"recall", s.recall ? nlohmann::json(*s.recall) : nlohmann::json(nullptr)}});
  }
  return out;
}

nlohmann::json to_json(const BlobReport& r) {
  return {{"true_positive", blob_json(r.true_positive)},
          {"false_positive", blob_json(r.false_positive)},
          {"false_negative", blob_json(r.false_negative)}};
}

namespace validate {

ConfusionMatrix confusion_matrix(const CategoricalGrid& actual, const CategoricalGrid& predicted,
                                 std::span<const int> classes, const Mask& mask) {
  validate_alignment(actual, predicted);
  if (mask) validate_alignment(actual, *mask);
  if (classes.empty()) throw Error(kModule, "class list is empty");
  ConfusionMatrix cm;
  cm.classes.assign(classes.begin(), classes.end());
  const auto n = static_cast<Eigen::Index>(classes.size());
  cm.counts = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
  auto slot = [&](int code) {
    auto it = std::find(classes.begin(), classes.end(), code);
    if (it == classes.end()) throw Error(kModule, "unexpected class code " + std::to_string(code));
    return static_cast<Eigen::Index>(it - classes.begin());
  };
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (masked(mask, i) || actual.is_nodata(i) || predicted.is_nodata(i)) continue;
    ++cm.counts(slot(actual[i]), slot(predicted[i]));
  }
  if (cm.total() == 0) throw Error(kModule, "no unmasked cells to compare");
  return cm;
}

std::vector<ClassScore> precision_recall(const ConfusionMatrix& cm) {
  std::vector<ClassScore> out;
  for (Eigen::Index k = 0; k < cm.counts.rows(); ++k) {
    ClassScore s;
    s.code = cm.classes[static_cast<std::size_t>(k)];
    const long long predicted = cm.counts.col(k).sum();
    const long long actual = cm.counts.row(k).sum();
    if (predicted > 0) s.precision = static_cast<double>(cm.counts(k, k)) / static_cast<double>(predicted);
    if (actual > 0) s.recall = static_cast<double>(cm.counts(k, k)) / static_cast<double>(actual);
    out.push_back(s);
  }
  return out;
}

double overall_accuracy(const ConfusionMatrix& cm) {
  const long long total = cm.total();
  if (total == 0) throw Error(kModule, "empty confusion matrix");
  return static_cast<double>(cm.counts.diagonal().sum()) / static_cast<double>(total);
}

std::vector<int> label_components(std::span<const std::uint8_t> foreground, int nrows, int ncols,
                                  int& count) {
  const std::size_t n = static_cast<std::size_t>(nrows) * static_cast<std::size_t>(ncols);
  if (foreground.size() != n) throw Error(kModule, "foreground size does not match grid shape");
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto idx = [ncols](int r, int c) { return r * ncols + c; };

  // First pass: union with the already-visited half of the 8-neighbourhood.
  for (int r = 0; r < nrows; ++r) {
    for (int c = 0; c < ncols; ++c) {
      if (!foreground[static_cast<std::size_t>(idx(r, c))]) continue;
      static constexpr int kPrev[4][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}};
      for (const auto& d : kPrev) {
        const int rr = r + d[0], cc = c + d[1];
        if (rr < 0 || cc < 0 || cc >= ncols) continue;
        if (foreground[static_cast<std::size_t>(idx(rr, cc))]) unite(parent, idx(r, c), idx(rr, cc));
      }
    }
  }

  std::vector<int> labels(n, 0);
  std::vector<int> root_label(n, 0);
  count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!foreground[i]) continue;
    const int root = find_root(parent, static_cast<int>(i));
    int& l = root_label[static_cast<std::size_t>(root)];
    if (l == 0) l = ++count;
    labels[i] = l;
  }
  return labels;
}

BlobReport blob_analysis(const CategoricalGrid& actual, const CategoricalGrid& predicted, int urban_code,
                         const Mask& mask) {
  validate_alignment(actual, predicted);
  if (mask) validate_alignment(actual, *mask);
  const std::size_t n = actual.size();
  std::vector<std::uint8_t> tp(n, 0), fp(n, 0), fn(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (masked(mask, i) || actual.is_nodata(i) || predicted.is_nodata(i)) continue;
    const bool a = actual[i] == urban_code;
    const bool p = predicted[i] == urban_code;
    tp[i] = a && p;
    fp[i] = !a && p;
    fn[i] = a && !p;
  }
  BlobReport r;
  r.true_positive = stats_for(tp, actual.nrows(), actual.ncols());
  r.false_positive = stats_for(fp, actual.nrows(), actual.ncols());
  r.false_negative = stats_for(fn, actual.nrows(), actual.ncols());
  return r;
}

void render_overlay(const CategoricalGrid& actual, const CategoricalGrid& predicted, int urban_code,
                    const std::filesystem::path& path, const Mask& mask) {
  validate_alignment(actual, predicted);
  if (mask) validate_alignment(actual, *mask);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(kModule, "unwritable path: " + path.string());
  out << "P6\n" << actual.ncols() << ' ' << actual.nrows() << "\n255\n";
  std::vector<unsigned char> pixels;
  pixels.reserve(actual.size() * 3);
  for (std::size_t i = 0; i < actual.size(); ++i) {
    unsigned char rgb[3] = {255, 255, 255};
    if (masked(mask, i) || actual.is_nodata(i) || predicted.is_nodata(i)) {
      rgb[0] = rgb[1] = rgb[2] = 0;
    } else {
      const bool a = actual[i] == urban_code;
      const bool p = predicted[i] == urban_code;
      if (a && p) { rgb[0] = 0; rgb[1] = 255; rgb[2] = 0; }
      else if (p) { rgb[0] = 255; rgb[1] = 0; rgb[2] = 0; }
      else if (a) { rgb[0] = 0; rgb[1] = 0; rgb[2] = 255; }
    }
    pixels.insert(pixels.end(), rgb, rgb + 3);
  }
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw Error(kModule, "unwritable path: " + path.string());
}

}  // namespace validate
}  // namespace lulcc

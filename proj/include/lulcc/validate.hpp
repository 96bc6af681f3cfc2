#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "lulcc/grid.hpp"

namespace lulcc {

// Rows are actual classes, columns predicted classes.
struct ConfusionMatrix {
  std::vector<int> classes;
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> counts;

  long long total() const { return counts.sum(); }
};

struct ClassScore {
  int code = 0;
  std::optional<double> precision;  // nullopt when the class was never predicted
  std::optional<double> recall;     // nullopt when the class never occurs
};

struct BlobStats {
  long long count = 0;
  long long total_area = 0;
  double mean_area = 0.0;
  long long largest_area = 0;
};

struct BlobReport {
  BlobStats true_positive;
  BlobStats false_positive;
  BlobStats false_negative;
};

nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const std::vector<ClassScore>& scores);
nlohmann::json to_json(const BlobReport& report);

namespace validate {

ConfusionMatrix confusion_matrix(const CategoricalGrid& actual, const CategoricalGrid& predicted,
                                 std::span<const int> classes, const Mask& mask = std::nullopt);

std::vector<ClassScore> precision_recall(const ConfusionMatrix& cm);

double overall_accuracy(const ConfusionMatrix& cm);

// 8-connected component labels of `foreground` (row-major, nrows x ncols).
// Background cells get label 0; components are numbered 1..count in order of
// their first cell in row-major order.
std::vector<int> label_components(std::span<const std::uint8_t> foreground, int nrows, int ncols,
                                  int& count);

BlobReport blob_analysis(const CategoricalGrid& actual, const CategoricalGrid& predicted, int urban_code,
                         const Mask& mask = std::nullopt);

// Binary PPM (P6): green TP, red FP, blue FN, white TN, black masked/nodata.
void render_overlay(const CategoricalGrid& actual, const CategoricalGrid& predicted, int urban_code,
                    const std::filesystem::path& path, const Mask& mask = std::nullopt);

}  // namespace validate
}  // namespace lulcc

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>

namespace lulcc {

// Deterministic random source. The engine is std::mt19937_64 (fully specified
// by the standard); the uniform and normal transforms are implemented here so
// draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream derived from (seed, label). Adding a new labelled
  // stream never perturbs the draws of existing ones.
  static Rng stream(std::uint64_t seed, std::string_view label);

  std::uint64_t next() { return engine_(); }
  double uniform();  // [0, 1)
  double normal();   // standard normal
  std::size_t below(std::size_t n);
  std::size_t categorical(std::span<const double> probs);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace lulcc

#pragma once

#include <span>
#include <vector>

namespace fairot {

/// A finite weighted distribution on the real line. Atoms are kept sorted
/// ascending; duplicate values are allowed (consolidate() merges them).
/// Weights are non-negative and sum to one within kWeightTol.
class Empirical1D {
 public:
  static constexpr double kWeightTol = 1e-9;

  // Sorts, validates, and normalizes away zero-weight atoms.
  Empirical1D(std::vector<double> values, std::vector<double> weights);

  // Uniform weights 1/n.
  static Empirical1D from_samples(std::span<const double> values);

  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return values_.size(); }

  double mean() const;
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }

  // Same distribution with exactly-equal atoms merged.
  Empirical1D consolidated() const;

  bool operator==(const Empirical1D&) const = default;

 private:
  std::vector<double> values_;   // ascending
  std::vector<double> weights_;  // > 0, sums to 1
};

/// Exact p-Wasserstein distance raised to the power p between two 1-D
/// empirical distributions, via the quantile-function integral
/// int_0^1 |F_a^{-1}(u) - F_b^{-1}(u)|^p du. Closed form, no solver.
double exact_wasserstein_1d(int p, const Empirical1D& a, const Empirical1D& b);

}  // namespace fairot

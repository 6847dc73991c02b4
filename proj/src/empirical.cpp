#include "fairot/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairot/errors.hpp"

namespace fairot {

Empirical1D::Empirical1D(std::vector<double> values, std::vector<double> weights) {
  if (values.empty() || values.size() != weights.size()) {
    throw invalid_input("Empirical1D: values and weights must have equal, non-zero length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || !std::isfinite(weights[i])) {
      throw invalid_input("Empirical1D: non-finite entry");
    }
    if (weights[i] < 0.0) throw invalid_input("Empirical1D: negative weight");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > kWeightTol) {
    throw invalid_input("Empirical1D: weights sum to " + std::to_string(total) + ", expected 1");
  }

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  values_.reserve(order.size());
  weights_.reserve(order.size());
  for (std::size_t i : order) {
    if (weights[i] == 0.0) continue;  // zero-weight atoms dropped up front
    values_.push_back(values[i]);
    weights_.push_back(weights[i]);
  }
  if (values_.empty()) throw invalid_input("Empirical1D: all atoms have zero weight");
}

Empirical1D Empirical1D::from_samples(std::span<const double> values) {
  if (values.empty()) throw invalid_input("Empirical1D: empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::vector<double> w(values.size(), 1.0 / static_cast<double>(values.size()));
  return Empirical1D(std::move(v), std::move(w));
}

double Empirical1D::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) m += values_[i] * weights_[i];
  return m;
}

Empirical1D Empirical1D::consolidated() const {
  std::vector<double> v;
  std::vector<double> w;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!v.empty() && values_[i] == v.back()) {
      w.back() += weights_[i];
    } else {
      v.push_back(values_[i]);
      w.push_back(weights_[i]);
    }
  }
  return Empirical1D(std::move(v), std::move(w));
}

double exact_wasserstein_1d(int p, const Empirical1D& a, const Empirical1D& b) {
  if (p < 1) throw invalid_input("exact_wasserstein_1d: order must be >= 1");
  // Walk the merged quantile grid; both inverse CDFs are piecewise constant.
  std::size_t i = 0, j = 0;
  double ca = 0.0, cb = 0.0;  // cumulative mass consumed from each side
  double u = 0.0;
  double total = 0.0;
  const auto& av = a.values();
  const auto& aw = a.weights();
  const auto& bv = b.values();
  const auto& bw = b.weights();
  while (i < av.size() && j < bv.size()) {
    double next_a = ca + aw[i];
    double next_b = cb + bw[j];
    double next = std::min(next_a, next_b);
    double seg = next - u;
    if (seg > 0.0) {
      double gap = std::abs(av[i] - bv[j]);
      total += seg * (p == 1 ? gap : std::pow(gap, p));
    }
    u = next;
    // Nudge both cursors past exhausted atoms; ties advance both.
    if (next_a <= next + 1e-18) {
      ca = next_a;
      ++i;
    }
    if (next_b <= next + 1e-18) {
      cb = next_b;
      ++j;
    }
  }
  return total;
}

}  // namespace fairot

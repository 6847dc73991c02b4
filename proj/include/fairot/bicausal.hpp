#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairot/empirical.hpp"
#include "fairot/ot.hpp"

namespace fairot {

/// One discrete value of the legitimate feature: a display label plus its
/// numeric coordinate. Crossed multi-column legitimate features concatenate
/// their per-column coordinates.
struct Level {
  std::string label;
  std::vector<double> coord;

  bool same_coord(const Level& other) const { return coord == other.coord; }
};

/// ||x - y||_p^p between level coordinates.
double level_ground_cost(const Level& x, const Level& y, int p);

/// Empirical joint of (L, f(X)) within one sensitive group: a weight per
/// level and a 1-D output distribution per level. Levels are kept sorted by
/// coordinate (lexicographic), so equal supports align index-wise.
class LeveledDistribution {
 public:
  LeveledDistribution(std::vector<Level> levels, Vector level_weights,
                      std::vector<Empirical1D> outputs);

  const std::vector<Level>& levels() const { return levels_; }
  const Vector& level_weights() const { return weights_; }
  const std::vector<Empirical1D>& outputs() const { return outputs_; }
  std::size_t size() const { return levels_.size(); }

  // Same distribution with duplicate output atoms merged per level; metric
  // paths use this to shrink solver instances (the value is unchanged).
  LeveledDistribution consolidated() const;

 private:
  std::vector<Level> levels_;
  Vector weights_;
  std::vector<Empirical1D> outputs_;
};

struct BcdConfig {
  double C = 0.0;  // <= 0 selects max(1, 1.01 * output_diameter / min_level_gap)
  int p = 2;
  SinkhornConfig inner;
  SinkhornConfig outer;
  bool use_exact_oracles = false;
};

/// Smallest ||l - l'||_p^p over distinct coordinates in the union of both
/// level sets. Throws invalid_input when all levels share one coordinate
/// (any C > 0 suffices in that case).
double min_level_gap(const LeveledDistribution& d0, const LeveledDistribution& d1, int p);

/// max |y - y'|^p over all output atoms observed in either distribution.
double output_diameter(const LeveledDistribution& d0, const LeveledDistribution& d1, int p);

/// Data-driven default for the level-mismatch penalty.
double recommended_c(const LeveledDistribution& d0, const LeveledDistribution& d1, int p);

struct BcdResult {
  double value = 0.0;  // outer transport cost, power-p form
  double c_used = 0.0;
  Matrix outer_cost;  // D(m, n)
  TransportPlan outer_plan;
  std::map<std::pair<int, int>, Matrix> inner_plans;
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Two-stage bi-causal distance: for every level pair, an inner transport
/// between the output conditionals; then an outer transport between the
/// level marginals under D(m,n) = C*||l_m - l_n||_p^p + InnerCost(m,n).
/// Inner problems are independent and run in parallel.
BcdResult bcd_nested_sinkhorn(const LeveledDistribution& d0, const LeveledDistribution& d1,
                              const BcdConfig& cfg);

/// Level-wise sum P(l) * W_p^p of the output conditionals, defined only
/// when the two level marginals coincide (the infinite off-diagonal cost
/// admits no finite plan otherwise -> nullopt). Requires equal supports.
std::optional<double> cdd_wass_direct(const LeveledDistribution& d0,
                                      const LeveledDistribution& d1, int p);

/// BCD value minus C * W_p^p between the two level marginals, removing the
/// model-independent share of the distance.
double normalized_cdd_wass(const LeveledDistribution& d0, const LeveledDistribution& d1,
                           const BcdConfig& cfg);

}  // namespace fairot

#include "fairot/bicausal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fairot/errors.hpp"
#include "fairot/parallel.hpp"

namespace fairot {

double level_ground_cost(const Level& x, const Level& y, int p) {
  if (x.coord.size() != y.coord.size()) {
    throw invalid_input("level_ground_cost: coordinate dimension mismatch");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < x.coord.size(); ++k) {
    double g = std::abs(x.coord[k] - y.coord[k]);
    total += (p == 1) ? g : std::pow(g, p);
  }
  return total;
}

LeveledDistribution::LeveledDistribution(std::vector<Level> levels, Vector level_weights,
                                         std::vector<Empirical1D> outputs) {
  const std::size_t k = levels.size();
  if (k == 0 || level_weights.size() != static_cast<Eigen::Index>(k) || outputs.size() != k) {
    throw invalid_input("LeveledDistribution: levels/weights/outputs size mismatch");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < level_weights.size(); ++i) {
    if (!std::isfinite(level_weights[i]) || level_weights[i] < 0.0) {
      throw invalid_input("LeveledDistribution: level weights must be finite and >= 0");
    }
    total += level_weights[i];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw invalid_input("LeveledDistribution: level weights sum to " + std::to_string(total));
  }

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return levels[i].coord < levels[j].coord; });
  for (std::size_t i = 0; i + 1 < k; ++i) {
    if (levels[order[i]].coord == levels[order[i + 1]].coord) {
      throw invalid_input("LeveledDistribution: duplicate level coordinate at label '" +
                          levels[order[i]].label + "'");
    }
  }
  levels_.reserve(k);
  outputs_.reserve(k);
  weights_.resize(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    levels_.push_back(std::move(levels[order[i]]));
    outputs_.push_back(std::move(outputs[order[i]]));
    weights_[static_cast<Eigen::Index>(i)] = level_weights[static_cast<Eigen::Index>(order[i])];
  }
}

LeveledDistribution LeveledDistribution::consolidated() const {
  std::vector<Empirical1D> merged;
  merged.reserve(outputs_.size());
  for (const auto& o : outputs_) merged.push_back(o.consolidated());
  return LeveledDistribution(levels_, weights_, std::move(merged));
}

double min_level_gap(const LeveledDistribution& d0, const LeveledDistribution& d1, int p) {
  std::vector<const Level*> all;
  for (const auto& l : d0.levels()) all.push_back(&l);
  for (const auto& l : d1.levels()) all.push_back(&l);
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      if (all[i]->same_coord(*all[j])) continue;
      gap = std::min(gap, level_ground_cost(*all[i], *all[j], p));
    }
  }
  if (!std::isfinite(gap)) {
    throw invalid_input("min_level_gap: all levels share one coordinate; any C > 0 suffices");
  }
  return gap;
}

double output_diameter(const LeveledDistribution& d0, const LeveledDistribution& d1, int p) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto* d : {&d0, &d1}) {
    for (const auto& o : d->outputs()) {
      lo = std::min(lo, o.min());
      hi = std::max(hi, o.max());
    }
  }
  double g = hi - lo;
  return (p == 1) ? g : std::pow(g, p);
}

double recommended_c(const LeveledDistribution& d0, const LeveledDistribution& d1, int p) {
  try {
    double gap = min_level_gap(d0, d1, p);
    return std::max(1.0, 1.01 * output_diameter(d0, d1, p) / gap);
  } catch (const invalid_input&) {
    return 1.0;  // single level: the C term never binds
  }
}

namespace {

Vector atom_weights(const Empirical1D& e) {
  return Eigen::Map<const Vector>(e.weights().data(), static_cast<Eigen::Index>(e.size()));
}

struct InnerSolve {
  double value = 0.0;
  Matrix plan;
  bool converged = false;
};

InnerSolve solve_inner(const Empirical1D& a, const Empirical1D& b, int p,
                       const SinkhornConfig& cfg, bool exact) {
  InnerSolve out;
  CostMatrix cost = pairwise_power_cost(a.values(), b.values(), p);
  if (exact) {
    auto r = brute_force_ot(cost, atom_weights(a), atom_weights(b));
    out.value = r.value;
    out.plan = std::move(r.plan);
    out.converged = true;
  } else {
    auto r = sinkhorn(cost, atom_weights(a), atom_weights(b), cfg);
    out.value = r.transport_cost;
    out.plan = std::move(r.plan.entries);
    out.converged = r.converged;
  }
  return out;
}

}  // namespace

BcdResult bcd_nested_sinkhorn(const LeveledDistribution& d0, const LeveledDistribution& d1,
                              const BcdConfig& cfg) {
  if (cfg.p < 1) throw invalid_input("bcd: order must be >= 1");
  const int m = static_cast<int>(d0.size());
  const int n = static_cast<int>(d1.size());

  BcdResult result;
  result.c_used = cfg.C > 0.0 ? cfg.C : recommended_c(d0, d1, cfg.p);
  if (cfg.C > 0.0 && m + n > 2) {
    try {
      double threshold = output_diameter(d0, d1, cfg.p) / min_level_gap(d0, d1, cfg.p);
      if (cfg.C <= threshold) {
        result.warnings.push_back(
            "bcd: C=" + std::to_string(cfg.C) + " is below the diagonality threshold " +
            std::to_string(threshold) + "; the outer plan may cross levels");
      }
    } catch (const invalid_input&) {
      // single shared coordinate: no threshold to enforce
    }
  }

  // Inner stage: independent problems per level pair.
  std::vector<InnerSolve> inner(static_cast<std::size_t>(m) * n);
  const auto& out0 = d0.outputs();
  const auto& out1 = d1.outputs();
  parallel_for(inner.size(), [&](std::size_t idx) {
    int i = static_cast<int>(idx) / n;
    int j = static_cast<int>(idx) % n;
    inner[idx] = solve_inner(out0[i], out1[j], cfg.p, cfg.inner, cfg.use_exact_oracles);
  });
  for (std::size_t idx = 0; idx < inner.size(); ++idx) {
    if (!inner[idx].converged) {
      int i = static_cast<int>(idx) / n;
      int j = static_cast<int>(idx) % n;
      throw numeric_failure("bcd: inner solver did not converge at level pair (" +
                            d0.levels()[i].label + ", " + d1.levels()[j].label + ")");
    }
  }

  result.outer_cost.resize(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      result.outer_cost(i, j) =
          result.c_used * level_ground_cost(d0.levels()[i], d1.levels()[j], cfg.p) +
          inner[static_cast<std::size_t>(i) * n + j].value;
      result.inner_plans[{i, j}] = std::move(inner[static_cast<std::size_t>(i) * n + j].plan);
    }
  }

  // Outer stage between the level marginals.
  CostMatrix outer_cost(result.outer_cost);
  if (cfg.use_exact_oracles) {
    auto r = brute_force_ot(outer_cost, d0.level_weights(), d1.level_weights());
    result.value = r.value;
    result.outer_plan =
        TransportPlan::checked(r.plan, d0.level_weights(), d1.level_weights(), 1e-9);
    result.converged = true;
  } else {
    auto r = sinkhorn(outer_cost, d0.level_weights(), d1.level_weights(), cfg.outer);
    if (!r.converged) throw numeric_failure("bcd: outer solver did not converge");
    result.value = r.transport_cost;
    result.outer_plan = std::move(r.plan);
    result.converged = true;
  }
  return result;
}

std::optional<double> cdd_wass_direct(const LeveledDistribution& d0,
                                      const LeveledDistribution& d1, int p) {
  if (d0.size() != d1.size()) {
    throw invalid_input("cdd_wass_direct: level supports differ in size (" +
                        std::to_string(d0.size()) + " vs " + std::to_string(d1.size()) + ")");
  }
  for (std::size_t i = 0; i < d0.size(); ++i) {
    if (!d0.levels()[i].same_coord(d1.levels()[i])) {
      throw invalid_input("cdd_wass_direct: level support mismatch at '" +
                          d0.levels()[i].label + "' vs '" + d1.levels()[i].label + "'");
    }
  }
  for (Eigen::Index i = 0; i < d0.level_weights().size(); ++i) {
    if (std::abs(d0.level_weights()[i] - d1.level_weights()[i]) > 1e-9) {
      return std::nullopt;  // no finite-cost plan under the Def. 2 cost
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < d0.size(); ++i) {
    total += d0.level_weights()[static_cast<Eigen::Index>(i)] *
             exact_wasserstein_1d(p, d0.outputs()[i], d1.outputs()[i]);
  }
  return total;
}

double normalized_cdd_wass(const LeveledDistribution& d0, const LeveledDistribution& d1,
                           const BcdConfig& cfg) {
  BcdResult bcd = bcd_nested_sinkhorn(d0, d1, cfg);
  Matrix level_cost(d0.size(), d1.size());
  for (std::size_t i = 0; i < d0.size(); ++i) {
    for (std::size_t j = 0; j < d1.size(); ++j) {
      level_cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          level_ground_cost(d0.levels()[i], d1.levels()[j], cfg.p);
    }
  }
  double marginal_term =
      brute_force_ot(CostMatrix(level_cost), d0.level_weights(), d1.level_weights()).value;
  return bcd.value - bcd.c_used * marginal_term;
}

}  // namespace fairot

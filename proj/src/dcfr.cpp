#include "fairot/dcfr.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "fairot/errors.hpp"

namespace fairot {

namespace {

struct JointView {
  std::map<std::pair<int, int>, std::array<double, 2>> zl;  // (z,l) -> mass by a
  std::map<int, std::array<double, 2>> l;                   // l -> mass by a

  explicit JointView(const DiscreteJoint& joint) {
    for (const auto& c : joint.cells()) {
      if (c.mass == 0.0) continue;
      auto& m = zl[{c.z, c.l}];
      m[static_cast<std::size_t>(c.a)] += c.mass;
      auto& ml = l[c.l];
      ml[static_cast<std::size_t>(c.a)] += c.mass;
    }
  }
};

}  // namespace

DiscreteJoint::DiscreteJoint(std::vector<Cell> cells) : cells_(std::move(cells)) {
  double total = 0.0;
  for (const auto& c : cells_) {
    if (c.a != 0 && c.a != 1) throw invalid_input("DiscreteJoint: A must be 0 or 1");
    if (!std::isfinite(c.mass) || c.mass < 0.0) {
      throw invalid_input("DiscreteJoint: cell masses must be finite and >= 0");
    }
    total += c.mass;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw invalid_input("DiscreteJoint: masses sum to " + std::to_string(total));
  }
}

DiscreteJoint DiscreteJoint::flipped() const {
  std::vector<Cell> out = cells_;
  for (auto& c : out) c.a = 1 - c.a;
  return DiscreteJoint(std::move(out));
}

double dcfr_closed_form(const DiscreteJoint& joint) {
  JointView v(joint);
  for (const auto& [lvl, m] : v.l) {
    if (m[0] + m[1] <= 0.0) {
      throw invalid_input("dcfr_closed_form: zero-mass level " + std::to_string(lvl));
    }
  }
  double total = 0.0;
  for (const auto& [key, m] : v.zl) {
    double mass = m[0] + m[1];
    const auto& ml = v.l.at(key.second);
    double p1_given_zl = m[1] / mass;
    double p1_given_l = ml[1] / (ml[0] + ml[1]);
    total += mass * std::max(0.0, p1_given_zl - p1_given_l);
  }
  return total;
}

double dcfr_sup_bruteforce(const DiscreteJoint& joint) {
  JointView v(joint);
  if (v.zl.size() > 16) {
    throw invalid_input("dcfr_sup_bruteforce: more than 16 (z,l) cells");
  }
  // Q(h) = sum over cells of h(z,l) * [P(A=1,z,l) P(A=0|l) - P(A=0,z,l) P(A=1|l)].
  std::vector<double> coef;
  coef.reserve(v.zl.size());
  for (const auto& [key, m] : v.zl) {
    const auto& ml = v.l.at(key.second);
    double lmass = ml[0] + ml[1];
    coef.push_back(m[1] * (ml[0] / lmass) - m[0] * (ml[1] / lmass));
  }
  double best = 0.0;
  for (std::uint32_t h = 0; h < (1u << coef.size()); ++h) {
    double q = 0.0;
    for (std::size_t c = 0; c < coef.size(); ++c) {
      if (h & (1u << c)) q += coef[c];
    }
    best = std::max(best, q);
  }
  return best;
}

std::pair<double, double> ratio_identity(const DiscreteJoint& joint, int z, int l) {
  JointView v(joint);
  auto it_l = v.l.find(l);
  if (it_l == v.l.end()) throw invalid_input("ratio_identity: level has no mass");
  auto it_zl = v.zl.find({z, l});
  if (it_zl == v.zl.end()) throw invalid_input("ratio_identity: (z,l) cell has no mass");
  const auto& ml = it_l->second;
  const auto& mzl = it_zl->second;
  double p_l = ml[0] + ml[1];
  if (ml[0] <= 0.0 || ml[1] <= 0.0) {
    throw invalid_input("ratio_identity: a sensitive group is empty at this level");
  }
  double p_z_given_a1 = mzl[1] / ml[1];
  double p_z_given_a0 = mzl[0] / ml[0];
  double p_zl = mzl[0] + mzl[1];
  double p_a1_given_zl = mzl[1] / p_zl;
  double p_a1_given_l = ml[1] / p_l;
  double denom = std::abs(p_a1_given_zl - p_a1_given_l);
  if (denom < 1e-12) {
    throw invalid_input("ratio_identity: P(A=1|z,l) == P(A=1|l); both denominators vanish");
  }
  double lhs = std::abs(p_z_given_a1 - p_z_given_a0) / denom;
  double rhs = (p_zl / p_l) / ((ml[0] / p_l) * (ml[1] / p_l));
  return {lhs, rhs};
}

DiscreteJoint joint_from_outputs(std::span<const double> outputs, std::span<const int> levels,
                                 std::span<const int> sensitive, int bins) {
  const std::size_t n = outputs.size();
  if (n == 0 || levels.size() != n || sensitive.size() != n) {
    throw invalid_input("joint_from_outputs: length mismatch");
  }
  if (bins < 1) throw invalid_input("joint_from_outputs: bins must be >= 1");

  std::vector<double> distinct(outputs.begin(), outputs.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<int> z(n);
  if (distinct.size() <= static_cast<std::size_t>(bins)) {
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), outputs[i]) -
                              distinct.begin());
    }
  } else {
    // Equal-frequency bins; ties broken by value then row index.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
      return outputs[i] < outputs[j] || (outputs[i] == outputs[j] && i < j);
    });
    for (std::size_t r = 0; r < n; ++r) {
      z[order[r]] = static_cast<int>((r * static_cast<std::size_t>(bins)) / n);
    }
  }

  std::map<std::tuple<int, int, int>, double> mass;
  for (std::size_t i = 0; i < n; ++i) {
    mass[{z[i], levels[i], sensitive[i]}] += 1.0 / static_cast<double>(n);
  }
  std::vector<DiscreteJoint::Cell> cells;
  cells.reserve(mass.size());
  for (const auto& [key, m] : mass) {
    cells.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), m});
  }
  return DiscreteJoint(std::move(cells));
}

}  // namespace fairot

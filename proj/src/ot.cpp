#include "fairot/ot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "fairot/errors.hpp"

namespace fairot {

namespace {

void validate_prob(const Vector& w, const char* name, bool strictly_positive) {
  if (w.size() == 0) throw invalid_input(std::string(name) + ": empty marginal");
  double total = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i]) || w[i] < 0.0) {
      throw invalid_input(std::string(name) + ": marginal entries must be finite and >= 0");
    }
    if (strictly_positive && w[i] == 0.0) {
      throw invalid_input(std::string(name) + ": zero-weight atoms must be dropped upstream");
    }
    total += w[i];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw invalid_input(std::string(name) + ": marginal sums to " + std::to_string(total));
  }
}

// Exhaustive search over greedy saturation orders. Every vertex of the
// transportation polytope is produced by repeatedly picking some active
// cell and saturating the smaller residual, so the minimum over all pick
// orders is the exact LP value. Branch-and-bound on the accumulated cost.
struct VertexEnumerator {
  const Matrix& cost;
  std::vector<double> rem_a, rem_b;
  std::vector<int> rows, cols;  // active indices
  double best = std::numeric_limits<double>::infinity();
  long nodes = 0;
  long node_cap;

  VertexEnumerator(const Matrix& c, const Vector& a, const Vector& b, long cap)
      : cost(c),
        rem_a(a.data(), a.data() + a.size()),
        rem_b(b.data(), b.data() + b.size()),
        node_cap(cap) {
    rows.resize(a.size());
    cols.resize(b.size());
    std::iota(rows.begin(), rows.end(), 0);
    std::iota(cols.begin(), cols.end(), 0);
  }

  void run(double acc) {
    if (++nodes > node_cap) {
      throw invalid_input("enumerate_ot: instance too large for exhaustive enumeration");
    }
    if (acc >= best) return;
    if (rows.size() == 1) {
      for (int j : cols) acc += rem_b[j] * cost(rows[0], j);
      best = std::min(best, acc);
      return;
    }
    if (cols.size() == 1) {
      for (int i : rows) acc += rem_a[i] * cost(i, cols[0]);
      best = std::min(best, acc);
      return;
    }
    for (std::size_t ri = 0; ri < rows.size(); ++ri) {
      for (std::size_t cj = 0; cj < cols.size(); ++cj) {
        int i = rows[ri], j = cols[cj];
        double x = std::min(rem_a[i], rem_b[j]);
        rem_a[i] -= x;
        rem_b[j] -= x;
        if (rem_a[i] <= rem_b[j]) {
          std::swap(rows[ri], rows.back());
          rows.pop_back();
          run(acc + x * cost(i, j));
          rows.push_back(i);
          std::swap(rows[ri], rows.back());
        } else {
          std::swap(cols[cj], cols.back());
          cols.pop_back();
          run(acc + x * cost(i, j));
          cols.push_back(j);
          std::swap(cols[cj], cols.back());
        }
        rem_a[i] += x;
        rem_b[j] += x;
      }
    }
  }
};

ExactOtResult assignment_ot(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int i = 0; i < n; ++i) c += cost(i, perm[i]);
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  ExactOtResult r;
  r.plan = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) r.plan(i, best[i]) = 1.0 / n;
  r.value = best_cost / n;
  return r;
}

// --- transportation simplex -------------------------------------------------

struct SimplexState {
  int m, n;
  const Matrix* cost;
  Matrix flow;                          // flow on basic cells (others 0)
  std::vector<std::vector<char>> basic; // m x n basis membership
  std::vector<std::vector<int>> row_adj;  // basic cols per row
  std::vector<std::vector<int>> col_adj;  // basic rows per col

  void add_basic(int i, int j) {
    basic[i][j] = 1;
    row_adj[i].push_back(j);
    col_adj[j].push_back(i);
  }
  void remove_basic(int i, int j) {
    basic[i][j] = 0;
    auto& r = row_adj[i];
    r.erase(std::find(r.begin(), r.end(), j));
    auto& c = col_adj[j];
    c.erase(std::find(c.begin(), c.end(), i));
  }
};

// Solves u_i + v_j = c_ij over the spanning tree, rooted at row 0.
void compute_potentials(const SimplexState& s, std::vector<double>& u, std::vector<double>& v) {
  std::vector<char> u_set(s.m, 0), v_set(s.n, 0);
  u.assign(s.m, 0.0);
  v.assign(s.n, 0.0);
  u_set[0] = 1;
  // Node stack: rows encoded as i, cols as m + j.
  std::vector<int> stack{0};
  while (!stack.empty()) {
    int node = stack.back();
    stack.pop_back();
    if (node < s.m) {
      for (int j : s.row_adj[node]) {
        if (!v_set[j]) {
          v[j] = (*s.cost)(node, j) - u[node];
          v_set[j] = 1;
          stack.push_back(s.m + j);
        }
      }
    } else {
      int j = node - s.m;
      for (int i : s.col_adj[j]) {
        if (!u_set[i]) {
          u[i] = (*s.cost)(i, j) - v[j];
          u_set[i] = 1;
          stack.push_back(i);
        }
      }
    }
  }
}

// Tree path from row node i0 to col node (m + j0); returns alternating node
// ids. The basis is a spanning tree so the path exists and is unique.
std::vector<int> tree_path(const SimplexState& s, int i0, int j0) {
  const int target = s.m + j0;
  std::vector<int> parent(s.m + s.n, -2);
  parent[i0] = -1;
  std::vector<int> stack{i0};
  while (!stack.empty()) {
    int node = stack.back();
    stack.pop_back();
    if (node == target) break;
    if (node < s.m) {
      for (int j : s.row_adj[node]) {
        if (parent[s.m + j] == -2) {
          parent[s.m + j] = node;
          stack.push_back(s.m + j);
        }
      }
    } else {
      for (int i : s.col_adj[node - s.m]) {
        if (parent[i] == -2) {
          parent[i] = node;
          stack.push_back(i);
        }
      }
    }
  }
  std::vector<int> path;
  for (int node = target; node != -1; node = parent[node]) path.push_back(node);
  std::reverse(path.begin(), path.end());
  return path;  // starts at i0 (row), ends at m + j0 (col)
}

}  // namespace

CostMatrix::CostMatrix(Matrix m) : entries(std::move(m)) {
  if (entries.size() == 0) throw invalid_input("CostMatrix: empty");
  if (!entries.allFinite() || (entries.array() < 0.0).any()) {
    throw invalid_input("CostMatrix: entries must be finite and >= 0");
  }
}

CostMatrix pairwise_power_cost(std::span<const double> x, std::span<const double> y, int p) {
  Matrix c(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) {
      double g = std::abs(x[i] - y[j]);
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (p == 1) ? g : std::pow(g, p);
    }
  }
  return CostMatrix(std::move(c));
}

TransportPlan TransportPlan::checked(Matrix entries, Vector a, Vector b, double tol) {
  if (entries.rows() != a.size() || entries.cols() != b.size()) {
    throw invalid_input("TransportPlan: dimension mismatch");
  }
  if (!entries.allFinite() || (entries.array() < -1e-15).any()) {
    throw invalid_input("TransportPlan: entries must be finite and >= 0");
  }
  double row_violation = (entries.rowwise().sum() - a).cwiseAbs().maxCoeff();
  double col_violation = (entries.colwise().sum().transpose() - b).cwiseAbs().maxCoeff();
  if (row_violation > tol || col_violation > tol) {
    throw invalid_input("TransportPlan: marginal violation " +
                        std::to_string(std::max(row_violation, col_violation)) +
                        " exceeds tolerance " + std::to_string(tol));
  }
  TransportPlan p;
  p.entries = std::move(entries);
  p.row_marginal = std::move(a);
  p.col_marginal = std::move(b);
  return p;
}

double default_epsilon(const CostMatrix& cost) {
  std::vector<double> v(cost.entries.data(), cost.entries.data() + cost.entries.size());
  auto mid = v.begin() + v.size() / 2;
  std::nth_element(v.begin(), mid, v.end());
  double med = *mid;
  if (med <= 0.0) med = cost.entries.mean();
  return 1e-2 * med;
}

SinkhornResult sinkhorn(const CostMatrix& cost, const Vector& a, const Vector& b,
                        const SinkhornConfig& cfg) {
  validate_prob(a, "sinkhorn/a", /*strictly_positive=*/true);
  validate_prob(b, "sinkhorn/b", /*strictly_positive=*/true);
  const Matrix& C = cost.entries;
  if (C.rows() != a.size() || C.cols() != b.size()) {
    throw invalid_input("sinkhorn: cost/marginal dimension mismatch");
  }
  if (cfg.max_iter < 1 || cfg.tol <= 0.0) throw invalid_input("sinkhorn: bad config");

  SinkhornResult result;

  // All-zero cost: the entropic optimum is the product coupling for any eps.
  if (C.maxCoeff() == 0.0) {
    Matrix plan = a * b.transpose();
    result.plan = TransportPlan::checked(plan, a, b, 1e-12);
    result.transport_cost = 0.0;
    double eps = cfg.epsilon > 0.0 ? cfg.epsilon : 1.0;
    double ent = 0.0;
    for (Eigen::Index i = 0; i < plan.rows(); ++i)
      for (Eigen::Index j = 0; j < plan.cols(); ++j)
        ent += plan(i, j) * (std::log(plan(i, j)) - 1.0);
    result.regularized_objective = eps * ent;
    result.epsilon = eps;
    result.converged = true;
    return result;
  }

  double eps_target = cfg.epsilon > 0.0 ? cfg.epsilon : default_epsilon(cost);
  if (eps_target <= 0.0) eps_target = 1e-2 * C.maxCoeff();

  const Eigen::Index m = C.rows(), n = C.cols();
  Vector f = Vector::Zero(m), g = Vector::Zero(n);
  Vector log_a = a.array().log().matrix(), log_b = b.array().log().matrix();

  // Epsilon scaling: anneal from the cost scale down to the target,
  // carrying the potentials across levels.
  std::vector<double> levels;
  for (double e = std::max(C.maxCoeff(), eps_target); e > eps_target; e /= 4.0)
    levels.push_back(e);
  levels.push_back(eps_target);

  Matrix W(m, n), E(m, n);
  Vector mx(m), lse(m), f_new(m);
  Vector mxc(n), lsec(n), g_new(n);

  int total_iter = 0;
  bool converged = false;
  double eps = eps_target;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    eps = levels[li];
    const bool final_level = (li + 1 == levels.size());
    const double level_tol = final_level ? cfg.tol : std::max(cfg.tol, 1e-4);
    // Over-relaxation speeds up the small-eps regime; fall back to plain
    // updates if the residual ever stops improving.
    double omega = 1.6;
    double prev_violation = std::numeric_limits<double>::infinity();
    int bad_steps = 0;
    converged = false;
    while (total_iter < cfg.max_iter) {
      ++total_iter;
      // Row pass.
      W = (-C).rowwise() + g.transpose();
      W /= eps;
      mx = W.rowwise().maxCoeff();
      lse = (W.colwise() - mx).array().exp().rowwise().sum().log();
      f_new = eps * (log_a - mx - lse);
      f += omega * (f_new - f);
      // Column pass; afterwards column marginals are exact.
      W = (-C).colwise() + f;
      W /= eps;
      mxc = W.colwise().maxCoeff();
      lsec = (W.rowwise() - mxc.transpose()).array().exp().colwise().sum().log();
      g_new = eps * (log_b - mxc - lsec);
      g += omega * (g_new - g);
      if (!f.allFinite() || !g.allFinite()) {
        throw numeric_failure("sinkhorn: potentials diverged (NaN/overflow)");
      }
      // Marginal residuals of the current plan (over-relaxed steps leave
      // neither marginal exact, so check both).
      W = (((-C).colwise() + f).rowwise() + g.transpose()) / eps;
      E = W.array().exp();
      double violation =
          std::max((E.rowwise().sum() - a).cwiseAbs().maxCoeff(),
                   (E.colwise().sum().transpose() - b).cwiseAbs().maxCoeff());
      if (violation < level_tol) {
        converged = true;
        break;
      }
      if (violation >= prev_violation) {
        if (++bad_steps >= 5 && omega != 1.0) {
          omega = 1.0;
          bad_steps = 0;
        }
      } else {
        bad_steps = 0;
      }
      prev_violation = violation;
    }
    if (total_iter >= cfg.max_iter) break;
  }

  W = (((-C).colwise() + f).rowwise() + g.transpose()) / eps;
  Matrix plan = W.array().exp();
  if (!plan.allFinite()) throw numeric_failure("sinkhorn: plan overflow");

  Vector row = plan.rowwise().sum();
  Vector col = plan.colwise().sum().transpose();
  double violation =
      std::max((row - a).cwiseAbs().maxCoeff(), (col - b).cwiseAbs().maxCoeff());
  result.plan =
      TransportPlan::checked(plan, a, b, std::max(cfg.tol, violation * 1.01 + 1e-15));
  result.transport_cost = (plan.array() * C.array()).sum();
  result.regularized_objective = f.dot(row) + g.dot(col) - eps * plan.sum();
  result.epsilon = eps;
  result.converged = converged && eps == eps_target;
  result.iterations = total_iter;
  return result;
}

Matrix entropic_gradient_wrt_cost(const SinkhornResult& result) {
  if (!result.converged) {
    throw invalid_input("entropic_gradient_wrt_cost: plan did not converge");
  }
  return result.plan.entries;
}

double enumerate_ot(const CostMatrix& cost, const Vector& a, const Vector& b) {
  validate_prob(a, "enumerate_ot/a", false);
  validate_prob(b, "enumerate_ot/b", false);
  const Eigen::Index m = cost.rows(), n = cost.cols();
  if (cost.entries.rows() != a.size() || cost.entries.cols() != b.size()) {
    throw invalid_input("enumerate_ot: cost/marginal dimension mismatch");
  }
  if (m * n > 64) {
    throw invalid_input("enumerate_ot: instance too large for exhaustive enumeration");
  }
  VertexEnumerator e(cost.entries, a, b, /*cap=*/4'000'000);
  e.run(0.0);
  return e.best;
}

ExactOtResult transport_simplex(const CostMatrix& cost, const Vector& a, const Vector& b) {
  validate_prob(a, "transport_simplex/a", false);
  validate_prob(b, "transport_simplex/b", false);
  const Matrix& C = cost.entries;
  const int m = static_cast<int>(C.rows());
  const int n = static_cast<int>(C.cols());

  SimplexState s;
  s.m = m;
  s.n = n;
  s.cost = &C;
  s.flow = Matrix::Zero(m, n);
  s.basic.assign(m, std::vector<char>(n, 0));
  s.row_adj.assign(m, {});
  s.col_adj.assign(n, {});

  // North-west-corner start: m + n - 1 basic cells, possibly with zero flow.
  {
    double rem_a = a[0], rem_b = b[0];
    int i = 0, j = 0;
    while (true) {
      double x = std::min(rem_a, rem_b);
      s.flow(i, j) = x;
      s.add_basic(i, j);
      rem_a -= x;
      rem_b -= x;
      if (i == m - 1 && j == n - 1) break;
      if ((rem_a <= rem_b && i < m - 1) || j == n - 1) {
        ++i;
        rem_a = a[i];
      } else {
        ++j;
        rem_b = b[j];
      }
    }
  }

  const double scale = 1.0 + C.cwiseAbs().maxCoeff();
  const double enter_tol = 1e-12 * scale;
  const long bland_after = 100L * (m + n) * std::max(m, n);
  const long hard_cap = 200L * bland_after + 1'000'000L;
  std::vector<double> u, v;

  for (long iter = 0;; ++iter) {
    if (iter > hard_cap) throw numeric_failure("transport_simplex: iteration cap exceeded");
    compute_potentials(s, u, v);

    int ei = -1, ej = -1;
    const bool bland = iter > bland_after;
    double best_r = -enter_tol;
    for (int i = 0; i < m && (ei < 0 || !bland); ++i) {
      for (int j = 0; j < n; ++j) {
        if (s.basic[i][j]) continue;
        double r = C(i, j) - u[i] - v[j];
        if (r < best_r) {
          best_r = r;
          ei = i;
          ej = j;
          if (bland) break;  // first (smallest-index) negative cell
        }
        if (bland && ei >= 0) break;
      }
    }
    if (ei < 0) break;  // optimal

    std::vector<int> path = tree_path(s, ei, ej);
    // Cells along the path alternate sign starting with '-' (the entering
    // cell itself is '+'). Path node count is even: row,col,row,...,col.
    double theta = std::numeric_limits<double>::infinity();
    int li = -1, lj = -1;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
      int ri, cj;
      if (path[k] < m) {
        ri = path[k];
        cj = path[k + 1] - m;
      } else {
        ri = path[k + 1];
        cj = path[k] - m;
      }
      if (k % 2 == 0) {  // '-' cell
        double fl = s.flow(ri, cj);
        if (fl < theta - 1e-18 ||
            (fl < theta + 1e-18 && (li < 0 || ri * n + cj < li * n + lj))) {
          theta = fl;
          li = ri;
          lj = cj;
        }
      }
    }
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
      int ri, cj;
      if (path[k] < m) {
        ri = path[k];
        cj = path[k + 1] - m;
      } else {
        ri = path[k + 1];
        cj = path[k] - m;
      }
      s.flow(ri, cj) += (k % 2 == 0) ? -theta : theta;
    }
    s.flow(ei, ej) = theta;
    s.flow(li, lj) = 0.0;
    s.remove_basic(li, lj);
    s.add_basic(ei, ej);
  }

  ExactOtResult r;
  r.plan = s.flow.cwiseMax(0.0);
  r.value = (s.flow.array() * C.array()).sum();
  return r;
}

ExactOtResult brute_force_ot(const CostMatrix& cost, const Vector& a, const Vector& b) {
  validate_prob(a, "brute_force_ot/a", false);
  validate_prob(b, "brute_force_ot/b", false);
  const Eigen::Index m = cost.rows(), n = cost.cols();
  if (cost.entries.rows() != a.size() || cost.entries.cols() != b.size()) {
    throw invalid_input("brute_force_ot: cost/marginal dimension mismatch");
  }
  if (m * n > 10000) {
    throw invalid_input("brute_force_ot: instance too large for the exact oracle");
  }

  bool uniform_square = (m == n);
  if (uniform_square) {
    for (Eigen::Index i = 0; i < m && uniform_square; ++i) {
      uniform_square = std::abs(a[i] - 1.0 / m) < 1e-12 && std::abs(b[i] - 1.0 / n) < 1e-12;
    }
  }
  if (uniform_square && m <= 8) return assignment_ot(cost.entries);

  if (m * n <= 12 || std::min(m, n) == 1) {
    // Small enough for the dumb path; recover a plan via the simplex, whose
    // value must agree with the enumeration.
    double v_enum = enumerate_ot(cost, a, b);
    ExactOtResult r = transport_simplex(cost, a, b);
    if (std::abs(r.value - v_enum) > 1e-9 * (1.0 + std::abs(v_enum))) {
      throw numeric_failure("brute_force_ot: enumeration and simplex disagree");
    }
    r.value = std::min(r.value, v_enum);
    return r;
  }
  return transport_simplex(cost, a, b);
}

}  // namespace fairot

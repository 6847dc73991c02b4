#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fairot/empirical.hpp"
#include "fairot/errors.hpp"
#include "fairot/ot.hpp"
#include "fairot/rng.hpp"

using namespace fairot;

namespace {

Empirical1D uniform_atoms(std::vector<double> v) { return Empirical1D::from_samples(v); }

Empirical1D random_empirical(Rng& rng, int max_atoms, bool uniform_weights) {
  int n = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(max_atoms)));
  std::vector<double> v(n), w(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    v[i] = uniform(rng, -2.0, 2.0);
    w[i] = uniform_weights ? 1.0 : uniform(rng, 0.05, 1.0);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return Empirical1D(std::move(v), std::move(w));
}

Vector random_marginal(Rng& rng, int n) {
  Vector w(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    w[i] = uniform(rng, 0.05, 1.0);
    total += w[i];
  }
  return w / total;
}

CostMatrix random_cost(Rng& rng, int m, int n) {
  Matrix c(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) c(i, j) = uniform(rng, 0.0, 1.0);
  return CostMatrix(c);
}

// Central finite difference of the regularized objective in one cost entry.
double fd_objective(const CostMatrix& cost, const Vector& a, const Vector& b, double eps,
                    int i, int j, double h) {
  SinkhornConfig cfg;
  cfg.epsilon = eps;
  cfg.tol = 1e-13;
  cfg.max_iter = 200000;
  Matrix up = cost.entries, dn = cost.entries;
  up(i, j) += h;
  dn(i, j) -= h;
  double fu = sinkhorn(CostMatrix(up), a, b, cfg).regularized_objective;
  double fd = sinkhorn(CostMatrix(dn), a, b, cfg).regularized_objective;
  return (fu - fd) / (2.0 * h);
}

}  // namespace

TEST_CASE("exact 1-D Wasserstein: fixed values") {
  auto a = uniform_atoms({0.0, 1.0});
  auto b = uniform_atoms({0.0, 0.0});
  CHECK(exact_wasserstein_1d(1, a, a) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(exact_wasserstein_1d(1, a, b) == doctest::Approx(0.5).epsilon(1e-12));

  // Approval rates for the high-income tier: 80% vs 60%.
  Empirical1D bern08({1.0, 0.0}, {0.8, 0.2});
  Empirical1D bern06({1.0, 0.0}, {0.6, 0.4});
  CHECK(exact_wasserstein_1d(1, bern08, bern06) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("exact 1-D Wasserstein: symmetry and triangle inequality") {
  Rng rng(71);
  for (int t = 0; t < 200; ++t) {
    int p = (t % 2) + 1;
    auto a = random_empirical(rng, 6, false);
    auto b = random_empirical(rng, 6, false);
    auto c = random_empirical(rng, 6, false);
    double ab = exact_wasserstein_1d(p, a, b);
    CHECK(ab == exact_wasserstein_1d(p, b, a));
    double wab = std::pow(ab, 1.0 / p);
    double wbc = std::pow(exact_wasserstein_1d(p, b, c), 1.0 / p);
    double wac = std::pow(exact_wasserstein_1d(p, a, c), 1.0 / p);
    CHECK(wac <= wab + wbc + 1e-9);
  }
}

TEST_CASE("brute force OT: fixed instances") {
  Vector u2 = Vector::Constant(2, 0.5);
  CHECK(brute_force_ot(CostMatrix(Matrix::Zero(3, 2)),
                       Vector::Constant(3, 1.0 / 3), u2)
            .value == doctest::Approx(0.0));

  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  CHECK(brute_force_ot(CostMatrix(swap), u2, u2).value == doctest::Approx(0.0));

  Matrix c(2, 2);
  c << 1, 2, 3, 1;
  auto r = brute_force_ot(CostMatrix(c), u2, u2);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.plan(0, 0) == doctest::Approx(0.5));
  CHECK(r.plan(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("enumerate_ot caps out on large instances") {
  Vector a = Vector::Constant(9, 1.0 / 9);
  Vector b = Vector::Constant(8, 1.0 / 8);
  CHECK_THROWS_AS(enumerate_ot(CostMatrix(Matrix::Ones(9, 8)), a, b), invalid_input);
  Vector big = Vector::Constant(200, 1.0 / 200);
  CHECK_THROWS_AS(brute_force_ot(CostMatrix(Matrix::Ones(200, 200)), big, big), invalid_input);
}

TEST_CASE("simplex agrees with enumeration and assignment on random instances") {
  Rng rng(13);
  for (int t = 0; t < 120; ++t) {
    int m = 2 + static_cast<int>(uniform_index(rng, 3));
    int n = 2 + static_cast<int>(uniform_index(rng, 3));
    auto cost = random_cost(rng, m, n);
    Vector a = random_marginal(rng, m);
    Vector b = random_marginal(rng, n);
    double v_enum = enumerate_ot(cost, a, b);
    double v_simplex = transport_simplex(cost, a, b).value;
    CHECK(v_simplex == doctest::Approx(v_enum).epsilon(1e-10));
  }
  for (int t = 0; t < 20; ++t) {
    int n = 5 + static_cast<int>(uniform_index(rng, 3));
    auto cost = random_cost(rng, n, n);
    Vector u = Vector::Constant(n, 1.0 / n);
    auto bf = brute_force_ot(cost, u, u);  // assignment path
    double v_simplex = transport_simplex(cost, u, u).value;
    CHECK(v_simplex == doctest::Approx(bf.value).epsilon(1e-10));
  }
}

TEST_CASE("oracle agreement: 1-D closed form vs LP on |x-y|^p costs") {
  Rng rng(29);
  for (int t = 0; t < 100; ++t) {
    int p = (t % 2) + 1;
    auto a = random_empirical(rng, 5, true);
    auto b = random_empirical(rng, 5, true);
    auto cost = pairwise_power_cost(a.values(), b.values(), p);
    Vector wa = Eigen::Map<const Vector>(a.weights().data(), a.size());
    Vector wb = Eigen::Map<const Vector>(b.weights().data(), b.size());
    double lp = brute_force_ot(cost, wa, wb).value;
    CHECK(lp == doctest::Approx(exact_wasserstein_1d(p, a, b)).epsilon(1e-9));
  }
  // Weighted, larger: exercises the simplex path.
  for (int t = 0; t < 20; ++t) {
    int p = (t % 2) + 1;
    auto a = random_empirical(rng, 40, false);
    auto b = random_empirical(rng, 40, false);
    auto cost = pairwise_power_cost(a.values(), b.values(), p);
    Vector wa = Eigen::Map<const Vector>(a.weights().data(), a.size());
    Vector wb = Eigen::Map<const Vector>(b.weights().data(), b.size());
    double lp = transport_simplex(cost, wa, wb).value;
    double w1d = exact_wasserstein_1d(p, a, b);
    CHECK(lp == doctest::Approx(w1d).epsilon(1e-9));
  }
}

TEST_CASE("sinkhorn: zero cost yields the product coupling") {
  Rng rng(5);
  Vector a = random_marginal(rng, 3);
  Vector b = random_marginal(rng, 4);
  auto r = sinkhorn(CostMatrix(Matrix::Zero(3, 4)), a, b, {});
  CHECK(r.converged);
  CHECK(r.transport_cost == doctest::Approx(0.0));
  CHECK((r.plan.entries - a * b.transpose()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("sinkhorn: fixed small instances near the exact value") {
  Vector u2 = Vector::Constant(2, 0.5);
  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  SinkhornConfig cfg;
  cfg.epsilon = 0.01;
  auto r = sinkhorn(CostMatrix(swap), u2, u2, cfg);
  CHECK(r.converged);
  CHECK(r.transport_cost <= 0.02);

  Matrix c(2, 2);
  c << 1, 2, 3, 1;
  cfg.epsilon = 1e-3 * c.mean();
  auto r2 = sinkhorn(CostMatrix(c), u2, u2, cfg);
  CHECK(r2.converged);
  CHECK(std::abs(r2.transport_cost - 1.0) / 1.0 < 0.02);
}

TEST_CASE("sinkhorn: entropic bias shrinks as epsilon decreases") {
  Rng rng(99);
  double prev_mean = std::numeric_limits<double>::infinity();
  std::vector<CostMatrix> costs;
  std::vector<Vector> as, bs;
  std::vector<double> exact;
  for (int t = 0; t < 25; ++t) {
    int m = 3 + static_cast<int>(uniform_index(rng, 10));
    int n = 3 + static_cast<int>(uniform_index(rng, 10));
    auto cost = random_cost(rng, m, n);
    cost.entries.array() += 0.05;  // keep the optimum away from zero
    Vector a = random_marginal(rng, m);
    Vector b = random_marginal(rng, n);
    exact.push_back(brute_force_ot(cost, a, b).value);
    costs.push_back(std::move(cost));
    as.push_back(a);
    bs.push_back(b);
  }
  for (double rel_eps : {0.1, 0.01, 0.001}) {
    double mean_err = 0.0;
    for (std::size_t t = 0; t < costs.size(); ++t) {
      SinkhornConfig cfg;
      cfg.epsilon = rel_eps * costs[t].entries.mean();
      auto r = sinkhorn(costs[t], as[t], bs[t], cfg);
      CHECK(r.converged);
      mean_err += std::abs(r.transport_cost - exact[t]) / exact[t];
    }
    mean_err /= static_cast<double>(costs.size());
    CHECK(mean_err < prev_mean);
    prev_mean = mean_err;
  }
  CHECK(prev_mean < 0.02);
}

TEST_CASE("sinkhorn: plan satisfies marginal invariants after convergence") {
  Rng rng(7);
  for (int t = 0; t < 10; ++t) {
    auto cost = random_cost(rng, 6, 5);
    Vector a = random_marginal(rng, 6);
    Vector b = random_marginal(rng, 5);
    auto r = sinkhorn(cost, a, b, {});
    REQUIRE(r.converged);
    CHECK((r.plan.entries.rowwise().sum() - a).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((r.plan.entries.colwise().sum().transpose() - b).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(r.plan.entries.minCoeff() >= 0.0);
  }
}

TEST_CASE("sinkhorn: iteration budget exhaustion is flagged, not fatal") {
  Rng rng(3);
  auto cost = random_cost(rng, 8, 8);
  Vector a = random_marginal(rng, 8);
  Vector b = random_marginal(rng, 8);
  SinkhornConfig cfg;
  cfg.epsilon = 1e-5;
  cfg.max_iter = 3;
  auto r = sinkhorn(cost, a, b, cfg);
  CHECK(!r.converged);
  CHECK_THROWS_AS(entropic_gradient_wrt_cost(r), invalid_input);
}

TEST_CASE("envelope gradient equals the plan and matches finite differences") {
  Rng rng(123);
  Vector a = random_marginal(rng, 2);
  Vector b = random_marginal(rng, 2);
  auto zero = sinkhorn(CostMatrix(Matrix::Zero(2, 2)), a, b, {});
  CHECK((entropic_gradient_wrt_cost(zero) - a * b.transpose()).cwiseAbs().maxCoeff() < 1e-9);

  for (int size : {2, 4}) {
    auto cost = random_cost(rng, size, size);
    Vector wa = random_marginal(rng, size);
    Vector wb = random_marginal(rng, size);
    SinkhornConfig cfg;
    cfg.epsilon = 0.1;
    cfg.tol = 1e-13;
    cfg.max_iter = 200000;
    auto r = sinkhorn(cost, wa, wb, cfg);
    REQUIRE(r.converged);
    Matrix grad = entropic_gradient_wrt_cost(r);
    CHECK((grad - r.plan.entries).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < size; ++i) {
      for (int j = 0; j < size; ++j) {
        double fd = fd_objective(cost, wa, wb, 0.1, i, j, 1e-5);
        CHECK(std::abs(grad(i, j) - fd) / std::max(std::abs(fd), 1e-8) < 1e-4);
      }
    }
  }
}

TEST_CASE("empirical 1-D validation") {
  CHECK_THROWS_AS(Empirical1D({1.0}, {0.5}), invalid_input);
  CHECK_THROWS_AS(Empirical1D({1.0, 2.0}, {0.5}), invalid_input);
  CHECK_THROWS_AS(Empirical1D({1.0, 2.0}, {1.5, -0.5}), invalid_input);
  Empirical1D d({3.0, 1.0, 2.0}, {0.2, 0.5, 0.3});
  CHECK(d.values() == std::vector<double>{1.0, 2.0, 3.0});
  Empirical1D dup({1.0, 1.0, 2.0}, {0.25, 0.25, 0.5});
  auto merged = dup.consolidated();
  CHECK(merged.size() == 2);
  CHECK(merged.weights()[0] == doctest::Approx(0.5));
}

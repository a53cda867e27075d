#include <doctest.h>

#include <cmath>
#include <random>

#include "walloc/ideal_splits.hpp"

using namespace walloc;

namespace {

PurchaseOrder po_with_quantities(const std::vector<long long>& q) {
  PurchaseOrder po;
  po.id = "po";
  for (std::size_t i = 0; i < q.size(); ++i)
    po.lines.push_back({{"S" + std::to_string(i), {}, "", ""}, q[i]});
  return po;
}

// Independent oracle: enumerate all 2^K clamp patterns, solve the
// equality-constrained least squares on the free set for each, keep the
// best feasible candidate. Ground truth for nonneg_projection.
std::vector<double> projection_oracle(const std::vector<double>& target, long long n) {
  const std::size_t k = target.size();
  std::vector<double> best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    std::size_t free_count = 0;
    double free_sum = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      if (!(mask & (1u << j))) {
        ++free_count;
        free_sum += target[j];
      }
    if (free_count == 0) continue;
    const double shift = (static_cast<double>(n) - free_sum) / free_count;
    std::vector<double> f(k, 0.0);
    bool feasible = true;
    double obj = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (!(mask & (1u << j))) f[j] = target[j] + shift;
      if (f[j] < -1e-12) feasible = false;
      obj += (f[j] - target[j]) * (f[j] - target[j]);
    }
    if (feasible && obj < best_obj) {
      best_obj = obj;
      best = f;
    }
  }
  return best;
}

double projection_objective(const std::vector<double>& f, const std::vector<double>& target) {
  double obj = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j)
    obj += (f[j] - target[j]) * (f[j] - target[j]);
  return obj;
}

}  // namespace

TEST_CASE("fractional splits without inventory") {
  auto po = po_with_quantities({10, 7});
  SplitProbabilityMatrix p = MatD::from_rows({{0.5, 0.3, 0.2}, {1.0, 0.0, 0.0}});
  auto f = fractional_splits_no_inventory(p, po);
  CHECK(f(0, 0) == doctest::Approx(5.0));
  CHECK(f(0, 1) == doctest::Approx(3.0));
  CHECK(f(0, 2) == doctest::Approx(2.0));
  CHECK(f(1, 0) == doctest::Approx(7.0));
  CHECK(f(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("fractional split row sums equal N_i (property)") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 1 + rng() % 6;
    const long long n = 1 + static_cast<long long>(rng() % 500);
    auto po = po_with_quantities({n});
    SplitProbabilityMatrix p(1, k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += (p(0, j) = u(rng));
    for (std::size_t j = 0; j < k; ++j) p(0, j) /= sum;
    auto f = fractional_splits_no_inventory(p, po);
    CHECK(f.row_sum(0) == doctest::Approx(static_cast<double>(n)).epsilon(1e-9));
  }
}

TEST_CASE("inventory-aware splits: hand-solved balance system") {
  SUBCASE("zero inventory reduces to the plain product") {
    auto po = po_with_quantities({10});
    SplitProbabilityMatrix p = MatD::from_rows({{0.6, 0.4}});
    ExistingInventory e(1, 2);
    auto f = fractional_splits_with_inventory(p, po, e);
    CHECK(f(0, 0) == doctest::Approx(6.0));
    CHECK(f(0, 1) == doctest::Approx(4.0));
  }
  SUBCASE("existing stock is netted against the probability target") {
    // total = 10 + 10 = 20, targets [10,10], minus E [5,5] -> [5,5]
    auto po = po_with_quantities({10});
    SplitProbabilityMatrix p = MatD::from_rows({{0.5, 0.5}});
    ExistingInventory e = MatI::from_rows({{5, 5}});
    auto f = fractional_splits_with_inventory(p, po, e);
    CHECK(f(0, 0) == doctest::Approx(5.0));
    CHECK(f(0, 1) == doctest::Approx(5.0));
  }
  SUBCASE("negative direct solution falls back to the projection") {
    // total = 12, targets [6,6], naive F = [-4, 6] -> clamp to [0, 2]
    auto po = po_with_quantities({2});
    SplitProbabilityMatrix p = MatD::from_rows({{0.5, 0.5}});
    ExistingInventory e = MatI::from_rows({{10, 0}});
    auto f = fractional_splits_with_inventory(p, po, e);
    CHECK(f(0, 0) == doctest::Approx(0.0));
    CHECK(f(0, 1) == doctest::Approx(2.0));
  }
}

TEST_CASE("with zero inventory the two split paths agree exactly") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t k = 1 + rng() % 5;
    auto po = po_with_quantities({1 + static_cast<long long>(rng() % 50)});
    SplitProbabilityMatrix p(1, k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += (p(0, j) = u(rng));
    for (std::size_t j = 0; j < k; ++j) p(0, j) /= sum;
    ExistingInventory e(1, k);
    auto a = fractional_splits_no_inventory(p, po);
    auto b = fractional_splits_with_inventory(p, po, e);
    for (std::size_t j = 0; j < k; ++j) CHECK(a(0, j) == b(0, j));
  }
}

TEST_CASE("nonneg projection: inactive constraints pass through") {
  std::vector<double> target = {3.0, 4.0, 3.0};
  auto f = nonneg_projection(target, 10);
  CHECK(f[0] == doctest::Approx(3.0));
  CHECK(f[1] == doctest::Approx(4.0));
  CHECK(f[2] == doctest::Approx(3.0));
}

TEST_CASE("nonneg projection: forced clamp matches the enumeration oracle") {
  auto f = nonneg_projection({-4.0, 6.0}, 2);
  CHECK(f[0] == doctest::Approx(0.0));
  CHECK(f[1] == doctest::Approx(2.0));
}

TEST_CASE("nonneg projection matches 2^K enumeration on random instances") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng() % 5;  // up to 6
    const long long n = 1 + static_cast<long long>(rng() % 20);
    std::vector<double> target(k);
    double sum = 0.0;
    for (std::size_t j = 0; j + 1 < k; ++j) sum += (target[j] = u(rng));
    target[k - 1] = static_cast<double>(n) - sum;  // targets sum to N
    auto f = nonneg_projection(target, n);
    auto oracle = projection_oracle(target, n);
    REQUIRE(!oracle.empty());
    double fsum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      CHECK(f[j] >= 0.0);
      fsum += f[j];
    }
    CHECK(fsum == doctest::Approx(static_cast<double>(n)).epsilon(1e-9));
    CHECK(projection_objective(f, target) ==
          doctest::Approx(projection_objective(oracle, target)).epsilon(1e-8));
  }
}

TEST_CASE("largest-remainder rounding") {
  SUBCASE("already integral rows are untouched") {
    auto po = po_with_quantities({10});
    FractionalSplit f = MatD::from_rows({{5.0, 3.0, 2.0}});
    auto ideal = round_to_integers(f, po);
    CHECK(ideal(0, 0) == 5);
    CHECK(ideal(0, 1) == 3);
    CHECK(ideal(0, 2) == 2);
  }
  SUBCASE("ties break to the lower index") {
    auto po = po_with_quantities({7});
    auto ideal = round_to_integers(MatD::from_rows({{3.5, 3.5}}), po);
    CHECK(ideal(0, 0) == 4);
    CHECK(ideal(0, 1) == 3);
  }
  SUBCASE("single leftover unit goes to the largest fraction") {
    auto po = po_with_quantities({7});
    auto ideal = round_to_integers(MatD::from_rows({{2.4, 2.4, 2.2}}), po);
    CHECK(ideal(0, 0) == 3);
    CHECK(ideal(0, 1) == 2);
    CHECK(ideal(0, 2) == 2);
  }
}

TEST_CASE("rounding properties: exact row sums, distortion < 1") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 1 + rng() % 8;
    const long long n = 1 + static_cast<long long>(rng() % 100);
    std::vector<double> w(k);
    double sum = 0.0;
    for (auto& x : w) sum += (x = u(rng) + 1e-9);
    std::vector<double> row(k);
    for (std::size_t j = 0; j < k; ++j) row[j] = static_cast<double>(n) * w[j] / sum;
    auto out = largest_remainder_round(row, n);
    long long total = 0;
    for (std::size_t j = 0; j < k; ++j) {
      total += out[j];
      CHECK(std::fabs(static_cast<double>(out[j]) - row[j]) < 1.0);
      CHECK(out[j] >= 0);
    }
    CHECK(total == n);
  }
}

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "walloc/core.hpp"
#include "walloc/mincostflow.hpp"

namespace walloc {

// Y: M x K x (K+1); Y(i,u,v) = units of sku_i ideally bound to warehouse u
// placed in warehouse v. v == K means not assigned.
class SkuFlowTensor {
 public:
  SkuFlowTensor() = default;
  SkuFlowTensor(std::size_t m, std::size_t k)
      : m_(m), k_(k), data_(m * k * (k + 1), 0) {}

  std::size_t sku_count() const { return m_; }
  std::size_t warehouse_count() const { return k_; }

  long long& operator()(std::size_t i, std::size_t u, std::size_t v) {
    return data_[(i * k_ + u) * (k_ + 1) + v];
  }
  long long operator()(std::size_t i, std::size_t u, std::size_t v) const {
    return data_[(i * k_ + u) * (k_ + 1) + v];
  }

  // sum_v Y(i,u,v), must equal I(i,u).
  long long supply_used(std::size_t i, std::size_t u) const {
    long long s = 0;
    for (std::size_t v = 0; v <= k_; ++v) s += (*this)(i, u, v);
    return s;
  }

 private:
  std::size_t m_ = 0, k_ = 0;
  std::vector<long long> data_;
};

struct SolveReport {
  double objective = 0.0;
  std::string solver_kind;
  int iterations = 0;
  double wall_ms = 0.0;
  bool warm_start_used = false;
};

// sum_i trace(Y_i * L^T), recomputed directly from the tensor.
inline double tensor_objective(const SkuFlowTensor& y, const PenaltyMatrix& l) {
  double obj = 0.0;
  for (std::size_t i = 0; i < y.sku_count(); ++i)
    for (std::size_t u = 0; u < y.warehouse_count(); ++u)
      for (std::size_t v = 0; v <= y.warehouse_count(); ++v)
        obj += static_cast<double>(y(i, u, v)) * l.cost(u, v);
  return obj;
}

inline AllocationMatrix extract_allocation(const SkuFlowTensor& y) {
  const std::size_t m = y.sku_count(), k = y.warehouse_count();
  AllocationMatrix x(m, k + 1);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t u = 0; u < k; ++u)
      for (std::size_t v = 0; v <= k; ++v) x(i, v) += y(i, u, v);
  return x;
}

// ---- item-level (exploded) view --------------------------------------------

struct ExplodedOrder {
  // (sku index, ideal warehouse index), N items in sku order then warehouse
  // order; any permutation is optimization-equivalent.
  std::vector<std::pair<std::size_t, std::size_t>> items;
  std::size_t sku_count = 0;
  std::size_t warehouse_count = 0;
};

inline ExplodedOrder explode(const PurchaseOrder& po, const IdealSplitMatrix& ideal) {
  if (ideal.rows() != po.lines.size()) throw ShapeMismatch("I rows != PO lines");
  ExplodedOrder ex;
  ex.sku_count = ideal.rows();
  ex.warehouse_count = ideal.cols();
  for (std::size_t i = 0; i < ideal.rows(); ++i) {
    long long row = 0;
    for (std::size_t j = 0; j < ideal.cols(); ++j) {
      if (ideal(i, j) < 0) throw NegativeQuantity("ideal split entry");
      for (long long r = 0; r < ideal(i, j); ++r) ex.items.emplace_back(i, j);
      row += ideal(i, j);
    }
    if (row != po.lines[i].quantity) throw ShapeMismatch("I row sum != N_i");
  }
  return ex;
}

namespace detail {

// Penalties exactly representable with <= 6 decimal digits are solved in
// scaled int64 arithmetic; anything else falls back to doubles.
inline bool costs_fit_scaled(const PenaltyMatrix& l) {
  auto fits = [](double c) {
    double s = c * 1e6;
    return std::fabs(s - std::round(s)) < 1e-9 && std::fabs(s) < 9e15;
  };
  for (std::size_t u = 0; u < l.warehouse_count(); ++u)
    for (std::size_t v = 0; v < l.warehouse_count(); ++v)
      if (!fits(l.truncated()(u, v))) return false;
  return fits(l.lambda_na());
}

// Aggregate transportation solve: supplies S_u over ideal warehouses, sinks
// are the K capacitated warehouses plus the uncapacitated non-assignment
// column. Returns aggregate flows f[u][v] (v == K is non-assignment).
template <typename Cost>
Mat<long long> solve_transportation(const std::vector<long long>& supply,
                                    const std::vector<long long>& capacity,
                                    const PenaltyMatrix& l, double cost_scale,
                                    const Mat<long long>* warm, bool& warm_used,
                                    int& iterations) {
  const std::size_t k = supply.size();
  // nodes: 0 = source, 1..K ideal, K+1..2K sinks, 2K+1 = NA, 2K+2 = sink t
  const int src = 0, na = static_cast<int>(2 * k + 1), t = static_cast<int>(2 * k + 2);
  MinCostFlow<Cost> mcf(t + 1);
  long long total = 0;
  for (long long s : supply) total += s;
  std::vector<int> supply_arc(k), sink_arc(k);
  Mat<int> ship_arc(k, k + 1);
  auto scaled = [&](double c) { return static_cast<Cost>(c * cost_scale); };
  for (std::size_t u = 0; u < k; ++u)
    supply_arc[u] = mcf.add_arc(src, static_cast<int>(1 + u), supply[u], Cost{});
  for (std::size_t u = 0; u < k; ++u) {
    for (std::size_t v = 0; v < k; ++v)
      ship_arc(u, v) = mcf.add_arc(static_cast<int>(1 + u), static_cast<int>(1 + k + v),
                                   total, scaled(l.truncated()(u, v)));
    ship_arc(u, k) = mcf.add_arc(static_cast<int>(1 + u), na, total, scaled(l.lambda_na()));
  }
  for (std::size_t v = 0; v < k; ++v)
    sink_arc[v] = mcf.add_arc(static_cast<int>(1 + k + v), t, capacity[v], Cost{});
  int na_arc = mcf.add_arc(na, t, total, Cost{});

  warm_used = false;
  if (warm) {
    // Verify feasibility before seeding; a bad warm start is just ignored.
    bool ok = warm->rows() == k && warm->cols() == k + 1;
    if (ok)
      for (std::size_t u = 0; u < k && ok; ++u) {
        long long row = 0;
        for (std::size_t v = 0; v <= k; ++v) {
          if ((*warm)(u, v) < 0) ok = false;
          row += (*warm)(u, v);
        }
        if (row > supply[u]) ok = false;
      }
    if (ok)
      for (std::size_t v = 0; v < k && ok; ++v)
        if (warm->col_sum(v) > capacity[v]) ok = false;
    if (ok) {
      for (std::size_t u = 0; u < k; ++u) {
        long long row = 0;
        for (std::size_t v = 0; v <= k; ++v) {
          mcf.force_flow(ship_arc(u, v), (*warm)(u, v));
          row += (*warm)(u, v);
        }
        mcf.force_flow(supply_arc[u], row);
      }
      long long na_flow = 0;
      for (std::size_t v = 0; v < k; ++v) mcf.force_flow(sink_arc[v], warm->col_sum(v));
      for (std::size_t u = 0; u < k; ++u) na_flow += (*warm)(u, k);
      mcf.force_flow(na_arc, na_flow);
      warm_used = true;
    }
  }

  auto res = mcf.solve(src, t);
  if (warm_used) mcf.cancel_negative_cycles();
  iterations = res.augmentations;
  Mat<long long> f(k, k + 1);
  for (std::size_t u = 0; u < k; ++u)
    for (std::size_t v = 0; v <= k; ++v) f(u, v) = mcf.flow_on(ship_arc(u, v));
  return f;
}

// Fixed sku-order disaggregation: walk skus in PO order, hand out remaining
// aggregate flow in ascending (u, v) order. The optimum is degenerate across
// disaggregations; this pins one.
inline SkuFlowTensor disaggregate(const IdealSplitMatrix& ideal, Mat<long long> f) {
  const std::size_t m = ideal.rows(), k = ideal.cols();
  SkuFlowTensor y(m, k);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t u = 0; u < k; ++u) {
      long long need = ideal(i, u);
      for (std::size_t v = 0; v <= k && need > 0; ++v) {
        long long take = std::min(need, f(u, v));
        y(i, u, v) = take;
        f(u, v) -= take;
        need -= take;
      }
    }
  return y;
}

}  // namespace detail

struct SolveOptions {
  const Mat<long long>* warm_start = nullptr;  // aggregate K x (K+1) flows
};

// Exact sku-level solve: the cost of a unit depends only on its (ideal,
// final) warehouse pair, so the integer program reduces to a K-source,
// (K+1)-sink transportation problem with an integral optimum.
inline std::pair<SkuFlowTensor, SolveReport> solve_ip(const IdealSplitMatrix& ideal,
                                                      const PenaltyMatrix& l,
                                                      const std::vector<long long>& capacity,
                                                      const SolveOptions& opts = {}) {
  const std::size_t m = ideal.rows(), k = ideal.cols();
  if (l.warehouse_count() != k) throw ShapeMismatch("penalty matrix size != K");
  if (capacity.size() != k) throw ShapeMismatch("capacity vector size != K");
  for (long long c : capacity)
    if (c < 0) throw NegativeQuantity("capacity");
  auto start = std::chrono::steady_clock::now();
  std::vector<long long> supply(k, 0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t u = 0; u < k; ++u) supply[u] += ideal(i, u);

  bool warm_used = false;
  int iterations = 0;
  Mat<long long> f =
      detail::costs_fit_scaled(l)
          ? detail::solve_transportation<long long>(supply, capacity, l, 1e6,
                                                    opts.warm_start, warm_used, iterations)
          : detail::solve_transportation<double>(supply, capacity, l, 1.0,
                                                 opts.warm_start, warm_used, iterations);
  SkuFlowTensor y = detail::disaggregate(ideal, std::move(f));
  SolveReport rep;
  rep.objective = tensor_objective(y, l);
  rep.solver_kind = "flow";
  rep.iterations = iterations;
  rep.warm_start_used = warm_used;
  rep.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return {std::move(y), rep};
}

// Item-level formulation. Same aggregate engine underneath (the objective
// only sees (ideal, final) pairs); the binary item matrix is rebuilt
// deterministically from aggregate flows. Row of zeros = not assigned.
inline std::pair<Mat<int>, SolveReport> solve_bip(const ExplodedOrder& ex,
                                                  const PenaltyMatrix& l,
                                                  const std::vector<long long>& capacity) {
  const std::size_t k = ex.warehouse_count;
  auto start = std::chrono::steady_clock::now();
  std::vector<long long> supply(k, 0);
  for (const auto& [sku, u] : ex.items) supply[u] += 1;
  bool warm_used = false;
  int iterations = 0;
  Mat<long long> f =
      detail::costs_fit_scaled(l)
          ? detail::solve_transportation<long long>(supply, capacity, l, 1e6, nullptr,
                                                    warm_used, iterations)
          : detail::solve_transportation<double>(supply, capacity, l, 1.0, nullptr,
                                                 warm_used, iterations);
  Mat<int> y(ex.items.size(), k);
  double objective = 0.0;
  for (std::size_t i = 0; i < ex.items.size(); ++i) {
    const std::size_t u = ex.items[i].second;
    std::size_t v = 0;
    while (v <= k && f(u, v) == 0) ++v;
    f(u, v) -= 1;
    objective += l.cost(u, v);
    if (v < k) y(i, v) = 1;
  }
  SolveReport rep;
  rep.objective = objective;
  rep.solver_kind = "flow-bip";
  rep.iterations = iterations;
  rep.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return {std::move(y), rep};
}

// Allocation from the item-level result (Z rows fold into the last column).
inline AllocationMatrix allocation_from_items(const ExplodedOrder& ex, const Mat<int>& y) {
  AllocationMatrix x(ex.sku_count, ex.warehouse_count + 1);
  for (std::size_t i = 0; i < ex.items.size(); ++i) {
    const std::size_t sku = ex.items[i].first;
    bool assigned = false;
    for (std::size_t v = 0; v < ex.warehouse_count; ++v)
      if (y(i, v)) {
        x(sku, v) += 1;
        assigned = true;
      }
    if (!assigned) x(sku, ex.warehouse_count) += 1;
  }
  return x;
}

// ---- exhaustive oracle ------------------------------------------------------

// Enumerates every way of routing each ideal-warehouse supply across the K+1
// destinations (units of the same ideal warehouse are interchangeable, so the
// search runs over aggregate flow matrices, which covers every distinct
// per-unit assignment up to permutation). Test-only ground truth.
inline std::pair<SkuFlowTensor, double> brute_force_solve(const IdealSplitMatrix& ideal,
                                                          const PenaltyMatrix& l,
                                                          const std::vector<long long>& capacity) {
  const std::size_t m = ideal.rows(), k = ideal.cols();
  long long n = 0;
  for (std::size_t i = 0; i < m; ++i) n += ideal.row_sum(i);
  if (k > 3 || n > 24)
    throw InstanceTooLarge("brute force limited to K <= 3, N <= 24");
  std::vector<long long> supply(k, 0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t u = 0; u < k; ++u) supply[u] += ideal(i, u);

  Mat<long long> flow(k, k + 1), best(k, k + 1);
  std::vector<long long> used(k, 0);
  double best_cost = std::numeric_limits<double>::infinity();

  // recurse over (source u, destination v) cells
  auto rec = [&](auto&& self, std::size_t u, std::size_t v, long long left,
                 double cost) -> void {
    if (cost >= best_cost) return;
    if (u == k) {
      best_cost = cost;
      best = flow;
      return;
    }
    if (v == k) {  // leftovers go unassigned
      flow(u, k) = left;
      self(self, u + 1, 0, u + 1 < k ? supply[u + 1] : 0,
           cost + static_cast<double>(left) * l.lambda_na());
      flow(u, k) = 0;
      return;
    }
    const long long cap = std::min(left, capacity[v] - used[v]);
    for (long long q = 0; q <= cap; ++q) {
      flow(u, v) = q;
      used[v] += q;
      self(self, u, v + 1, left - q, cost + static_cast<double>(q) * l.truncated()(u, v));
      used[v] -= q;
    }
    flow(u, v) = 0;
  };
  rec(rec, 0, 0, k > 0 ? supply[0] : 0, 0.0);

  SkuFlowTensor y = detail::disaggregate(ideal, best);
  return {std::move(y), best_cost};
}

}  // namespace walloc

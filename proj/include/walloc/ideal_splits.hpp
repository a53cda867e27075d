#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "walloc/core.hpp"

namespace walloc {

// F: M x K nonnegative reals, row i sums to N_i.
using FractionalSplit = MatD;

// F_ij = N_i * P_ij.
inline FractionalSplit fractional_splits_no_inventory(const SplitProbabilityMatrix& p,
                                                      const PurchaseOrder& po) {
  if (p.rows() != po.lines.size()) throw ShapeMismatch("P rows != PO lines");
  FractionalSplit f(p.rows(), p.cols());
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t j = 0; j < p.cols(); ++j)
      f(i, j) = static_cast<double>(po.lines[i].quantity) * p(i, j);
  return f;
}

// Minimize sum_j ((E_j + F_j) - target_j)^2 subject to F >= 0, sum F = N,
// where target_j = P_j * (N + sum E). Iterative active set: clamp negative
// coordinates, re-solve the equality-constrained least squares on the free
// set, repeat. Terminates in at most K rounds.
//
// `target` here is the unconstrained per-coordinate optimum t_j = P_j*total - E_j,
// so the problem is min ||F - t||^2 s.t. F >= 0, sum F = N (note sum t = N).
inline std::vector<double> nonneg_projection(const std::vector<double>& target,
                                             long long n) {
  const std::size_t k = target.size();
  std::vector<double> f(k, 0.0);
  std::vector<bool> clamped(k, false);
  for (std::size_t round = 0; round <= k; ++round) {
    std::size_t free_count = 0;
    double free_target_sum = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      if (!clamped[j]) {
        ++free_count;
        free_target_sum += target[j];
      }
    // All clamped can only happen at N == 0, which the caller excludes.
    const double shift = (static_cast<double>(n) - free_target_sum) / static_cast<double>(free_count);
    bool newly_clamped = false;
    for (std::size_t j = 0; j < k; ++j) {
      if (clamped[j]) {
        f[j] = 0.0;
        continue;
      }
      f[j] = target[j] + shift;
      if (f[j] < 0.0) {
        clamped[j] = true;
        newly_clamped = true;
      }
    }
    if (!newly_clamped) break;
  }
  for (auto& v : f) v = std::max(v, 0.0);
  return f;
}

// Solves the per-sku balance system: total_i = N_i + sum_j E_ij,
// target_ij = P_ij * total_i, F_ij = target_ij - E_ij. When the direct
// solution would go negative, falls back to the nonnegative projection.
inline FractionalSplit fractional_splits_with_inventory(const SplitProbabilityMatrix& p,
                                                        const PurchaseOrder& po,
                                                        const ExistingInventory& e) {
  if (p.rows() != po.lines.size()) throw ShapeMismatch("P rows != PO lines");
  if (e.rows() != p.rows() || e.cols() != p.cols())
    throw ShapeMismatch("E shape does not match P");
  FractionalSplit f(p.rows(), p.cols());
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const long long n = po.lines[i].quantity;
    long long existing = 0;
    for (std::size_t j = 0; j < p.cols(); ++j) existing += e(i, j);
    const double total = static_cast<double>(n + existing);
    std::vector<double> t(p.cols());
    bool negative = false;
    for (std::size_t j = 0; j < p.cols(); ++j) {
      t[j] = p(i, j) * total - static_cast<double>(e(i, j));
      if (t[j] < 0.0) negative = true;
    }
    if (negative) {
      auto row = nonneg_projection(t, n);
      for (std::size_t j = 0; j < p.cols(); ++j) f(i, j) = row[j];
    } else {
      for (std::size_t j = 0; j < p.cols(); ++j) f(i, j) = t[j];
    }
  }
  return f;
}

// Largest-remainder apportionment of one fractional row to integers summing
// to the row total. Ties go to the lowest index.
inline std::vector<long long> largest_remainder_round(const std::vector<double>& row,
                                                      long long total) {
  const std::size_t k = row.size();
  std::vector<long long> out(k);
  std::vector<double> frac(k);
  long long assigned = 0;
  for (std::size_t j = 0; j < k; ++j) {
    double fl = std::floor(row[j]);
    out[j] = static_cast<long long>(fl);
    frac[j] = row[j] - fl;
    assigned += out[j];
  }
  long long remaining = total - assigned;
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (long long r = 0; r < remaining; ++r) out[order[r % k]] += 1;
  return out;
}

inline IdealSplitMatrix round_to_integers(const FractionalSplit& f, const PurchaseOrder& po) {
  if (f.rows() != po.lines.size()) throw ShapeMismatch("F rows != PO lines");
  IdealSplitMatrix ideal(f.rows(), f.cols());
  for (std::size_t i = 0; i < f.rows(); ++i) {
    auto row = largest_remainder_round(f.row(i), po.lines[i].quantity);
    for (std::size_t j = 0; j < f.cols(); ++j) ideal(i, j) = row[j];
  }
  return ideal;
}

}  // namespace walloc

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "walloc/matrix.hpp"

namespace walloc {

struct Sku {
  std::string id;
  std::map<std::string, std::string> attributes;
  std::string article_type;
  std::string gender;
};

struct PoLine {
  Sku sku;
  long long quantity = 0;  // N_i >= 1
};

struct PurchaseOrder {
  std::string id;
  std::string business_unit;
  std::vector<PoLine> lines;

  std::size_t sku_count() const { return lines.size(); }
  long long total_quantity() const {
    long long n = 0;
    for (const auto& l : lines) n += l.quantity;
    return n;
  }
};

struct WarehouseSet {
  std::vector<std::string> warehouses;       // order fixes all column indices
  std::vector<long long> capacities;         // C_j >= 0

  std::size_t size() const { return warehouses.size(); }
  long long total_capacity() const {
    long long c = 0;
    for (long long x : capacities) c += x;
    return c;
  }
};

// E: M x K, existing units of sku_i in warehouse j.
using ExistingInventory = MatI;

// P: M x K, rows sum to 1.
using SplitProbabilityMatrix = MatD;

// I: M x K nonnegative integers, row i sums to N_i.
using IdealSplitMatrix = MatI;

// X: M x (K+1), column K is the not-assigned count X_il.
using AllocationMatrix = MatI;

struct PurchaseEvent {
  std::string sku_id;
  std::string pincode;
  long long timestamp = 0;
  int nearest_warehouse = -1;          // 0-based column index
  std::set<int> two_day_serviceable_by;
};

// ---- errors -----------------------------------------------------------------

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeMismatch : ValidationError {
  using ValidationError::ValidationError;
};
struct NegativeQuantity : ValidationError {
  using ValidationError::ValidationError;
};
struct DuplicateSku : ValidationError {
  using ValidationError::ValidationError;
};
struct EmptyCorpus : ValidationError {
  using ValidationError::ValidationError;
};
struct NoEvents : ValidationError {
  using ValidationError::ValidationError;
};
struct ScenarioGap : ValidationError {
  using ValidationError::ValidationError;
};
struct InstanceTooLarge : ValidationError {
  using ValidationError::ValidationError;
};
struct ParseError : std::runtime_error {
  ParseError(std::size_t line, const std::string& reason)
      : std::runtime_error("parse error at line " + std::to_string(line) + ": " + reason),
        line(line) {}
  std::size_t line;
};

// ---- penalty matrix ---------------------------------------------------------

// L: K x (K+1); the last column is the shared non-assignment penalty lambda_na,
// which must strictly exceed every assignment penalty.
class PenaltyMatrix {
 public:
  // Build from the truncated K x K part; lambda_na defaults to
  // K * max_offdiag + 1 which beats any reassignment chain.
  static PenaltyMatrix from_truncated(const MatD& trunc,
                                      std::optional<double> lambda_na = std::nullopt) {
    if (trunc.rows() != trunc.cols()) throw ShapeMismatch("penalty matrix must be K x K");
    const std::size_t k = trunc.rows();
    double max_off = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        if (trunc(i, j) < 0.0) throw ValidationError("penalty entries must be nonnegative");
        if (i != j) max_off = std::max(max_off, trunc(i, j));
      }
    double lam = lambda_na.value_or(static_cast<double>(k) * max_off + 1.0);
    if (!(lam > max_off))
      throw ValidationError("lambda_na must exceed every assignment penalty");
    PenaltyMatrix p;
    p.trunc_ = trunc;
    p.lambda_na_ = lam;
    return p;
  }

  // Symmetric distance table with zero diagonal.
  static PenaltyMatrix from_distances(const MatD& dist,
                                      std::optional<double> lambda_na = std::nullopt) {
    MatD t = dist;
    for (std::size_t i = 0; i < t.rows() && i < t.cols(); ++i) t(i, i) = 0.0;
    return from_truncated(t, lambda_na);
  }

  std::size_t warehouse_count() const { return trunc_.rows(); }
  double lambda_na() const { return lambda_na_; }
  const MatD& truncated() const { return trunc_; }

  // cost(u, v): v in [0, K] where v == K means not assigned.
  double cost(std::size_t u, std::size_t v) const {
    return v == trunc_.cols() ? lambda_na_ : trunc_(u, v);
  }

 private:
  MatD trunc_;
  double lambda_na_ = 0.0;
};

// ---- validation -------------------------------------------------------------

struct Violation {
  enum class Kind { ShapeMismatch, NegativeQuantity, DuplicateSku };
  Kind kind;
  std::string detail;  // names the offending index / id
};

struct ValidatedInstance {
  const PurchaseOrder* po;
  const WarehouseSet* warehouses;
  const ExistingInventory* inventory;  // may be null (treated as zero)
};

inline std::vector<Violation> check_instance(const PurchaseOrder& po,
                                             const WarehouseSet& ws,
                                             const ExistingInventory* e = nullptr) {
  std::vector<Violation> out;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < po.lines.size(); ++i) {
    const auto& l = po.lines[i];
    if (l.sku.id.empty())
      out.push_back({Violation::Kind::DuplicateSku, "empty sku id at line " + std::to_string(i)});
    else if (!seen.insert(l.sku.id).second)
      out.push_back({Violation::Kind::DuplicateSku, l.sku.id});
    if (l.quantity < 1)
      out.push_back({Violation::Kind::NegativeQuantity,
                     "sku " + l.sku.id + " quantity " + std::to_string(l.quantity)});
  }
  if (ws.warehouses.empty())
    out.push_back({Violation::Kind::ShapeMismatch, "warehouse set is empty"});
  if (ws.capacities.size() != ws.warehouses.size())
    out.push_back({Violation::Kind::ShapeMismatch, "capacity vector length != K"});
  for (std::size_t j = 0; j < ws.capacities.size(); ++j)
    if (ws.capacities[j] < 0)
      out.push_back({Violation::Kind::NegativeQuantity,
                     "capacity of warehouse " + std::to_string(j)});
  if (e) {
    if (e->rows() != po.lines.size() || e->cols() != ws.warehouses.size())
      out.push_back({Violation::Kind::ShapeMismatch,
                     "inventory shape " + std::to_string(e->rows()) + "x" +
                         std::to_string(e->cols()) + " vs expected " +
                         std::to_string(po.lines.size()) + "x" +
                         std::to_string(ws.warehouses.size())});
    else
      for (std::size_t i = 0; i < e->rows(); ++i)
        for (std::size_t j = 0; j < e->cols(); ++j)
          if ((*e)(i, j) < 0)
            out.push_back({Violation::Kind::NegativeQuantity,
                           "inventory (" + std::to_string(i) + "," + std::to_string(j) + ")"});
  }
  return out;
}

inline ValidatedInstance validate_instance(const PurchaseOrder& po, const WarehouseSet& ws,
                                           const ExistingInventory* e = nullptr) {
  auto v = check_instance(po, ws, e);
  if (!v.empty()) {
    switch (v.front().kind) {
      case Violation::Kind::ShapeMismatch: throw ShapeMismatch(v.front().detail);
      case Violation::Kind::NegativeQuantity: throw NegativeQuantity(v.front().detail);
      case Violation::Kind::DuplicateSku: throw DuplicateSku(v.front().detail);
    }
  }
  return {&po, &ws, e};
}

// ---- feasibility checks (pure, reused by tests) -----------------------------

// Row sums of X (including the unassigned column) must equal N_i.
inline bool satisfies_quantity_constraint(const AllocationMatrix& x, const PurchaseOrder& po) {
  if (x.rows() != po.lines.size()) return false;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    long long s = 0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (x(i, j) < 0) return false;
      s += x(i, j);
    }
    if (s != po.lines[i].quantity) return false;
  }
  return true;
}

// Column sums over the first K columns must respect capacities.
inline bool satisfies_capacity_constraint(const AllocationMatrix& x, const WarehouseSet& ws) {
  if (x.cols() != ws.size() + 1) return false;
  for (std::size_t j = 0; j < ws.size(); ++j)
    if (x.col_sum(j) > ws.capacities[j]) return false;
  return true;
}

inline bool probability_rows_valid(const SplitProbabilityMatrix& p, double tol = 1e-9) {
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) {
      if (p(i, j) < -tol || p(i, j) > 1.0 + tol) return false;
      s += p(i, j);
    }
    if (std::fabs(s - 1.0) > tol) return false;
  }
  return true;
}

}  // namespace walloc

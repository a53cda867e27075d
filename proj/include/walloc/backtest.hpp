#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "walloc/core.hpp"
#include "walloc/ideal_splits.hpp"
#include "walloc/solver.hpp"
#include "walloc/split_model.hpp"

namespace walloc {

// Per business-unit capacity vector over the K warehouses for one period;
// unavailable warehouses carry capacity 0.
struct CapacityScenario {
  std::map<std::string, std::vector<long long>> by_business_unit;

  const std::vector<long long>& require(const std::string& bu) const {
    auto it = by_business_unit.find(bu);
    if (it == by_business_unit.end())
      throw ScenarioGap("no capacity row for business unit '" + bu + "'");
    return it->second;
  }
};

struct LedgerEntry {
  std::string po_id;
  std::string business_unit;
  std::vector<std::string> sku_ids;
  IdealSplitMatrix ideal;          // uncapacitated splits
  AllocationMatrix constrained;    // solver output under remaining capacity
  AllocationMatrix heuristic;      // capacity-proportional baseline
  SolveReport report;
};

struct BacktestState {
  std::map<std::string, std::vector<long long>> remaining;            // solver ledger
  std::map<std::string, std::vector<long long>> remaining_heuristic;  // baseline ledger
  std::vector<LedgerEntry> ledger;
  long long dropped_unassigned = 0;  // X_il units, not re-entered into later POs
};

// Geography-blind comparison policy: split each sku proportionally to the
// remaining capacities (largest-remainder rounding), unassigned overflow in
// the last column.
inline AllocationMatrix heuristic_baseline(const PurchaseOrder& po,
                                           std::vector<long long>& remaining) {
  const std::size_t k = remaining.size();
  AllocationMatrix x(po.lines.size(), k + 1);
  for (std::size_t i = 0; i < po.lines.size(); ++i) {
    const long long n = po.lines[i].quantity;
    long long total_remaining = 0;
    for (long long c : remaining) total_remaining += c;
    if (total_remaining == 0) {
      x(i, k) = n;
      continue;
    }
    if (total_remaining <= n) {
      for (std::size_t j = 0; j < k; ++j) {
        x(i, j) = remaining[j];
        remaining[j] = 0;
      }
      x(i, k) = n - total_remaining;
      continue;
    }
    std::vector<double> frac(k);
    for (std::size_t j = 0; j < k; ++j)
      frac[j] = static_cast<double>(n) * static_cast<double>(remaining[j]) /
                static_cast<double>(total_remaining);
    auto row = largest_remainder_round(frac, n);
    for (std::size_t j = 0; j < k; ++j) {
      x(i, j) = row[j];
      remaining[j] -= row[j];
    }
  }
  return x;
}

// Sequential replay: for each PO build P, compute ideal splits, solve under
// the business unit's remaining capacity, record, deduct. Also tracks the
// heuristic policy on its own capacity ledger so the report can compare.
inline BacktestState replay(const std::vector<PurchaseOrder>& pos,
                            const CapacityScenario& scenario,
                            const ModelRegistry& models,
                            const WarehouseSet& warehouses,
                            const PenaltyMatrix& penalties,
                            const std::map<std::string, ExistingInventory>* inventory_by_po =
                                nullptr) {
  const std::size_t k = warehouses.size();
  BacktestState state;
  for (const auto& po : pos) scenario.require(po.business_unit);  // fail before mutating
  for (const auto& po : pos) {
    if (!state.remaining.count(po.business_unit)) {
      state.remaining[po.business_unit] = scenario.require(po.business_unit);
      state.remaining_heuristic[po.business_unit] = scenario.require(po.business_unit);
    }
    auto& remaining = state.remaining[po.business_unit];

    SplitProbabilityMatrix p = build_split_matrix(models, po, static_cast<int>(k));
    FractionalSplit f;
    if (inventory_by_po && inventory_by_po->count(po.id))
      f = fractional_splits_with_inventory(p, po, inventory_by_po->at(po.id));
    else
      f = fractional_splits_no_inventory(p, po);
    IdealSplitMatrix ideal = round_to_integers(f, po);

    auto [tensor, report] = solve_ip(ideal, penalties, remaining);
    AllocationMatrix x = extract_allocation(tensor);

    LedgerEntry entry;
    entry.po_id = po.id;
    entry.business_unit = po.business_unit;
    for (const auto& line : po.lines) entry.sku_ids.push_back(line.sku.id);
    entry.ideal = ideal;
    entry.constrained = x;
    entry.heuristic = heuristic_baseline(po, state.remaining_heuristic[po.business_unit]);
    entry.report = report;

    for (std::size_t j = 0; j < k; ++j) remaining[j] -= x.col_sum(j);
    state.dropped_unassigned += x.col_sum(k);
    state.ledger.push_back(std::move(entry));
  }
  return state;
}

// ---- fulfillment simulation -------------------------------------------------

using StockBySku = std::map<std::string, std::vector<long long>>;

struct FulfillmentCounts {
  long long from_nearest = 0;
  long long from_other = 0;
  long long within_two_days = 0;
  long long unfulfilled = 0;  // no stock anywhere; excluded from both ratios

  long long fulfilled() const { return from_nearest + from_other; }
  double ru() const {
    if (fulfilled() == 0) throw NoEvents("no fulfilled events");
    return static_cast<double>(from_nearest) / static_cast<double>(fulfilled());
  }
  double tdd() const {
    if (fulfilled() == 0) throw NoEvents("no fulfilled events");
    return static_cast<double>(within_two_days) / static_cast<double>(fulfilled());
  }
};

// Greedy depletion in timestamp order: nearest warehouse first, then the
// cheapest-penalty warehouse with stock (ties to the lowest index).
inline FulfillmentCounts simulate_fulfillment(StockBySku stock,
                                              std::vector<PurchaseEvent> events,
                                              const PenaltyMatrix& penalties) {
  std::stable_sort(events.begin(), events.end(),
                   [](const PurchaseEvent& a, const PurchaseEvent& b) {
                     return a.timestamp < b.timestamp;
                   });
  const std::size_t k = penalties.warehouse_count();
  FulfillmentCounts counts;
  for (const auto& ev : events) {
    auto it = stock.find(ev.sku_id);
    if (it == stock.end()) {
      ++counts.unfulfilled;
      continue;
    }
    auto& units = it->second;
    int chosen = -1;
    if (ev.nearest_warehouse >= 0 && static_cast<std::size_t>(ev.nearest_warehouse) < k &&
        units[ev.nearest_warehouse] > 0) {
      chosen = ev.nearest_warehouse;
      ++counts.from_nearest;
    } else {
      const bool has_nearest =
          ev.nearest_warehouse >= 0 && static_cast<std::size_t>(ev.nearest_warehouse) < k;
      double best = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (units[j] <= 0) continue;
        const double cost =
            has_nearest ? penalties.truncated()(ev.nearest_warehouse, j) : 0.0;
        if (chosen < 0 || cost < best) {
          chosen = static_cast<int>(j);
          best = cost;
        }
      }
      if (chosen >= 0) ++counts.from_other;
    }
    if (chosen < 0) {
      ++counts.unfulfilled;
      continue;
    }
    --units[chosen];
    if (ev.two_day_serviceable_by.count(chosen)) ++counts.within_two_days;
  }
  return counts;
}

inline double estimate_ru(const StockBySku& stock, const std::vector<PurchaseEvent>& events,
                          const PenaltyMatrix& penalties) {
  if (events.empty()) throw NoEvents("empty event stream");
  return simulate_fulfillment(stock, events, penalties).ru();
}

inline double estimate_2dd(const StockBySku& stock, const std::vector<PurchaseEvent>& events,
                           const PenaltyMatrix& penalties) {
  if (events.empty()) throw NoEvents("empty event stream");
  return simulate_fulfillment(stock, events, penalties).tdd();
}

// ---- reporting --------------------------------------------------------------

struct MetricsRow {
  double ru_ideal = 0, ru_constrained = 0, ru_heuristic = 0;
  double tdd_ideal = 0, tdd_constrained = 0, tdd_heuristic = 0;
};

struct MetricsReport {
  MetricsRow overall;
  std::map<std::string, MetricsRow> by_business_unit;
};

namespace detail {
inline void accumulate_stock(StockBySku& stock, const std::vector<std::string>& sku_ids,
                             const MatI& alloc, std::size_t k) {
  for (std::size_t i = 0; i < sku_ids.size(); ++i) {
    auto& units = stock[sku_ids[i]];
    if (units.empty()) units.assign(k, 0);
    for (std::size_t j = 0; j < k; ++j) units[j] += alloc(i, j);
  }
}
}  // namespace detail

// Runs the fulfillment simulation three times over the identical event
// stream: ideal (uncapacitated) stock, constrained stock, heuristic stock.
inline MetricsReport report(const BacktestState& state,
                            const std::vector<PurchaseEvent>& events,
                            const PenaltyMatrix& penalties, std::size_t warehouse_count) {
  if (events.empty()) throw NoEvents("empty event stream");
  StockBySku ideal, constrained, heuristic;
  std::map<std::string, std::string> bu_of_sku;
  for (const auto& entry : state.ledger) {
    detail::accumulate_stock(ideal, entry.sku_ids, entry.ideal, warehouse_count);
    detail::accumulate_stock(constrained, entry.sku_ids, entry.constrained, warehouse_count);
    detail::accumulate_stock(heuristic, entry.sku_ids, entry.heuristic, warehouse_count);
    for (const auto& id : entry.sku_ids) bu_of_sku.emplace(id, entry.business_unit);
  }
  auto filter_stock = [](const StockBySku& s, const std::map<std::string, std::string>& bus,
                         const std::string& bu) {
    StockBySku out;
    for (const auto& [id, units] : s)
      if (bus.at(id) == bu) out.emplace(id, units);
    return out;
  };
  auto row_for = [&](const StockBySku& i, const StockBySku& c, const StockBySku& h,
                     const std::vector<PurchaseEvent>& evs) {
    MetricsRow row;
    auto fi = simulate_fulfillment(i, evs, penalties);
    auto fc = simulate_fulfillment(c, evs, penalties);
    auto fh = simulate_fulfillment(h, evs, penalties);
    row.ru_ideal = fi.ru();
    row.ru_constrained = fc.ru();
    row.ru_heuristic = fh.ru();
    row.tdd_ideal = fi.tdd();
    row.tdd_constrained = fc.tdd();
    row.tdd_heuristic = fh.tdd();
    return row;
  };
  MetricsReport rep;
  rep.overall = row_for(ideal, constrained, heuristic, events);
  std::set<std::string> units;
  for (const auto& [id, bu] : bu_of_sku) units.insert(bu);
  for (const auto& bu : units) {
    std::vector<PurchaseEvent> evs;
    for (const auto& ev : events) {
      auto it = bu_of_sku.find(ev.sku_id);
      if (it != bu_of_sku.end() && it->second == bu) evs.push_back(ev);
    }
    if (evs.empty()) continue;
    rep.by_business_unit[bu] = row_for(filter_stock(ideal, bu_of_sku, bu),
                                       filter_stock(constrained, bu_of_sku, bu),
                                       filter_stock(heuristic, bu_of_sku, bu), evs);
  }
  return rep;
}

}  // namespace walloc

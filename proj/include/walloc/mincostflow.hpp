#pragma once

#include <cassert>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

namespace walloc {

// Successive-shortest-path min-cost flow with node potentials. Costs must be
// nonnegative on the original arcs so Dijkstra works from the start; the
// residual graph stays nonnegative under the reduced costs. Cost is a
// template parameter: int64 for exactly representable penalties, double
// otherwise.
template <typename Cost>
class MinCostFlow {
 public:
  explicit MinCostFlow(int node_count) : graph_(node_count) {}

  // Returns the arc index (usable with flow_on()).
  int add_arc(int from, int to, long long capacity, Cost cost) {
    assert(capacity >= 0);
    int id = static_cast<int>(arcs_.size());
    graph_[from].push_back(id);
    arcs_.push_back({to, capacity, cost});
    graph_[to].push_back(id + 1);
    arcs_.push_back({from, 0, -cost});
    return id;
  }

  long long flow_on(int arc) const { return arcs_[arc + 1].capacity; }

  // Pre-load flow on an arc (and its reverse). The caller is responsible for
  // conservation; used for verified warm starts.
  void force_flow(int arc, long long units) {
    arcs_[arc].capacity -= units;
    arcs_[arc + 1].capacity += units;
  }

  struct Result {
    long long flow = 0;
    Cost cost = Cost{};
    int augmentations = 0;
  };

  // Pushes as much flow as possible from s to t along successive shortest
  // paths (bottleneck amounts per augmentation).
  Result solve(int s, int t) {
    const int n = static_cast<int>(graph_.size());
    std::vector<Cost> potential(n, Cost{});
    if (has_negative_residual_cost()) bellman_ford_potentials(s, potential);
    Result res;
    std::vector<Cost> dist(n);
    std::vector<int> parent_arc(n);
    std::vector<bool> done(n);
    const Cost inf = std::numeric_limits<Cost>::max();
    for (;;) {
      // Dijkstra on reduced costs.
      std::fill(dist.begin(), dist.end(), inf);
      std::fill(done.begin(), done.end(), false);
      dist[s] = Cost{};
      using Item = std::pair<Cost, int>;
      std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
      pq.push({Cost{}, s});
      while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (done[u]) continue;
        done[u] = true;
        for (int id : graph_[u]) {
          const Arc& a = arcs_[id];
          if (a.capacity <= 0 || done[a.to]) continue;
          Cost nd = d + a.cost + potential[u] - potential[a.to];
          if (nd < dist[a.to]) {
            dist[a.to] = nd;
            parent_arc[a.to] = id;
            pq.push({nd, a.to});
          }
        }
      }
      if (!done[t]) break;
      for (int v = 0; v < n; ++v)
        if (done[v]) potential[v] += dist[v];
      long long push = std::numeric_limits<long long>::max();
      for (int v = t; v != s;) {
        const Arc& a = arcs_[parent_arc[v]];
        push = std::min(push, a.capacity);
        v = arcs_[parent_arc[v] ^ 1].to;
      }
      Cost path_cost = Cost{};
      for (int v = t; v != s;) {
        int id = parent_arc[v];
        arcs_[id].capacity -= push;
        arcs_[id ^ 1].capacity += push;
        path_cost += arcs_[id].cost;
        v = arcs_[id ^ 1].to;
      }
      res.flow += push;
      res.cost += path_cost * static_cast<Cost>(push);
      res.augmentations += 1;
    }
    return res;
  }

  // Cancels negative-cost residual cycles until none remain. Needed only
  // after a forced (warm-start) flow, which may be internally suboptimal.
  Cost cancel_negative_cycles() {
    Cost improvement{};
    for (;;) {
      auto cycle = find_negative_cycle();
      if (cycle.empty()) break;
      long long push = std::numeric_limits<long long>::max();
      Cost cycle_cost{};
      for (int id : cycle) {
        push = std::min(push, arcs_[id].capacity);
        cycle_cost += arcs_[id].cost;
      }
      for (int id : cycle) {
        arcs_[id].capacity -= push;
        arcs_[id ^ 1].capacity += push;
      }
      improvement += cycle_cost * static_cast<Cost>(push);
    }
    return improvement;  // <= 0
  }

 private:
  struct Arc {
    int to;
    long long capacity;
    Cost cost;
  };

  bool has_negative_residual_cost() const {
    for (const Arc& a : arcs_)
      if (a.capacity > 0 && a.cost < Cost{}) return true;
    return false;
  }

  void bellman_ford_potentials(int s, std::vector<Cost>& potential) const {
    const int n = static_cast<int>(graph_.size());
    const Cost inf = std::numeric_limits<Cost>::max();
    std::vector<Cost> dist(n, inf);
    dist[s] = Cost{};
    for (int round = 0; round < n; ++round) {
      bool changed = false;
      for (int u = 0; u < n; ++u) {
        if (dist[u] == inf) continue;
        for (int id : graph_[u]) {
          const Arc& a = arcs_[id];
          if (a.capacity <= 0) continue;
          if (dist[u] + a.cost < dist[a.to]) {
            dist[a.to] = dist[u] + a.cost;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    for (int v = 0; v < n; ++v) potential[v] = dist[v] == inf ? Cost{} : dist[v];
  }

  std::vector<int> find_negative_cycle() const {
    const int n = static_cast<int>(graph_.size());
    std::vector<Cost> dist(n, Cost{});
    std::vector<int> pred_arc(n, -1);
    int last_relaxed = -1;
    for (int round = 0; round < n; ++round) {
      last_relaxed = -1;
      for (int u = 0; u < n; ++u)
        for (int id : graph_[u]) {
          const Arc& a = arcs_[id];
          if (a.capacity <= 0) continue;
          if (dist[u] + a.cost < dist[a.to]) {
            dist[a.to] = dist[u] + a.cost;
            pred_arc[a.to] = id;
            last_relaxed = a.to;
          }
        }
      if (last_relaxed == -1) return {};
    }
    // Walk back n steps to land inside the cycle, then collect it.
    int v = last_relaxed;
    for (int i = 0; i < n; ++i) v = arcs_[pred_arc[v] ^ 1].to;
    std::vector<int> cycle;
    for (int u = v;;) {
      cycle.push_back(pred_arc[u]);
      u = arcs_[pred_arc[u] ^ 1].to;
      if (u == v) break;
    }
    return cycle;
  }

  std::vector<std::vector<int>> graph_;
  std::vector<Arc> arcs_;
};

}  // namespace walloc

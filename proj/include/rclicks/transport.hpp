#pragma once

// Exact discrete optimal transport between integer supplies and demands by
// successive shortest augmenting paths. Dijkstra runs on reduced costs over
// the dense bipartite residual graph, so one augmentation costs O((n+m)^2).

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "rclicks/error.hpp"

namespace rclicks {

struct TransportPlan {
  double cost = 0.0;                // sum of flow * unit cost
  std::vector<std::int64_t> flow;   // n x m, row-major
};

/// `cost` is n x m row-major with non-negative entries; supplies and demands
/// must have equal totals.
inline TransportPlan solve_transport(std::span<const std::int64_t> supply,
                                     std::span<const std::int64_t> demand,
                                     std::span<const double> cost) {
  const std::size_t n = supply.size();
  const std::size_t m = demand.size();
  if (n == 0 || m == 0 || cost.size() != n * m) {
    fail(ErrorKind::kInvalidParameter, "transport problem dimensions are inconsistent");
  }
  const auto total_supply = std::accumulate(supply.begin(), supply.end(), std::int64_t{0});
  const auto total_demand = std::accumulate(demand.begin(), demand.end(), std::int64_t{0});
  if (total_supply != total_demand) fail(ErrorKind::kInvalidParameter, "supply and demand totals differ");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t nodes = n + m;
  std::vector<std::int64_t> rem_s(supply.begin(), supply.end());
  std::vector<std::int64_t> rem_d(demand.begin(), demand.end());
  std::vector<std::int64_t> flow(n * m, 0);
  std::vector<double> potential(nodes, 0.0);
  std::vector<double> dist(nodes);
  std::vector<std::size_t> parent(nodes);
  std::vector<char> settled(nodes);
  std::vector<std::pair<std::size_t, std::size_t>> path;

  std::int64_t remaining = total_supply;
  while (remaining > 0) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(settled.begin(), settled.end(), 0);
    for (std::size_t i = 0; i < n; ++i)
      if (rem_s[i] > 0) dist[i] = 0.0;

    std::size_t target = nodes;
    for (;;) {
      std::size_t u = nodes;
      for (std::size_t v = 0; v < nodes; ++v)
        if (!settled[v] && dist[v] < kInf && (u == nodes || dist[v] < dist[u])) u = v;
      if (u == nodes) fail(ErrorKind::kInvalidParameter, "transport problem is infeasible");
      if (u >= n && rem_d[u - n] > 0) {
        target = u;
        break;
      }
      settled[u] = 1;
      if (u < n) {
        for (std::size_t j = 0; j < m; ++j) {
          const std::size_t v = n + j;
          if (settled[v]) continue;
          const double rc = std::max(0.0, cost[u * m + j] + potential[u] - potential[v]);
          if (dist[u] + rc < dist[v]) {
            dist[v] = dist[u] + rc;
            parent[v] = u;
          }
        }
      } else {
        const std::size_t j = u - n;
        for (std::size_t i = 0; i < n; ++i) {
          if (settled[i] || flow[i * m + j] == 0) continue;
          const double rc = std::max(0.0, -cost[i * m + j] + potential[u] - potential[i]);
          if (dist[u] + rc < dist[i]) {
            dist[i] = dist[u] + rc;
            parent[i] = u;
          }
        }
      }
    }

    const double reach = dist[target];
    for (std::size_t v = 0; v < nodes; ++v) potential[v] += settled[v] ? dist[v] : reach;

    // Walk back to the originating source (one with unsent supply; those are
    // exactly the Dijkstra roots) collecting the path and its bottleneck.
    std::int64_t delta = rem_d[target - n];
    path.clear();
    std::size_t v = target;
    while (!(v < n && rem_s[v] > 0)) {
      const std::size_t p = parent[v];
      if (p >= n) delta = std::min(delta, flow[v * m + (p - n)]);
      path.emplace_back(p, v);
      v = p;
    }
    delta = std::min(delta, rem_s[v]);
    for (const auto& [from, to] : path) {
      if (from < n) {
        flow[from * m + (to - n)] += delta;
      } else {
        flow[to * m + (from - n)] -= delta;
      }
    }
    rem_s[v] -= delta;
    rem_d[target - n] -= delta;
    remaining -= delta;
  }

  TransportPlan plan;
  for (std::size_t k = 0; k < flow.size(); ++k) plan.cost += static_cast<double>(flow[k]) * cost[k];
  plan.flow = std::move(flow);
  return plan;
}

}  // namespace rclicks

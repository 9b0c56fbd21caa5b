#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "favor/core.hpp"
#include "favor/filters.hpp"
#include "favor/graph.hpp"

namespace favor {

struct SearchParams {
  uint32_t ef = 100;          // result set capacity during the base-layer search
  uint32_t k = 10;
  bool termination_opt = true;
  double gamma_slack = 1.0;   // slack factor on the stop comparison
  double td_fraction = 0.5;   // required filter-passing share of the result set
  bool normalize_by_ef = true;
};

struct SearchStats {
  uint64_t dist_comps = 0;  // vector distance evaluations
  uint64_t hops = 0;        // nodes expanded at the base layer
  uint64_t path_td = 0;     // expanded nodes that pass the filter
};

enum class Route : uint8_t { graph, brute_force };

struct QueryOutcome {
  std::vector<Neighbor> hits;  // filter-passing only, ascending (dist, id)
  SearchStats stats;
  Route route = Route::graph;
  double p_hat = 1.0;       // selectivity the search was tuned for; NaN if unused
  uint32_t requested_k = 0; // hits.size() < requested_k means a shortfall
};

// Penalty added to the distance of points that fail the filter:
//   (1 - p) * (ef - p) * delta_d / (2 * p),  divided by ef when normalized.
// Throws UsageError unless 0 < p_hat <= 1, ef >= 1, delta_d >= 0.
double exclusion_distance(double p_hat, uint32_t ef, double delta_d,
                          bool normalize_by_ef = true);

// Admissible window for the unnormalized penalty:
//   lower = (1 - p) * (k/p - 1) * delta_d
//   upper = (1 - p) * (ef/p - k/p) * delta_d
// exclusion_distance(p, ef, delta_d, false) is the midpoint of the two.
struct ExclusionBounds {
  double lower = 0.0;
  double upper = 0.0;
};
ExclusionBounds exclusion_bounds(double p_hat, uint32_t k, uint32_t ef,
                                 double delta_d);

// raw for filter-passing points, raw + excl otherwise.
double adjusted_distance(double raw, bool is_td, double excl);

// Beam search over one layer on raw distances; classical termination. Returns
// up to ef nodes sorted ascending by (dist, id). stats may be null.
std::vector<Neighbor> greedy_search(const HnswIndex& index,
                                    const VectorDataset& ds,
                                    std::span<const float> q, uint32_t ef,
                                    uint64_t ep, uint32_t layer,
                                    SearchStats* stats = nullptr);

struct ScoredNode {
  uint64_t id = 0;
  double raw = 0.0;
  double adj = 0.0;
  bool td = false;
};

// Base-layer beam search ordered by adjusted distance. With
// sp.termination_opt the search stops only when the nearest candidate is
// beyond gamma_slack times the worst kept result AND filter-passing points
// hold more than sp.td_fraction of the result set; otherwise the classical
// stop rule applies. Returns the final result set sorted ascending by
// (adjusted, id).
std::vector<ScoredNode> opti_greedy_search(const HnswIndex& index,
                                           const VectorDataset& ds,
                                           std::span<const float> q,
                                           const FilterCondition& f,
                                           const SearchParams& sp, uint64_t ep,
                                           double excl,
                                           SearchStats* stats = nullptr);

// Full filtered query: descends the upper layers unfiltered with ef = 1,
// runs opti_greedy_search on the base layer with the penalty derived from
// p_hat, then returns the k nearest filter-passing points by raw distance.
QueryOutcome favor_search(const HnswIndex& index, const VectorDataset& ds,
                          std::span<const float> q, const FilterCondition& f,
                          const SearchParams& sp, double p_hat);

// Baseline: identical traversal to the unfiltered search on raw distances,
// except only filter-passing points may enter the result set.
QueryOutcome rsf_search(const HnswIndex& index, const VectorDataset& ds,
                        std::span<const float> q, const FilterCondition& f,
                        const SearchParams& sp);

// Unfiltered search: every point is a candidate result.
QueryOutcome hnsw_search(const HnswIndex& index, const VectorDataset& ds,
                         std::span<const float> q, const SearchParams& sp);

}  // namespace favor

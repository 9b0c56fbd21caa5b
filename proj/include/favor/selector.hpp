#pragma once

#include <cstdint>

#include "favor/core.hpp"
#include "favor/filters.hpp"
#include "favor/graph.hpp"
#include "favor/search.hpp"

namespace favor {

struct SelectorConfig {
  double lambda = 0.01;         // below this estimated selectivity, scan instead
  uint32_t min_sample = 1000;
  double sample_fraction = 0.01;
  uint64_t seed = 0;
};

// Filter-passing fraction of a uniform sample of size
// min(N, max(min_sample, ceil(sample_fraction * N))), drawn without
// replacement, deterministic given cfg.seed. Empty table yields 0.
double estimate_selectivity(const FilterCondition& f,
                            const AttributeTable& attrs,
                            const SelectorConfig& cfg);

// Expected relative error of that estimate under sampling without
// replacement: sqrt((1 - p) / (n * p) * (1 - n / N)).
double theoretical_relative_error(double p, uint64_t n, uint64_t big_n);

// brute_force when p_hat < lambda, graph otherwise (boundary goes to graph).
Route route(double p_hat, double lambda);

// Exact scan: evaluates the filter on every record and ranks the passing
// ones by distance. dist_comps equals the number of passing records.
QueryOutcome brute_force_search(const VectorDataset& ds,
                                std::span<const float> q,
                                const FilterCondition& f, uint32_t k);

// Full pipeline: estimate selectivity, pick the route, run the query.
QueryOutcome answer(const HnswIndex& index, const VectorDataset& ds,
                    std::span<const float> q, const FilterCondition& f,
                    const SearchParams& sp, const SelectorConfig& cfg);

}  // namespace favor

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "favor/core.hpp"

namespace favor {

struct BuildParams {
  uint32_t m = 32;           // neighbors kept per node on upper layers; 2*m on layer 0
  uint32_t efc = 40;         // construction beam width
  double level_norm = 0.0;   // 0 means use 1/ln(m)
  uint32_t alpha_rank = 10;  // lower rank for the density statistic
  uint32_t beta_rank = 0;    // upper rank; 0 means use efc
  uint64_t seed = 42;

  bool operator==(const BuildParams&) const = default;
};

struct HnswIndex {
  uint32_t dim = 0;
  uint64_t count = 0;
  BuildParams params;  // level_norm and ranks stored resolved
  uint32_t top_layer = 0;
  uint64_t entry_point = 0;
  // Mean spacing between consecutive distance ranks around a query point,
  // estimated from construction candidate lists. 0 only for indexes too
  // small to measure it.
  double delta_d = 0.0;
  std::vector<uint32_t> levels;                          // per node
  std::vector<std::vector<std::vector<uint32_t>>> links; // [node][layer]

  std::span<const uint32_t> neighbors(uint64_t node, uint32_t layer) const {
    return links[node][layer];
  }
};

// One insertion's contribution to the density statistic: the candidate list
// is sorted ascending by distance, ranks are 1-based, and the contribution is
// (d_beta - d_alpha) / (beta - alpha). Requires alpha < beta <= list size.
double delta_d_contribution(std::span<const double> sorted_dists,
                            uint32_t alpha_rank, uint32_t beta_rank);

// Neighbor diversification: walk candidates in ascending distance from the
// base point and keep c only if c is closer to the base than to every
// already-kept neighbor, until max_kept are kept.
std::vector<uint32_t> select_neighbors_heuristic(
    const VectorDataset& ds, std::span<const float> base,
    const std::vector<Neighbor>& candidates, uint32_t max_kept);

// Builds the index single-threaded; deterministic given params.seed.
// Throws UsageError on bad params, DataError on an empty dataset, attribute
// count mismatch, or a degenerate distance distribution (all duplicates).
HnswIndex build_index(const VectorDataset& ds, const BuildParams& params);

// Binary snapshot with a trailing CRC-32. Throws DataError on write failure
// resp. on a missing/corrupt/truncated file.
void save_index(const HnswIndex& index, const std::string& path);
HnswIndex load_index(const std::string& path);

}  // namespace favor

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "favor/core.hpp"
#include "favor/filters.hpp"
#include "favor/graph.hpp"
#include "favor/search.hpp"
#include "favor/selector.hpp"

namespace favor {

enum class VecFormat : uint8_t { fvecs, bvecs, raw_f32 };

VecFormat parse_vec_format(const std::string& name);

// fvecs/bvecs: per record an int32 dimension then dim float32 / uint8 values.
// raw_f32: a single uint32 dimension header then packed float32 values.
// Throws DataError on inconsistent dimensions, truncation, or non-finite
// values; the message names the offending record.
VectorDataset ingest_vectors(const std::string& path, VecFormat format);

// Independent uniform attributes: bools fair-coin, ints over {0..9}, floats
// over [0, 100]. Deterministic given seed.
AttributeTable synthesize_attributes(uint64_t count, AttributeSchema schema,
                                     uint64_t seed);

// Binary attribute snapshot with a trailing CRC-32.
void save_attributes(const AttributeTable& attrs, const std::string& path);
AttributeTable load_attributes(const std::string& path);

struct GroundTruth {
  std::vector<std::vector<uint64_t>> ids;   // per query, ascending distance
  std::vector<std::vector<double>> dists;   // parallel to ids
};

// Exact filtered top-k per query. Queries with fewer than k matching points
// get shorter entries; an unsatisfiable filter yields empty ones.
GroundTruth compute_ground_truth(const VectorDataset& ds,
                                 const VectorDataset& queries,
                                 const FilterCondition& f, uint32_t k);

// ivecs records: per query an int32 count then that many int32 ids.
// Distances are not persisted.
void save_ground_truth(const GroundTruth& gt, const std::string& path);
GroundTruth load_ground_truth(const std::string& path);

// |returned front-k  ∩  true top-k| / |true top-k|; empty truth counts as 1.
double recall_at_k(const std::vector<Neighbor>& hits,
                   const std::vector<uint64_t>& truth, uint32_t k);

enum class Method : uint8_t { favor, rsf, brute_force, hnsw_unfiltered };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct SweepSpec {
  std::vector<std::pair<std::string, FilterCondition>> filters;
  std::vector<uint32_t> efs;
  std::vector<Method> methods;
  uint32_t k = 10;
  uint32_t warmup = 10;  // untimed leading queries per cell
};

struct SweepRow {
  std::string filter_name;
  uint32_t ef = 0;
  Method method = Method::favor;
  uint32_t k = 0;
  uint64_t n_queries = 0;
  double recall = 0.0;
  double qps = 0.0;
  double dist_comps = 0.0;    // mean per query
  double hops = 0.0;          // mean per query
  double td_path_frac = 0.0;  // mean filter-passing share of expanded nodes
  double route_graph = 0.0;   // fraction of queries answered via the graph
  double route_brute = 0.0;
  double p_hat = 0.0;         // NaN when the method does not estimate
};

// Runs every (filter, ef, method) cell over all queries, single-threaded.
// Ground truth is computed once per filter. For the favor method the
// selectivity estimate is drawn once per filter and its cost is part of the
// timed region. Timing columns vary run to run; all others are
// deterministic given the seeds.
std::vector<SweepRow> sweep(const HnswIndex& index, const VectorDataset& ds,
                            const VectorDataset& queries, const SweepSpec& spec,
                            const SearchParams& base_sp,
                            const SelectorConfig& cfg);

// `header_lines` are emitted first, one comment line each, so a report can
// pin the exact index file it ran against.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows,
                     const std::vector<std::string>& header_lines);

enum class ExclusionStrategy : uint8_t { d0, eq_mid, d_max };

std::string strategy_name(ExclusionStrategy s);

struct AblationRow {
  ExclusionStrategy strategy = ExclusionStrategy::eq_mid;
  std::string filter_name;
  uint32_t ef = 0;
  uint32_t k = 0;
  uint64_t n_queries = 0;
  double recall = 0.0;
  double qps = 0.0;
  double dist_comps = 0.0;
  double mean_excl = 0.0;  // mean penalty applied
};

// Same query batch under three penalty choices: none, the selectivity-derived
// midpoint, and the per-query spread between the farthest passing and nearest
// failing point (found by a full scan, which is charged to that strategy).
std::vector<AblationRow> ablation_exclusion(
    const HnswIndex& index, const VectorDataset& ds,
    const VectorDataset& queries, const std::string& filter_name,
    const FilterCondition& f, const std::vector<uint32_t>& efs,
    const SearchParams& base_sp, const SelectorConfig& cfg);

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows,
                        const std::vector<std::string>& header_lines);

struct LinearModelReport {
  double mean_r2 = 0.0;
  double std_r2 = 0.0;
  uint32_t anchors = 0;
  uint32_t degenerate = 0;  // anchors with zero distance variance, excluded
  std::vector<double> r2_per_anchor;
};

// Checks how well sorted neighbor distances d_m grow linearly in the rank m:
// exact distances from each sampled anchor to all other points, first m_max
// ranks, least-squares fit, coefficient of determination per anchor.
LinearModelReport verify_linear_model(const VectorDataset& ds,
                                      uint32_t n_anchors, uint32_t m_max,
                                      uint64_t seed);

}  // namespace favor

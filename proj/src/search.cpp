#include "favor/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace favor {

double exclusion_distance(double p_hat, uint32_t ef, double delta_d,
                          bool normalize_by_ef) {
  if (!(p_hat > 0.0) || p_hat > 1.0)
    throw UsageError("exclusion_distance: selectivity must be in (0, 1]");
  if (ef == 0) throw UsageError("exclusion_distance: ef must be positive");
  if (delta_d < 0.0)
    throw UsageError("exclusion_distance: rank spacing must be non-negative");
  double d = (1.0 - p_hat) * (double(ef) - p_hat) * delta_d / (2.0 * p_hat);
  if (normalize_by_ef) d /= double(ef);
  return d;
}

double adjusted_distance(double raw, bool is_td, double excl) {
  return is_td ? raw : raw + excl;
}

ExclusionBounds exclusion_bounds(double p_hat, uint32_t k, uint32_t ef,
                                 double delta_d) {
  if (!(p_hat > 0.0) || p_hat > 1.0)
    throw UsageError("exclusion_bounds: selectivity must be in (0, 1]");
  if (k == 0 || ef == 0)
    throw UsageError("exclusion_bounds: k and ef must be positive");
  if (delta_d < 0.0)
    throw UsageError("exclusion_bounds: rank spacing must be non-negative");
  ExclusionBounds b;
  b.lower = (1.0 - p_hat) * (double(k) / p_hat - 1.0) * delta_d;
  b.upper = (1.0 - p_hat) * (double(ef) / p_hat - double(k) / p_hat) * delta_d;
  return b;
}

namespace {

struct RawEntry {
  double dist;
  uint64_t id;
};

struct RawMin {
  bool operator()(const RawEntry& a, const RawEntry& b) const {
    return a.dist != b.dist ? a.dist > b.dist : a.id > b.id;
  }
};

struct RawMax {
  bool operator()(const RawEntry& a, const RawEntry& b) const {
    return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
  }
};

struct AdjEntry {
  double adj;
  double raw;
  uint64_t id;
  bool td;
};

struct AdjMin {
  bool operator()(const AdjEntry& a, const AdjEntry& b) const {
    return a.adj != b.adj ? a.adj > b.adj : a.id > b.id;
  }
};

struct AdjMax {
  bool operator()(const AdjEntry& a, const AdjEntry& b) const {
    return a.adj != b.adj ? a.adj < b.adj : a.id < b.id;
  }
};

void check_entry(const HnswIndex& index, uint64_t ep, uint32_t layer) {
  if (ep >= index.count)
    throw UsageError("search: entry point out of range");
  if (layer > index.levels[ep])
    throw UsageError("search: entry point does not reach the requested layer");
}

// Walks layer by layer from the global entry point down to layer 1,
// keeping a single best candidate per layer. Only distance evaluations
// are charged to the stats; hop counting is reserved for the base layer.
uint64_t descend_to_base(const HnswIndex& index, const VectorDataset& ds,
                         std::span<const float> query, SearchStats* stats) {
  uint64_t cur = index.entry_point;
  for (uint32_t layer = index.top_layer; layer >= 1; --layer) {
    SearchStats local;
    cur = greedy_search(index, ds, query, 1, cur, layer, &local).front().id;
    if (stats) stats->dist_comps += local.dist_comps;
  }
  return cur;
}

std::vector<Neighbor> finish_hits(std::vector<RawEntry> pool, uint32_t k) {
  std::sort(pool.begin(), pool.end(), [](const RawEntry& a, const RawEntry& b) {
    return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
  });
  if (pool.size() > k) pool.resize(k);
  std::vector<Neighbor> hits;
  hits.reserve(pool.size());
  for (const RawEntry& e : pool) hits.push_back({e.id, e.dist});
  return hits;
}

}  // namespace

std::vector<Neighbor> greedy_search(const HnswIndex& index,
                                    const VectorDataset& ds,
                                    std::span<const float> query, uint32_t ef,
                                    uint64_t entry, uint32_t layer,
                                    SearchStats* stats) {
  if (ef == 0) throw UsageError("search: ef must be positive");
  if (index.count == 0) return {};
  check_entry(index, entry, layer);

  std::vector<char> visited(index.count, 0);
  std::priority_queue<RawEntry, std::vector<RawEntry>, RawMin> cand;
  std::priority_queue<RawEntry, std::vector<RawEntry>, RawMax> result;

  double d0 = euclidean(query, ds.vec(entry));
  if (stats) ++stats->dist_comps;
  cand.push({d0, entry});
  result.push({d0, entry});
  visited[entry] = 1;

  while (!cand.empty()) {
    RawEntry cur = cand.top();
    if (cur.dist > result.top().dist) break;
    cand.pop();
    if (stats) ++stats->hops;
    for (uint32_t nb : index.neighbors(cur.id, layer)) {
      if (visited[nb]) continue;
      visited[nb] = 1;
      double d = euclidean(query, ds.vec(nb));
      if (stats) ++stats->dist_comps;
      if (result.size() < ef || d < result.top().dist) {
        cand.push({d, nb});
        result.push({d, nb});
        if (result.size() > ef) result.pop();
      }
    }
  }

  std::vector<Neighbor> out(result.size());
  for (size_t i = result.size(); i-- > 0;) {
    out[i] = {result.top().id, result.top().dist};
    result.pop();
  }
  return out;
}

std::vector<ScoredNode> opti_greedy_search(const HnswIndex& index,
                                           const VectorDataset& ds,
                                           std::span<const float> query,
                                           const FilterCondition& filter,
                                           const SearchParams& sp,
                                           uint64_t entry, double excl,
                                           SearchStats* stats) {
  if (sp.ef == 0) throw UsageError("search: ef must be positive");
  if (excl < 0.0)
    throw UsageError("search: exclusion distance must be non-negative");
  if (index.count == 0) return {};
  check_entry(index, entry, 0);

  std::vector<char> visited(index.count, 0);
  std::priority_queue<AdjEntry, std::vector<AdjEntry>, AdjMin> cand;
  std::priority_queue<AdjEntry, std::vector<AdjEntry>, AdjMax> result;
  uint64_t td_count = 0;

  double d0 = euclidean(query, ds.vec(entry));
  if (stats) ++stats->dist_comps;
  bool td0 = evaluate(filter, ds.attrs, entry);
  AdjEntry seed{adjusted_distance(d0, td0, excl), d0, entry, td0};
  cand.push(seed);
  result.push(seed);
  td_count += td0 ? 1 : 0;
  visited[entry] = 1;

  while (!cand.empty()) {
    AdjEntry cur = cand.top();
    double worst = result.top().adj;
    if (sp.termination_opt) {
      if (cur.adj > sp.gamma_slack * worst &&
          double(td_count) > sp.td_fraction * double(result.size()))
        break;
    } else if (cur.adj > worst) {
      break;
    }
    cand.pop();
    if (stats) {
      ++stats->hops;
      if (cur.td) ++stats->path_td;
    }
    for (uint32_t nb : index.neighbors(cur.id, 0)) {
      if (visited[nb]) continue;
      visited[nb] = 1;
      double d = euclidean(query, ds.vec(nb));
      if (stats) ++stats->dist_comps;
      bool td = evaluate(filter, ds.attrs, nb);
      double a = adjusted_distance(d, td, excl);
      if (result.size() < sp.ef || a < result.top().adj) {
        cand.push({a, d, nb, td});
        result.push({a, d, nb, td});
        td_count += td ? 1 : 0;
        if (result.size() > sp.ef) {
          td_count -= result.top().td ? 1 : 0;
          result.pop();
        }
      }
    }
  }

  std::vector<ScoredNode> out(result.size());
  for (size_t i = result.size(); i-- > 0;) {
    const AdjEntry& e = result.top();
    out[i] = {e.id, e.raw, e.adj, e.td};
    result.pop();
  }
  return out;
}

QueryOutcome favor_search(const HnswIndex& index, const VectorDataset& ds,
                          std::span<const float> query,
                          const FilterCondition& filter,
                          const SearchParams& sp, double p_hat) {
  QueryOutcome out;
  out.route = Route::graph;
  out.p_hat = p_hat;
  out.requested_k = sp.k;
  if (index.count == 0) return out;

  double excl =
      exclusion_distance(p_hat, sp.ef, index.delta_d, sp.normalize_by_ef);
  uint64_t base = descend_to_base(index, ds, query, &out.stats);
  auto pool =
      opti_greedy_search(index, ds, query, filter, sp, base, excl, &out.stats);

  std::vector<RawEntry> td;
  for (const ScoredNode& s : pool)
    if (s.td) td.push_back({s.raw, s.id});
  out.hits = finish_hits(std::move(td), sp.k);
  return out;
}

QueryOutcome rsf_search(const HnswIndex& index, const VectorDataset& ds,
                        std::span<const float> query,
                        const FilterCondition& filter, const SearchParams& sp) {
  if (sp.ef == 0) throw UsageError("search: ef must be positive");
  QueryOutcome out;
  out.route = Route::graph;
  out.requested_k = sp.k;
  if (index.count == 0) return out;

  uint64_t base = descend_to_base(index, ds, query, &out.stats);
  SearchStats& stats = out.stats;

  std::vector<char> visited(index.count, 0);
  std::priority_queue<AdjEntry, std::vector<AdjEntry>, AdjMin> cand;
  std::priority_queue<AdjEntry, std::vector<AdjEntry>, AdjMax> result;

  double d0 = euclidean(query, ds.vec(base));
  ++stats.dist_comps;
  bool td0 = evaluate(filter, ds.attrs, base);
  cand.push({d0, d0, base, td0});
  if (td0) result.push({d0, d0, base, td0});
  visited[base] = 1;

  while (!cand.empty()) {
    AdjEntry cur = cand.top();
    // The pool only ever holds matching points, so the walk may not stop
    // before it is full: an early cutoff against a half-empty pool would
    // starve low-selectivity filters.
    if (result.size() >= sp.ef && cur.adj > result.top().adj) break;
    cand.pop();
    ++stats.hops;
    if (cur.td) ++stats.path_td;
    for (uint32_t nb : index.neighbors(cur.id, 0)) {
      if (visited[nb]) continue;
      visited[nb] = 1;
      double d = euclidean(query, ds.vec(nb));
      ++stats.dist_comps;
      bool td = evaluate(filter, ds.attrs, nb);
      double worst = result.empty() ? std::numeric_limits<double>::infinity()
                                    : result.top().adj;
      if (result.size() < sp.ef || d < worst) {
        cand.push({d, d, nb, td});
        if (td) {
          result.push({d, d, nb, td});
          if (result.size() > sp.ef) result.pop();
        }
      }
    }
  }

  std::vector<RawEntry> pool;
  pool.reserve(result.size());
  while (!result.empty()) {
    pool.push_back({result.top().raw, result.top().id});
    result.pop();
  }
  out.hits = finish_hits(std::move(pool), sp.k);
  return out;
}

QueryOutcome hnsw_search(const HnswIndex& index, const VectorDataset& ds,
                         std::span<const float> query, const SearchParams& sp) {
  QueryOutcome out;
  out.route = Route::graph;
  out.requested_k = sp.k;
  if (index.count == 0) return out;

  uint64_t base = descend_to_base(index, ds, query, &out.stats);
  auto pool = greedy_search(index, ds, query, sp.ef, base, 0, &out.stats);

  std::vector<RawEntry> raw;
  raw.reserve(pool.size());
  for (const Neighbor& nb : pool) raw.push_back({nb.dist, nb.id});
  out.hits = finish_hits(std::move(raw), sp.k);
  return out;
}

}  // namespace favor

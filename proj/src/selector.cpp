#include "favor/selector.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <unordered_map>

namespace favor {

double estimate_selectivity(const FilterCondition& filter,
                            const AttributeTable& attrs,
                            const SelectorConfig& cfg) {
  const uint64_t total = attrs.count;
  if (total == 0) return 0.0;
  uint64_t n = uint64_t(std::ceil(cfg.sample_fraction * double(total)));
  n = std::max<uint64_t>(n, cfg.min_sample);
  n = std::min(n, total);
  if (n == 0)
    throw UsageError("selectivity estimate: sample size resolves to zero");

  // Partial Fisher-Yates over virtual positions: only the displaced slots
  // are materialized, so a trial costs O(n) memory regardless of the
  // table size.
  std::mt19937_64 rng(cfg.seed);
  std::unordered_map<uint64_t, uint64_t> moved;
  moved.reserve(size_t(2 * n));
  auto slot = [&moved](uint64_t pos) {
    auto it = moved.find(pos);
    return it == moved.end() ? pos : it->second;
  };
  uint64_t hits = 0;
  for (uint64_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<uint64_t> pick(i, total - 1);
    uint64_t j = pick(rng);
    uint64_t record = slot(j);
    moved[j] = slot(i);
    if (evaluate(filter, attrs, record)) ++hits;
  }
  return double(hits) / double(n);
}

double theoretical_relative_error(double p, uint64_t n, uint64_t big_n) {
  if (!(p > 0.0) || p > 1.0)
    throw UsageError("relative error: selectivity must be in (0, 1]");
  if (n == 0 || big_n == 0 || n > big_n)
    throw UsageError("relative error: need 1 <= n <= N");
  double var = (1.0 - p) / (double(n) * p) * (1.0 - double(n) / double(big_n));
  return std::sqrt(std::max(var, 0.0));
}

Route route(double p_hat, double lambda) {
  return p_hat < lambda ? Route::brute_force : Route::graph;
}

QueryOutcome brute_force_search(const VectorDataset& ds,
                                std::span<const float> query,
                                const FilterCondition& filter, uint32_t k) {
  if (k == 0) throw UsageError("search: k must be positive");
  QueryOutcome out;
  out.route = Route::brute_force;
  out.requested_k = k;
  out.p_hat = std::numeric_limits<double>::quiet_NaN();

  auto worse = [](const Neighbor& a, const Neighbor& b) { return nearer(a, b); };
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(worse)> best(
      worse);
  for (uint64_t i = 0; i < ds.count(); ++i) {
    if (!evaluate(filter, ds.attrs, i)) continue;
    double d = euclidean(query, ds.vec(i));
    ++out.stats.dist_comps;
    Neighbor cur{i, d};
    if (best.size() < k) {
      best.push(cur);
    } else if (nearer(cur, best.top())) {
      best.pop();
      best.push(cur);
    }
  }
  out.hits.resize(best.size());
  for (size_t i = best.size(); i-- > 0;) {
    out.hits[i] = best.top();
    best.pop();
  }
  return out;
}

QueryOutcome answer(const HnswIndex& index, const VectorDataset& ds,
                    std::span<const float> query,
                    const FilterCondition& filter, const SearchParams& sp,
                    const SelectorConfig& cfg) {
  double p_hat = estimate_selectivity(filter, ds.attrs, cfg);
  if (route(p_hat, cfg.lambda) == Route::brute_force) {
    QueryOutcome out = brute_force_search(ds, query, filter, sp.k);
    out.p_hat = p_hat;
    return out;
  }
  return favor_search(index, ds, query, filter, sp, p_hat);
}

}  // namespace favor

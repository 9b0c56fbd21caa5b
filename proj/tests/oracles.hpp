// Independent reference implementations used only by tests. Everything here
// is written the slow, obvious way on purpose so library results can be
// checked against a second code path.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "favor/core.hpp"
#include "favor/filters.hpp"

namespace oracle {

inline double dist_ref(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = double(a[i]) - double(b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

struct Hit {
  uint64_t id;
  double dist;
};

// Exhaustive filtered k-NN by full sort; ties by ascending id.
inline std::vector<Hit> knn_ref(const favor::VectorDataset& ds,
                                std::span<const float> q, size_t k,
                                const favor::FilterCondition* f = nullptr) {
  std::vector<Hit> all;
  for (uint64_t i = 0; i < ds.count(); ++i) {
    if (f != nullptr && !favor::evaluate(*f, ds.attrs, i)) continue;
    all.push_back({i, dist_ref(ds.vec(i), q)});
  }
  std::sort(all.begin(), all.end(), [](const Hit& a, const Hit& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.id < b.id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

// Sorted distances from one dataset point to all others (self excluded).
inline std::vector<double> neighbor_dists_ref(const favor::VectorDataset& ds,
                                              uint64_t anchor) {
  std::vector<double> out;
  for (uint64_t i = 0; i < ds.count(); ++i) {
    if (i == anchor) continue;
    out.push_back(dist_ref(ds.vec(i), ds.vec(anchor)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Least-squares fit y = a + b*x, returns the coefficient of determination.
inline double r2_ref(const std::vector<double>& xs,
                     const std::vector<double>& ys) {
  size_t n = xs.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  double b = sxy / sxx;
  double a = my - b * mx;
  double ss_res = 0, ss_tot = 0;
  for (size_t i = 0; i < n; ++i) {
    double e = ys[i] - (a + b * xs[i]);
    ss_res += e * e;
    ss_tot += (ys[i] - my) * (ys[i] - my);
  }
  return 1.0 - ss_res / ss_tot;
}

inline favor::VectorDataset uniform_vectors(uint64_t n, uint32_t dim,
                                            uint64_t seed, float lo = 0.0f,
                                            float hi = 1.0f) {
  favor::VectorDataset ds;
  ds.dim = dim;
  ds.data.resize(n * dim);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  for (auto& x : ds.data) x = u(rng);
  return ds;
}

// 1-d points at coordinates 0, step, 2*step, ...
inline favor::VectorDataset grid_1d(uint64_t n, float step = 1.0f) {
  favor::VectorDataset ds;
  ds.dim = 1;
  ds.data.resize(n);
  for (uint64_t i = 0; i < n; ++i) ds.data[i] = float(i) * step;
  return ds;
}

// Second code path for attribute synthesis statistics and filter tests.
inline favor::AttributeTable uniform_attrs(uint64_t count,
                                           favor::AttributeSchema schema,
                                           uint64_t seed) {
  favor::AttributeTable t;
  t.schema = schema;
  t.count = count;
  t.bools.resize(count * schema.n_bool);
  t.ints.resize(count * schema.n_int);
  t.floats.resize(count * schema.n_float);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> digit(0, 9);
  std::uniform_real_distribution<float> pct(0.0f, 100.0f);
  for (uint64_t r = 0; r < count; ++r) {
    for (uint32_t j = 0; j < schema.n_bool; ++j)
      t.bools[r * schema.n_bool + j] = uint8_t(coin(rng));
    for (uint32_t j = 0; j < schema.n_int; ++j)
      t.ints[r * schema.n_int + j] = digit(rng);
    for (uint32_t j = 0; j < schema.n_float; ++j)
      t.floats[r * schema.n_float + j] = pct(rng);
  }
  return t;
}

// Random predicate tree for round-trip properties.
inline favor::FilterCondition random_filter(std::mt19937_64& rng,
                                            const favor::AttributeSchema& s,
                                            int depth) {
  using FC = favor::FilterCondition;
  std::uniform_int_distribution<int> leaf_kind(0, 4);
  std::uniform_int_distribution<int> node_kind(0, 7);
  int kind = depth <= 0 ? leaf_kind(rng) : node_kind(rng);
  auto battr = [&] {
    return std::uniform_int_distribution<uint32_t>(0, s.n_bool - 1)(rng);
  };
  auto iattr = [&] {
    return std::uniform_int_distribution<uint32_t>(0, s.n_int - 1)(rng);
  };
  auto fattr = [&] {
    return std::uniform_int_distribution<uint32_t>(0, s.n_float - 1)(rng);
  };
  switch (kind) {
    case 0:
      return FC::always_true();
    case 1:
      return FC::bool_eq(battr(), rng() % 2 == 0);
    case 2:
      return FC::int_eq(iattr(), int64_t(rng() % 10));
    case 3: {
      std::vector<int64_t> vs;
      size_t n = 1 + rng() % 4;
      for (size_t i = 0; i < n; ++i) vs.push_back(int64_t(rng() % 10));
      std::sort(vs.begin(), vs.end());
      vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
      return FC::int_in(iattr(), std::move(vs));
    }
    case 4: {
      std::uniform_real_distribution<double> u(0.0, 100.0);
      double a = u(rng), b = u(rng);
      return FC::float_range(fattr(), std::min(a, b), std::max(a, b));
    }
    case 5:
    case 6: {
      std::vector<FC> kids;
      size_t n = 2 + rng() % 2;
      for (size_t i = 0; i < n; ++i)
        kids.push_back(random_filter(rng, s, depth - 1));
      return kind == 5 ? FC::all_of(std::move(kids))
                       : FC::any_of(std::move(kids));
    }
    default:
      return FC::negate(random_filter(rng, s, depth - 1));
  }
}

}  // namespace oracle

#include "favor/bench.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace favor {

namespace {

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(uint8_t(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& b, uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(uint8_t(v >> (8 * i)));
}

struct Cursor {
  const std::vector<uint8_t>& b;
  size_t pos = 0;
  const char* what;

  bool done() const { return pos >= b.size(); }
  size_t left() const { return b.size() - pos; }
  void need(size_t n) const {
    if (pos + n > b.size())
      throw DataError(std::string(what) + ": truncated file");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(b[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  int32_t i32() { return int32_t(u32()); }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(b[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  uint8_t u8() {
    need(1);
    return b[pos++];
  }
};

std::vector<uint8_t> read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError(std::string(what) + ": cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in),
          std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
  if (!out) throw DataError("write failed for '" + path + "'");
}

uint32_t crc_of(const std::vector<uint8_t>& b, size_t n) {
  uLong c = crc32(0L, Z_NULL, 0);
  c = crc32(c, b.data(), uInt(n));
  return uint32_t(c);
}

// Distinct indices without materializing the population; partial
// Fisher-Yates, same trick as the selectivity sampler.
std::vector<uint64_t> sample_indices(uint64_t n, uint64_t total,
                                     uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::unordered_map<uint64_t, uint64_t> moved;
  auto slot = [&moved](uint64_t pos) {
    auto it = moved.find(pos);
    return it == moved.end() ? pos : it->second;
  };
  std::vector<uint64_t> out;
  out.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<uint64_t> pick(i, total - 1);
    uint64_t j = pick(rng);
    out.push_back(slot(j));
    moved[j] = slot(i);
  }
  return out;
}

}  // namespace

VecFormat parse_vec_format(const std::string& name) {
  if (name == "fvecs") return VecFormat::fvecs;
  if (name == "bvecs") return VecFormat::bvecs;
  if (name == "raw_f32") return VecFormat::raw_f32;
  throw UsageError("unknown vector format '" + name +
                   "' (expected fvecs, bvecs, or raw_f32)");
}

VectorDataset ingest_vectors(const std::string& path, VecFormat format) {
  auto bytes = read_file(path, "vector file");
  Cursor c{bytes, 0, "vector file"};
  VectorDataset ds;

  auto check_finite = [](float v, uint64_t record) {
    if (!std::isfinite(v))
      throw DataError("vector file: record " + std::to_string(record) +
                      " holds a non-finite value");
  };

  if (format == VecFormat::raw_f32) {
    uint32_t dim = c.u32();
    if (dim == 0) throw DataError("vector file: zero dimension header");
    if (c.left() % (4 * size_t(dim)) != 0)
      throw DataError(
          "vector file: payload is not a whole number of " +
          std::to_string(dim) + "-float records");
    ds.dim = dim;
    uint64_t n = c.left() / (4 * size_t(dim));
    ds.data.reserve(n * dim);
    for (uint64_t r = 0; r < n; ++r)
      for (uint32_t j = 0; j < dim; ++j) {
        float v = c.f32();
        check_finite(v, r);
        ds.data.push_back(v);
      }
  } else {
    uint64_t record = 0;
    while (!c.done()) {
      int32_t d = c.i32();
      if (d <= 0)
        throw DataError("vector file: record " + std::to_string(record) +
                        " has non-positive dimension " + std::to_string(d));
      if (record == 0) {
        ds.dim = uint32_t(d);
      } else if (uint32_t(d) != ds.dim) {
        throw DataError("vector file: record " + std::to_string(record) +
                        " has dimension " + std::to_string(d) +
                        ", expected " + std::to_string(ds.dim));
      }
      for (int32_t j = 0; j < d; ++j) {
        float v = format == VecFormat::fvecs ? c.f32() : float(c.u8());
        check_finite(v, record);
        ds.data.push_back(v);
      }
      ++record;
    }
  }

  if (ds.data.empty()) throw DataError("vector file: contains no vectors");
  return ds;
}

AttributeTable synthesize_attributes(uint64_t count, AttributeSchema schema,
                                     uint64_t seed) {
  AttributeTable t;
  t.schema = schema;
  t.count = count;
  t.bools.resize(count * schema.n_bool);
  t.ints.resize(count * schema.n_int);
  t.floats.resize(count * schema.n_float);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int32_t> digit(0, 9);
  std::uniform_real_distribution<float> pct(0.0f, 100.0f);
  for (uint64_t r = 0; r < count; ++r) {
    for (uint32_t j = 0; j < schema.n_bool; ++j)
      t.bools[r * schema.n_bool + j] = coin(rng) ? 1 : 0;
    for (uint32_t j = 0; j < schema.n_int; ++j)
      t.ints[r * schema.n_int + j] = digit(rng);
    for (uint32_t j = 0; j < schema.n_float; ++j)
      t.floats[r * schema.n_float + j] = pct(rng);
  }
  return t;
}

// attribute snapshot, little-endian:
//   "FVRA" | version u32 | count u64 | n_bool u32 | n_int u32 | n_float u32
//   | per record: bools as u8, ints as i32, floats as f32
//   | crc32 of everything above, u32

namespace {
constexpr char kAttrMagic[4] = {'F', 'V', 'R', 'A'};
constexpr uint32_t kAttrVersion = 1;
}  // namespace

void save_attributes(const AttributeTable& attrs, const std::string& path) {
  std::vector<uint8_t> b;
  b.insert(b.end(), kAttrMagic, kAttrMagic + 4);
  put_u32(b, kAttrVersion);
  put_u64(b, attrs.count);
  put_u32(b, attrs.schema.n_bool);
  put_u32(b, attrs.schema.n_int);
  put_u32(b, attrs.schema.n_float);
  const auto& s = attrs.schema;
  for (uint64_t r = 0; r < attrs.count; ++r) {
    for (uint32_t j = 0; j < s.n_bool; ++j)
      b.push_back(attrs.bools[r * s.n_bool + j]);
    for (uint32_t j = 0; j < s.n_int; ++j)
      put_u32(b, uint32_t(attrs.ints[r * s.n_int + j]));
    for (uint32_t j = 0; j < s.n_float; ++j)
      put_u32(b, std::bit_cast<uint32_t>(attrs.floats[r * s.n_float + j]));
  }
  put_u32(b, crc_of(b, b.size()));
  write_bytes(path, b);
}

AttributeTable load_attributes(const std::string& path) {
  auto bytes = read_file(path, "attribute file");
  if (bytes.size() < 4 + 4 + 4)
    throw DataError("attribute file too short");
  if (std::memcmp(bytes.data(), kAttrMagic, 4) != 0)
    throw DataError("'" + path + "' is not an attribute file (bad magic)");
  uint32_t stored = 0;
  for (int i = 0; i < 4; ++i)
    stored |= uint32_t(bytes[bytes.size() - 4 + i]) << (8 * i);
  if (crc_of(bytes, bytes.size() - 4) != stored)
    throw DataError("attribute file '" + path +
                    "' failed its checksum (corrupt or truncated)");

  Cursor c{bytes, 4, "attribute file"};
  uint32_t version = c.u32();
  if (version != kAttrVersion)
    throw DataError("unsupported attribute file version " +
                    std::to_string(version));
  AttributeTable t;
  t.count = c.u64();
  t.schema.n_bool = c.u32();
  t.schema.n_int = c.u32();
  t.schema.n_float = c.u32();
  t.bools.reserve(t.count * t.schema.n_bool);
  t.ints.reserve(t.count * t.schema.n_int);
  t.floats.reserve(t.count * t.schema.n_float);
  for (uint64_t r = 0; r < t.count; ++r) {
    for (uint32_t j = 0; j < t.schema.n_bool; ++j) t.bools.push_back(c.u8());
    for (uint32_t j = 0; j < t.schema.n_int; ++j)
      t.ints.push_back(int32_t(c.u32()));
    for (uint32_t j = 0; j < t.schema.n_float; ++j) t.floats.push_back(c.f32());
  }
  if (c.pos != bytes.size() - 4)
    throw DataError("attribute file has trailing bytes");
  return t;
}

GroundTruth compute_ground_truth(const VectorDataset& ds,
                                 const VectorDataset& queries,
                                 const FilterCondition& f, uint32_t k) {
  if (queries.dim != ds.dim)
    throw UsageError("ground truth: query dimension " +
                     std::to_string(queries.dim) + " does not match dataset " +
                     std::to_string(ds.dim));
  GroundTruth gt;
  gt.ids.resize(queries.count());
  gt.dists.resize(queries.count());
  for (uint64_t q = 0; q < queries.count(); ++q) {
    auto out = brute_force_search(ds, queries.vec(q), f, k);
    gt.ids[q].reserve(out.hits.size());
    gt.dists[q].reserve(out.hits.size());
    for (const Neighbor& h : out.hits) {
      gt.ids[q].push_back(h.id);
      gt.dists[q].push_back(h.dist);
    }
  }
  return gt;
}

void save_ground_truth(const GroundTruth& gt, const std::string& path) {
  std::vector<uint8_t> b;
  for (const auto& row : gt.ids) {
    put_u32(b, uint32_t(row.size()));
    for (uint64_t id : row) {
      if (id > uint64_t(std::numeric_limits<int32_t>::max()))
        throw DataError("ground truth: id " + std::to_string(id) +
                        " does not fit the 32-bit record format");
      put_u32(b, uint32_t(id));
    }
  }
  write_bytes(path, b);
}

GroundTruth load_ground_truth(const std::string& path) {
  auto bytes = read_file(path, "ground truth file");
  if (bytes.size() % 4 != 0)
    throw DataError("ground truth file: size is not a multiple of 4");
  Cursor c{bytes, 0, "ground truth file"};
  GroundTruth gt;
  while (!c.done()) {
    int32_t n = c.i32();
    if (n < 0) throw DataError("ground truth file: negative row length");
    std::vector<uint64_t> row;
    row.reserve(size_t(n));
    for (int32_t i = 0; i < n; ++i) {
      int32_t id = c.i32();
      if (id < 0) throw DataError("ground truth file: negative id");
      row.push_back(uint64_t(id));
    }
    gt.ids.push_back(std::move(row));
  }
  return gt;
}

double recall_at_k(const std::vector<Neighbor>& hits,
                   const std::vector<uint64_t>& truth, uint32_t k) {
  size_t want = std::min<size_t>(truth.size(), k);
  if (want == 0) return 1.0;
  std::unordered_set<uint64_t> front;
  for (size_t i = 0; i < hits.size() && i < k; ++i) front.insert(hits[i].id);
  size_t found = 0;
  for (size_t i = 0; i < want; ++i) found += front.count(truth[i]);
  return double(found) / double(want);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::favor: return "favor";
    case Method::rsf: return "rsf";
    case Method::brute_force: return "brute_force";
    case Method::hnsw_unfiltered: return "hnsw_unfiltered";
  }
  throw UsageError("unknown method");
}

Method parse_method(const std::string& name) {
  if (name == "favor") return Method::favor;
  if (name == "rsf") return Method::rsf;
  if (name == "brute_force") return Method::brute_force;
  if (name == "hnsw_unfiltered") return Method::hnsw_unfiltered;
  throw UsageError("unknown method '" + name +
                   "' (expected favor, rsf, brute_force, or hnsw_unfiltered)");
}

namespace {

struct CellAccum {
  std::vector<QueryOutcome> outs;

  void finish(const GroundTruth& gt, uint32_t k, SweepRow& row) {
    double recall = 0, comps = 0, hops = 0, tdfrac = 0;
    double graph_n = 0, brute_n = 0;
    for (uint64_t q = 0; q < outs.size(); ++q) {
      const auto& o = outs[q];
      recall += recall_at_k(o.hits, gt.ids[q], k);
      comps += double(o.stats.dist_comps);
      hops += double(o.stats.hops);
      if (o.stats.hops > 0)
        tdfrac += double(o.stats.path_td) / double(o.stats.hops);
      (o.route == Route::graph ? graph_n : brute_n) += 1.0;
    }
    double n = double(outs.size());
    row.recall = recall / n;
    row.dist_comps = comps / n;
    row.hops = hops / n;
    row.td_path_frac = tdfrac / n;
    row.route_graph = graph_n / n;
    row.route_brute = brute_n / n;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  auto t1 = std::chrono::steady_clock::now();
  return std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9);
}

}  // namespace

std::vector<SweepRow> sweep(const HnswIndex& index, const VectorDataset& ds,
                            const VectorDataset& queries, const SweepSpec& spec,
                            const SearchParams& base_sp,
                            const SelectorConfig& cfg) {
  if (spec.filters.empty() || spec.efs.empty() || spec.methods.empty())
    throw UsageError("sweep: need at least one filter, ef, and method");
  if (spec.k == 0) throw UsageError("sweep: k must be positive");
  if (queries.count() == 0) throw UsageError("sweep: no queries");

  const uint64_t nq = queries.count();
  std::vector<SweepRow> rows;

  for (const auto& [fname, filter] : spec.filters) {
    GroundTruth gt = compute_ground_truth(ds, queries, filter, spec.k);

    for (uint32_t ef : spec.efs) {
      for (Method m : spec.methods) {
        SearchParams sp = base_sp;
        sp.ef = ef;
        sp.k = spec.k;

        auto one = [&](uint64_t qi, double p_hat,
                       Route favor_route) -> QueryOutcome {
          std::span<const float> q = queries.vec(qi);
          switch (m) {
            case Method::favor:
              if (favor_route == Route::brute_force) {
                auto o = brute_force_search(ds, q, filter, sp.k);
                o.p_hat = p_hat;
                return o;
              }
              return favor_search(index, ds, q, filter, sp, p_hat);
            case Method::rsf:
              return rsf_search(index, ds, q, filter, sp);
            case Method::brute_force:
              return brute_force_search(ds, q, filter, sp.k);
            case Method::hnsw_unfiltered:
              return hnsw_search(index, ds, q, sp);
          }
          throw UsageError("unknown method");
        };

        auto prepare = [&]() -> std::pair<double, Route> {
          if (m != Method::favor)
            return {std::numeric_limits<double>::quiet_NaN(), Route::graph};
          double p_hat = estimate_selectivity(filter, ds.attrs, cfg);
          return {p_hat, route(p_hat, cfg.lambda)};
        };

        uint64_t wu = std::min<uint64_t>(spec.warmup, nq);
        {
          auto [p_hat, r] = prepare();
          for (uint64_t qi = 0; qi < wu; ++qi) (void)one(qi, p_hat, r);
        }

        CellAccum acc;
        acc.outs.reserve(nq);
        auto t0 = std::chrono::steady_clock::now();
        auto [p_hat, r] = prepare();
        for (uint64_t qi = 0; qi < nq; ++qi)
          acc.outs.push_back(one(qi, p_hat, r));
        double secs = seconds_since(t0);

        SweepRow row;
        row.filter_name = fname;
        row.ef = ef;
        row.method = m;
        row.k = spec.k;
        row.n_queries = nq;
        row.qps = double(nq) / secs;
        row.p_hat = p_hat;
        acc.finish(gt, spec.k, row);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

namespace {

void csv_prelude(std::ostream& out, const std::vector<std::string>& lines) {
  for (const auto& l : lines) out << "# " << l << "\n";
}

}  // namespace

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows,
                     const std::vector<std::string>& header_lines) {
  csv_prelude(out, header_lines);
  auto flags = out.flags();
  auto prec = out.precision();
  out.precision(12);
  out << "filter,ef,method,k,n_queries,recall,qps,dist_comps,hops,"
         "td_path_frac,route_graph,route_brute,p_hat\n";
  for (const auto& r : rows) {
    out << r.filter_name << ',' << r.ef << ',' << method_name(r.method) << ','
        << r.k << ',' << r.n_queries << ',' << r.recall << ',' << r.qps << ','
        << r.dist_comps << ',' << r.hops << ',' << r.td_path_frac << ','
        << r.route_graph << ',' << r.route_brute << ',' << r.p_hat << '\n';
  }
  out.flags(flags);
  out.precision(prec);
}

std::string strategy_name(ExclusionStrategy s) {
  switch (s) {
    case ExclusionStrategy::d0: return "d0";
    case ExclusionStrategy::eq_mid: return "eq_mid";
    case ExclusionStrategy::d_max: return "d_max";
  }
  throw UsageError("unknown strategy");
}

std::vector<AblationRow> ablation_exclusion(
    const HnswIndex& index, const VectorDataset& ds,
    const VectorDataset& queries, const std::string& filter_name,
    const FilterCondition& f, const std::vector<uint32_t>& efs,
    const SearchParams& base_sp, const SelectorConfig& cfg) {
  if (efs.empty()) throw UsageError("ablation: need at least one ef");
  if (queries.count() == 0) throw UsageError("ablation: no queries");
  double p_hat = estimate_selectivity(f, ds.attrs, cfg);
  if (!(p_hat > 0.0))
    throw UsageError("ablation: the filter matches nothing in the sample");

  const uint64_t nq = queries.count();
  GroundTruth gt = compute_ground_truth(ds, queries, f, base_sp.k);

  // per-query oracle penalty: just enough to push every failing point
  // behind the farthest passing one
  auto oracle_excl = [&](std::span<const float> q, uint64_t* comps) {
    double max_td = 0.0;
    double min_ntd = std::numeric_limits<double>::infinity();
    for (uint64_t i = 0; i < ds.count(); ++i) {
      double d = euclidean(q, ds.vec(i));
      ++*comps;
      if (evaluate(f, ds.attrs, i))
        max_td = std::max(max_td, d);
      else
        min_ntd = std::min(min_ntd, d);
    }
    return std::max(0.0, max_td - min_ntd);
  };

  auto descend = [&](std::span<const float> q, SearchStats* stats) {
    uint64_t cur = index.entry_point;
    for (uint32_t layer = index.top_layer; layer >= 1; --layer) {
      SearchStats local;
      cur = greedy_search(index, ds, q, 1, cur, layer, &local).front().id;
      stats->dist_comps += local.dist_comps;
    }
    return cur;
  };

  std::vector<AblationRow> rows;
  for (ExclusionStrategy strat :
       {ExclusionStrategy::d0, ExclusionStrategy::eq_mid,
        ExclusionStrategy::d_max}) {
    for (uint32_t ef : efs) {
      SearchParams sp = base_sp;
      sp.ef = ef;
      double fixed = 0.0;
      if (strat == ExclusionStrategy::eq_mid)
        fixed = exclusion_distance(p_hat, ef, index.delta_d,
                                   sp.normalize_by_ef);

      std::vector<QueryOutcome> outs;
      outs.reserve(nq);
      double excl_sum = 0.0;
      auto t0 = std::chrono::steady_clock::now();
      for (uint64_t qi = 0; qi < nq; ++qi) {
        std::span<const float> q = queries.vec(qi);
        QueryOutcome o;
        o.route = Route::graph;
        o.p_hat = p_hat;
        o.requested_k = sp.k;
        double excl = fixed;
        if (strat == ExclusionStrategy::d_max)
          excl = oracle_excl(q, &o.stats.dist_comps);
        excl_sum += excl;
        uint64_t base = descend(q, &o.stats);
        auto pool =
            opti_greedy_search(index, ds, q, f, sp, base, excl, &o.stats);
        std::vector<Neighbor> td;
        for (const ScoredNode& s : pool)
          if (s.td) td.push_back({s.id, s.raw});
        std::sort(td.begin(), td.end(), nearer);
        if (td.size() > sp.k) td.resize(sp.k);
        o.hits = std::move(td);
        outs.push_back(std::move(o));
      }
      double secs = seconds_since(t0);

      AblationRow row;
      row.strategy = strat;
      row.filter_name = filter_name;
      row.ef = ef;
      row.k = sp.k;
      row.n_queries = nq;
      row.qps = double(nq) / secs;
      row.mean_excl = excl_sum / double(nq);
      double recall = 0, comps = 0;
      for (uint64_t qi = 0; qi < nq; ++qi) {
        recall += recall_at_k(outs[qi].hits, gt.ids[qi], sp.k);
        comps += double(outs[qi].stats.dist_comps);
      }
      row.recall = recall / double(nq);
      row.dist_comps = comps / double(nq);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows,
                        const std::vector<std::string>& header_lines) {
  csv_prelude(out, header_lines);
  auto flags = out.flags();
  auto prec = out.precision();
  out.precision(12);
  out << "strategy,filter,ef,k,n_queries,recall,qps,dist_comps,mean_excl\n";
  for (const auto& r : rows) {
    out << strategy_name(r.strategy) << ',' << r.filter_name << ',' << r.ef
        << ',' << r.k << ',' << r.n_queries << ',' << r.recall << ',' << r.qps
        << ',' << r.dist_comps << ',' << r.mean_excl << '\n';
  }
  out.flags(flags);
  out.precision(prec);
}

LinearModelReport verify_linear_model(const VectorDataset& ds,
                                      uint32_t n_anchors, uint32_t m_max,
                                      uint64_t seed) {
  if (n_anchors == 0) throw UsageError("linear check: need at least one anchor");
  if (m_max < 2) throw UsageError("linear check: need at least two ranks");
  if (ds.count() < 2)
    throw UsageError("linear check: need at least two points");

  uint64_t n = std::min<uint64_t>(n_anchors, ds.count());
  auto anchors = sample_indices(n, ds.count(), seed);

  LinearModelReport rep;
  std::vector<double> dists;
  dists.reserve(ds.count() - 1);
  for (uint64_t a : anchors) {
    dists.clear();
    for (uint64_t i = 0; i < ds.count(); ++i) {
      if (i == a) continue;
      dists.push_back(euclidean(ds.vec(a), ds.vec(i)));
    }
    size_t m = std::min<size_t>(m_max, dists.size());
    std::partial_sort(dists.begin(), dists.begin() + std::ptrdiff_t(m),
                      dists.end());

    double my = 0;
    for (size_t i = 0; i < m; ++i) my += dists[i];
    my /= double(m);
    double ss_tot = 0;
    for (size_t i = 0; i < m; ++i)
      ss_tot += (dists[i] - my) * (dists[i] - my);
    if (ss_tot == 0.0) {
      ++rep.degenerate;
      continue;
    }

    double mx = double(m + 1) / 2.0;  // mean of ranks 1..m
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < m; ++i) {
      double dx = double(i + 1) - mx;
      sxy += dx * (dists[i] - my);
      sxx += dx * dx;
    }
    double b = sxy / sxx;
    double a0 = my - b * mx;
    double ss_res = 0;
    for (size_t i = 0; i < m; ++i) {
      double e = dists[i] - (a0 + b * double(i + 1));
      ss_res += e * e;
    }
    rep.r2_per_anchor.push_back(1.0 - ss_res / ss_tot);
  }

  rep.anchors = uint32_t(rep.r2_per_anchor.size());
  if (rep.anchors > 0) {
    double mean = 0;
    for (double r : rep.r2_per_anchor) mean += r;
    mean /= double(rep.anchors);
    double var = 0;
    for (double r : rep.r2_per_anchor) var += (r - mean) * (r - mean);
    var /= double(rep.anchors);
    rep.mean_r2 = mean;
    rep.std_r2 = std::sqrt(var);
  }
  return rep;
}

}  // namespace favor

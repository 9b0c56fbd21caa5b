#include "favor/graph.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "favor/search.hpp"

namespace favor {

double delta_d_contribution(std::span<const double> sorted_dists,
                            uint32_t alpha_rank, uint32_t beta_rank) {
  if (alpha_rank < 1 || alpha_rank >= beta_rank)
    throw UsageError("delta_d_contribution: need 1 <= alpha < beta");
  if (beta_rank > sorted_dists.size())
    throw UsageError("delta_d_contribution: candidate list has " +
                     std::to_string(sorted_dists.size()) +
                     " entries, beta rank is " + std::to_string(beta_rank));
  return (sorted_dists[beta_rank - 1] - sorted_dists[alpha_rank - 1]) /
         double(beta_rank - alpha_rank);
}

std::vector<uint32_t> select_neighbors_heuristic(
    const VectorDataset& ds, std::span<const float> base,
    const std::vector<Neighbor>& candidates, uint32_t max_kept) {
  std::vector<uint32_t> kept;
  for (const Neighbor& c : candidates) {
    if (kept.size() >= max_kept) break;
    bool diverse = true;
    for (uint32_t r : kept) {
      if (euclidean(ds.vec(c.id), ds.vec(r)) < c.dist) {
        diverse = false;
        break;
      }
    }
    if (diverse) kept.push_back(uint32_t(c.id));
  }
  (void)base;
  return kept;
}

namespace {

BuildParams resolve(const VectorDataset& ds, const BuildParams& in) {
  if (in.m < 2) throw UsageError("build: m must be at least 2");
  if (in.efc < 1) throw UsageError("build: efc must be at least 1");
  if (in.level_norm < 0) throw UsageError("build: level_norm must be >= 0");
  BuildParams p = in;
  if (p.level_norm == 0.0) p.level_norm = 1.0 / std::log(double(p.m));
  if (p.beta_rank == 0) p.beta_rank = p.efc;
  if (p.alpha_rank < 1 || p.alpha_rank >= p.beta_rank)
    throw UsageError("build: need 1 <= alpha_rank < beta_rank");
  if (p.beta_rank > p.efc)
    throw UsageError("build: beta_rank cannot exceed efc");
  if (ds.count() == 0) throw DataError("build: empty dataset");
  if (ds.dim == 0) throw DataError("build: zero-dimensional dataset");
  if (ds.attrs.count != 0 && ds.attrs.count != ds.count())
    throw DataError("build: attribute table has " +
                    std::to_string(ds.attrs.count) + " records for " +
                    std::to_string(ds.count()) + " vectors");
  return p;
}

void reprune(const VectorDataset& ds, HnswIndex& idx, uint32_t node,
             uint32_t layer, uint32_t cap) {
  auto& list = idx.links[node][layer];
  std::vector<Neighbor> cands;
  cands.reserve(list.size());
  for (uint32_t x : list) cands.push_back({x, euclidean(ds.vec(node), ds.vec(x))});
  std::sort(cands.begin(), cands.end(), nearer);
  list = select_neighbors_heuristic(ds, ds.vec(node), cands, cap);
}

}  // namespace

HnswIndex build_index(const VectorDataset& ds, const BuildParams& params) {
  BuildParams p = resolve(ds, params);
  const uint64_t n = ds.count();

  HnswIndex idx;
  idx.dim = ds.dim;
  idx.count = n;
  idx.params = p;
  idx.levels.resize(n);
  idx.links.resize(n);

  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double delta_sum = 0.0;
  uint64_t delta_cnt = 0;

  for (uint64_t i = 0; i < n; ++i) {
    double u = 1.0 - unif(rng);  // (0, 1]
    uint32_t level = uint32_t(std::floor(-std::log(u) * p.level_norm));
    idx.levels[i] = level;
    idx.links[i].assign(level + 1, {});

    if (i == 0) {
      idx.entry_point = 0;
      idx.top_layer = level;
      continue;
    }

    std::span<const float> q = ds.vec(i);
    uint64_t cur = idx.entry_point;
    for (uint32_t layer = idx.top_layer; layer > level; --layer)
      cur = greedy_search(idx, ds, q, 1, cur, layer).front().id;

    for (int32_t layer = int32_t(std::min(level, idx.top_layer)); layer >= 0;
         --layer) {
      auto cands = greedy_search(idx, ds, q, p.efc, cur, uint32_t(layer));

      if (layer == 0 && cands.size() >= p.beta_rank) {
        std::vector<double> dists(cands.size());
        for (size_t c = 0; c < cands.size(); ++c) dists[c] = cands[c].dist;
        delta_sum += delta_d_contribution(dists, p.alpha_rank, p.beta_rank);
        ++delta_cnt;
      }

      auto kept = select_neighbors_heuristic(ds, q, cands, p.m);
      uint32_t cap = layer == 0 ? 2 * p.m : p.m;
      for (uint32_t nb : kept) {
        idx.links[i][layer].push_back(nb);
        auto& back = idx.links[nb][layer];
        back.push_back(uint32_t(i));
        if (back.size() > cap) reprune(ds, idx, nb, uint32_t(layer), cap);
      }
      cur = cands.front().id;
    }

    if (level > idx.top_layer) {
      idx.top_layer = level;
      idx.entry_point = i;
    }
  }

  if (delta_cnt > 0) {
    double delta = delta_sum / double(delta_cnt);
    if (!(delta > 0.0))
      throw DataError(
          "build: degenerate distance distribution, the rank spacing "
          "statistic is zero (all points coincide?)");
    idx.delta_d = delta;
  } else if (n >= p.beta_rank) {
    throw DataError(
        "build: no construction candidate list reached rank " +
        std::to_string(p.beta_rank) +
        "; use a larger dataset or a smaller beta_rank");
  }
  return idx;
}

// ---------------------------------------------------------------------------
// snapshot format, little-endian throughout:
//   "FVRX" | version u32 | dim u32 | count u64 | m u32 | efc u32
//   | top_layer u32 | entry_point u64 | delta_d f64 | alpha_rank u32
//   | beta_rank u32 | seed u64
//   | per node: level u32
//   | per layer 0..top_layer, per member node in id order:
//       neighbor count u32, then each neighbor id as u64
//   | crc32 of everything above, u32

namespace {

constexpr char kMagic[4] = {'F', 'V', 'R', 'X'};
constexpr uint32_t kVersion = 1;

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(uint8_t(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& b, uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(uint8_t(v >> (8 * i)));
}

void put_f64(std::vector<uint8_t>& b, double v) {
  put_u64(b, std::bit_cast<uint64_t>(v));
}

struct Cursor {
  const std::vector<uint8_t>& b;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > b.size())
      throw DataError("index file truncated mid-record");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(b[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(b[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
};

uint32_t crc_of(const uint8_t* data, size_t n) {
  uLong c = crc32(0L, Z_NULL, 0);
  c = crc32(c, data, uInt(n));
  return uint32_t(c);
}

}  // namespace

void save_index(const HnswIndex& index, const std::string& path) {
  std::vector<uint8_t> buf;
  buf.insert(buf.end(), kMagic, kMagic + 4);
  put_u32(buf, kVersion);
  put_u32(buf, index.dim);
  put_u64(buf, index.count);
  put_u32(buf, index.params.m);
  put_u32(buf, index.params.efc);
  put_u32(buf, index.top_layer);
  put_u64(buf, index.entry_point);
  put_f64(buf, index.delta_d);
  put_u32(buf, index.params.alpha_rank);
  put_u32(buf, index.params.beta_rank);
  put_u64(buf, index.params.seed);
  for (uint64_t i = 0; i < index.count; ++i) put_u32(buf, index.levels[i]);
  for (uint32_t layer = 0; layer <= index.top_layer && index.count > 0;
       ++layer) {
    for (uint64_t i = 0; i < index.count; ++i) {
      if (index.levels[i] < layer) continue;
      const auto& ns = index.links[i][layer];
      put_u32(buf, uint32_t(ns.size()));
      for (uint32_t nb : ns) put_u64(buf, nb);
    }
  }
  put_u32(buf, crc_of(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(buf.data()),
            std::streamsize(buf.size()));
  if (!out) throw DataError("write failed for '" + path + "'");
}

HnswIndex load_index(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open index file '" + path + "'");
  std::vector<uint8_t> buf{std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>()};

  if (buf.size() < 4 + 4 + 4) throw DataError("index file too short");
  if (std::memcmp(buf.data(), kMagic, 4) != 0)
    throw DataError("'" + path + "' is not an index file (bad magic)");

  uint32_t stored_crc = 0;
  for (int i = 0; i < 4; ++i)
    stored_crc |= uint32_t(buf[buf.size() - 4 + i]) << (8 * i);
  if (crc_of(buf.data(), buf.size() - 4) != stored_crc)
    throw DataError("index file '" + path +
                    "' failed its checksum (corrupt or truncated)");

  Cursor c{buf};
  c.pos = 4;
  uint32_t version = c.u32();
  if (version != kVersion)
    throw DataError("unsupported index file version " +
                    std::to_string(version));

  HnswIndex idx;
  idx.dim = c.u32();
  idx.count = c.u64();
  idx.params.m = c.u32();
  idx.params.efc = c.u32();
  idx.top_layer = c.u32();
  idx.entry_point = c.u64();
  idx.delta_d = c.f64();
  idx.params.alpha_rank = c.u32();
  idx.params.beta_rank = c.u32();
  idx.params.seed = c.u64();
  idx.params.level_norm = idx.params.m >= 2
                              ? 1.0 / std::log(double(idx.params.m))
                              : 0.0;

  if (idx.count > 0 && idx.entry_point >= idx.count)
    throw DataError("index file: entry point out of range");

  idx.levels.resize(idx.count);
  for (uint64_t i = 0; i < idx.count; ++i) {
    idx.levels[i] = c.u32();
    if (idx.levels[i] > idx.top_layer)
      throw DataError("index file: node level above the top layer");
  }
  idx.links.resize(idx.count);
  for (uint64_t i = 0; i < idx.count; ++i)
    idx.links[i].resize(idx.levels[i] + 1);
  for (uint32_t layer = 0; layer <= idx.top_layer && idx.count > 0; ++layer) {
    for (uint64_t i = 0; i < idx.count; ++i) {
      if (idx.levels[i] < layer) continue;
      uint32_t cnt = c.u32();
      auto& ns = idx.links[i][layer];
      ns.resize(cnt);
      for (uint32_t j = 0; j < cnt; ++j) {
        uint64_t nb = c.u64();
        if (nb >= idx.count)
          throw DataError("index file: neighbor id out of range");
        ns[j] = uint32_t(nb);
      }
    }
  }
  if (c.pos != buf.size() - 4)
    throw DataError("index file has trailing bytes");
  return idx;
}

}  // namespace favor

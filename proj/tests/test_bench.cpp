#include "favor/bench.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

using favor::AttributeTable;
using favor::DataError;
using favor::Method;
using favor::UsageError;
using favor::VecFormat;
using FC = favor::FilterCondition;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void put_i32(std::vector<uint8_t>& b, int32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(uint8_t(uint32_t(v) >> (8 * i)));
}

void put_f32(std::vector<uint8_t>& b, float v) {
  put_i32(b, int32_t(std::bit_cast<uint32_t>(v)));
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
}

std::vector<uint8_t> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct BenchWorld {
  favor::VectorDataset ds;
  favor::VectorDataset queries;
  favor::HnswIndex idx;
  FC half = FC::bool_eq(0, true);

  BenchWorld() {
    ds = oracle::uniform_vectors(800, 8, 51);
    ds.attrs = oracle::uniform_attrs(800, {1, 2, 1}, 52);
    queries = oracle::uniform_vectors(60, 8, 53);
    favor::BuildParams bp;
    bp.m = 8;
    bp.efc = 40;
    bp.seed = 6;
    idx = favor::build_index(ds, bp);
  }
};

const BenchWorld& bw() {
  static BenchWorld w;
  return w;
}

}  // namespace

TEST_CASE("vector format names") {
  CHECK(favor::parse_vec_format("fvecs") == VecFormat::fvecs);
  CHECK(favor::parse_vec_format("bvecs") == VecFormat::bvecs);
  CHECK(favor::parse_vec_format("raw_f32") == VecFormat::raw_f32);
  CHECK_THROWS_AS(favor::parse_vec_format("hdf5"), UsageError);
}

TEST_CASE("fvecs ingestion") {
  std::vector<uint8_t> b;
  put_i32(b, 3);
  put_f32(b, 1.5f);
  put_f32(b, -2.0f);
  put_f32(b, 0.25f);
  put_i32(b, 3);
  put_f32(b, 4.0f);
  put_f32(b, 5.0f);
  put_f32(b, 6.0f);
  auto path = tmp_path("ingest.fvecs");
  write_file(path, b);

  auto ds = favor::ingest_vectors(path, VecFormat::fvecs);
  CHECK(ds.dim == 3);
  REQUIRE(ds.count() == 2);
  CHECK(ds.data == std::vector<float>{1.5f, -2.0f, 0.25f, 4.0f, 5.0f, 6.0f});

  SUBCASE("dimension change between records") {
    put_i32(b, 2);
    put_f32(b, 0.0f);
    put_f32(b, 0.0f);
    write_file(path, b);
    CHECK_THROWS_WITH_AS(favor::ingest_vectors(path, VecFormat::fvecs),
                         doctest::Contains("record 2"), DataError);
  }
  SUBCASE("truncated payload") {
    b.resize(b.size() - 4);
    write_file(path, b);
    CHECK_THROWS_AS(favor::ingest_vectors(path, VecFormat::fvecs), DataError);
  }
  SUBCASE("non-finite value") {
    std::vector<uint8_t> c;
    put_i32(c, 2);
    put_f32(c, 1.0f);
    put_f32(c, std::numeric_limits<float>::infinity());
    write_file(path, c);
    CHECK_THROWS_WITH_AS(favor::ingest_vectors(path, VecFormat::fvecs),
                         doctest::Contains("record 0"), DataError);
  }
  SUBCASE("non-positive dimension") {
    std::vector<uint8_t> c;
    put_i32(c, 0);
    write_file(path, c);
    CHECK_THROWS_AS(favor::ingest_vectors(path, VecFormat::fvecs), DataError);
  }
  SUBCASE("empty file") {
    write_file(path, {});
    CHECK_THROWS_AS(favor::ingest_vectors(path, VecFormat::fvecs), DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(favor::ingest_vectors(tmp_path("no_such.fvecs"),
                                          VecFormat::fvecs),
                    DataError);
  }
}

TEST_CASE("bvecs ingestion widens bytes to floats") {
  std::vector<uint8_t> b;
  put_i32(b, 4);
  b.insert(b.end(), {0, 1, 128, 255});
  put_i32(b, 4);
  b.insert(b.end(), {10, 20, 30, 40});
  auto path = tmp_path("ingest.bvecs");
  write_file(path, b);

  auto ds = favor::ingest_vectors(path, VecFormat::bvecs);
  CHECK(ds.dim == 4);
  REQUIRE(ds.count() == 2);
  CHECK(ds.data ==
        std::vector<float>{0.f, 1.f, 128.f, 255.f, 10.f, 20.f, 30.f, 40.f});
}

TEST_CASE("raw_f32 ingestion") {
  std::vector<uint8_t> b;
  put_i32(b, 2);  // dimension header
  put_f32(b, 1.0f);
  put_f32(b, 2.0f);
  put_f32(b, 3.0f);
  put_f32(b, 4.0f);
  put_f32(b, 5.0f);
  put_f32(b, 6.0f);
  auto path = tmp_path("ingest.raw");
  write_file(path, b);

  auto ds = favor::ingest_vectors(path, VecFormat::raw_f32);
  CHECK(ds.dim == 2);
  REQUIRE(ds.count() == 3);
  CHECK(ds.data == std::vector<float>{1, 2, 3, 4, 5, 6});

  SUBCASE("payload not a multiple of the dimension") {
    put_f32(b, 7.0f);
    write_file(path, b);
    CHECK_THROWS_AS(favor::ingest_vectors(path, VecFormat::raw_f32), DataError);
  }
}

TEST_CASE("synthesized attributes are deterministic with sane marginals") {
  favor::AttributeSchema schema{2, 2, 2};
  auto a = favor::synthesize_attributes(20000, schema, 9);
  auto b = favor::synthesize_attributes(20000, schema, 9);
  CHECK(a.bools == b.bools);
  CHECK(a.ints == b.ints);
  CHECK(a.floats == b.floats);
  CHECK(a.count == 20000);
  CHECK(a.bools.size() == 40000);
  CHECK(a.ints.size() == 40000);
  CHECK(a.floats.size() == 40000);

  auto c = favor::synthesize_attributes(20000, schema, 10);
  CHECK(a.bools != c.bools);

  double bool_mean = 0;
  for (auto v : a.bools) bool_mean += v;
  bool_mean /= double(a.bools.size());
  CHECK(bool_mean > 0.48);
  CHECK(bool_mean < 0.52);

  std::vector<uint64_t> digit_counts(10, 0);
  for (auto v : a.ints) {
    REQUIRE(v >= 0);
    REQUIRE(v <= 9);
    ++digit_counts[size_t(v)];
  }
  for (auto cnt : digit_counts) {
    double frac = double(cnt) / double(a.ints.size());
    CHECK(frac > 0.08);
    CHECK(frac < 0.12);
  }

  double fmean = 0;
  for (auto v : a.floats) {
    REQUIRE(v >= 0.0f);
    REQUIRE(v <= 100.0f);
    fmean += v;
  }
  fmean /= double(a.floats.size());
  CHECK(fmean > 48.0);
  CHECK(fmean < 52.0);
}

TEST_CASE("attribute snapshot round-trip") {
  auto attrs = oracle::uniform_attrs(500, {2, 1, 3}, 13);
  auto path = tmp_path("attrs.bin");
  favor::save_attributes(attrs, path);

  auto back = favor::load_attributes(path);
  CHECK(back.count == attrs.count);
  CHECK(back.schema.n_bool == attrs.schema.n_bool);
  CHECK(back.schema.n_int == attrs.schema.n_int);
  CHECK(back.schema.n_float == attrs.schema.n_float);
  CHECK(back.bools == attrs.bools);
  CHECK(back.ints == attrs.ints);
  CHECK(back.floats == attrs.floats);

  auto bytes = slurp(path);
  SUBCASE("flipped byte fails the checksum") {
    bytes[bytes.size() / 2] ^= 0x10;
    write_file(path, bytes);
    CHECK_THROWS_WITH_AS(favor::load_attributes(path),
                         doctest::Contains("checksum"), DataError);
  }
  SUBCASE("truncation is caught") {
    bytes.resize(bytes.size() - 9);
    write_file(path, bytes);
    CHECK_THROWS_AS(favor::load_attributes(path), DataError);
  }
  SUBCASE("wrong magic is rejected") {
    bytes[0] = 'Z';
    write_file(path, bytes);
    CHECK_THROWS_AS(favor::load_attributes(path), DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(favor::load_attributes(tmp_path("no_such.attrs")),
                    DataError);
  }
}

TEST_CASE("ground truth matches the exhaustive oracle") {
  const auto& w = bw();
  auto gt = favor::compute_ground_truth(w.ds, w.queries, w.half, 10);
  REQUIRE(gt.ids.size() == w.queries.count());
  REQUIRE(gt.dists.size() == w.queries.count());
  for (uint64_t q = 0; q < w.queries.count(); ++q) {
    auto ref = oracle::knn_ref(w.ds, w.queries.vec(q), 10, &w.half);
    REQUIRE(gt.ids[q].size() == ref.size());
    for (size_t i = 0; i < ref.size(); ++i) {
      CHECK(gt.ids[q][i] == ref[i].id);
      CHECK(gt.dists[q][i] == ref[i].dist);
    }
  }

  SUBCASE("unsatisfiable filter yields empty rows") {
    FC none = FC::all_of({FC::bool_eq(0, true), FC::bool_eq(0, false)});
    auto empty_gt = favor::compute_ground_truth(w.ds, w.queries, none, 10);
    for (const auto& row : empty_gt.ids) CHECK(row.empty());
  }
  SUBCASE("scarce filter yields short rows") {
    FC rare = FC::all_of({FC::int_eq(0, 3), FC::int_eq(1, 3)});
    uint64_t matching = 0;
    for (uint64_t i = 0; i < w.ds.count(); ++i)
      if (favor::evaluate(rare, w.ds.attrs, i)) ++matching;
    REQUIRE(matching > 0);
    REQUIRE(matching < 50);
    auto short_gt = favor::compute_ground_truth(w.ds, w.queries, rare, 50);
    for (const auto& row : short_gt.ids) CHECK(row.size() == matching);
  }
}

TEST_CASE("ground truth snapshot keeps ids and drops distances") {
  const auto& w = bw();
  auto gt = favor::compute_ground_truth(w.ds, w.queries, w.half, 5);
  auto path = tmp_path("gt.ivecs");
  favor::save_ground_truth(gt, path);
  auto back = favor::load_ground_truth(path);
  CHECK(back.ids == gt.ids);
  CHECK(back.dists.empty());

  SUBCASE("odd trailing bytes are rejected") {
    auto bytes = slurp(path);
    bytes.push_back(0x7);
    write_file(path, bytes);
    CHECK_THROWS_AS(favor::load_ground_truth(path), DataError);
  }
}

TEST_CASE("recall against a truth row") {
  using favor::Neighbor;
  std::vector<Neighbor> hits = {{1, 0.1}, {2, 0.2}, {3, 0.3}};
  CHECK(favor::recall_at_k(hits, {1, 2, 3}, 3) == 1.0);
  CHECK(favor::recall_at_k(hits, {1, 2, 9}, 3) == doctest::Approx(2.0 / 3));
  CHECK(favor::recall_at_k({}, {1, 2, 3}, 3) == 0.0);
  CHECK(favor::recall_at_k(hits, {}, 3) == 1.0);  // nothing to find
  // only the front k of the returned list counts
  std::vector<Neighbor> four = {{5, 0.1}, {1, 0.2}, {2, 0.3}, {3, 0.4}};
  CHECK(favor::recall_at_k(four, {1, 2, 3}, 3) == doctest::Approx(2.0 / 3));
  // short truth rows use their own size as the denominator
  CHECK(favor::recall_at_k(hits, {2}, 3) == 1.0);
}

TEST_CASE("method names round-trip") {
  for (Method m : {Method::favor, Method::rsf, Method::brute_force,
                   Method::hnsw_unfiltered})
    CHECK(favor::parse_method(favor::method_name(m)) == m);
  CHECK_THROWS_AS(favor::parse_method("annoy"), UsageError);
}

TEST_CASE("rank spacing linearity check on crafted data") {
  SUBCASE("three collinear points give an exact fit or a degenerate anchor") {
    auto ds = oracle::grid_1d(3);
    auto rep = favor::verify_linear_model(ds, 3, 10, 1);
    CHECK(rep.anchors == 2);
    CHECK(rep.degenerate == 1);  // middle point sees distances {1, 1}
    CHECK(rep.mean_r2 == 1.0);
    CHECK(rep.std_r2 == 0.0);
  }
  SUBCASE("coincident points are all degenerate") {
    favor::VectorDataset ds;
    ds.dim = 2;
    ds.data.assign(100, 0.5f);
    auto rep = favor::verify_linear_model(ds, 20, 10, 1);
    CHECK(rep.anchors == 0);
    CHECK(rep.degenerate == 20);
    CHECK(rep.mean_r2 == 0.0);
  }
  SUBCASE("uniform data fits well") {
    auto ds = oracle::uniform_vectors(2000, 16, 77);
    auto rep = favor::verify_linear_model(ds, 30, 100, 2);
    CHECK(rep.anchors == 30);
    CHECK(rep.degenerate == 0);
    CHECK(rep.r2_per_anchor.size() == 30);
    CHECK(rep.mean_r2 > 0.6);
    CHECK(rep.mean_r2 <= 1.0);
    for (double r2 : rep.r2_per_anchor) CHECK(r2 <= 1.0);
  }
  SUBCASE("per-anchor values match the oracle fit") {
    auto ds = oracle::uniform_vectors(300, 4, 78);
    auto rep = favor::verify_linear_model(ds, 300, 50, 3);
    REQUIRE(rep.anchors == 300);  // every point sampled once
    // spot-check a few anchors against the reference OLS; sampling order
    // is unknown so compare sorted values
    std::vector<double> want;
    for (uint64_t a = 0; a < 300; ++a) {
      auto dists = oracle::neighbor_dists_ref(ds, a);
      dists.resize(50);
      std::vector<double> xs(50);
      for (size_t i = 0; i < 50; ++i) xs[i] = double(i + 1);
      want.push_back(oracle::r2_ref(xs, dists));
    }
    auto got = rep.r2_per_anchor;
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    for (size_t i = 0; i < want.size(); ++i)
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-9));
  }
  SUBCASE("parameter validation") {
    auto ds = oracle::grid_1d(10);
    CHECK_THROWS_AS(favor::verify_linear_model(ds, 0, 10, 1), UsageError);
    CHECK_THROWS_AS(favor::verify_linear_model(ds, 2, 1, 1), UsageError);
  }
}

TEST_CASE("sweep grid over a small world") {
  const auto& w = bw();
  favor::SweepSpec spec;
  spec.filters = {{"half", w.half}};
  spec.efs = {32, 64};
  spec.methods = {Method::favor, Method::rsf, Method::brute_force,
                  Method::hnsw_unfiltered};
  spec.k = 10;
  spec.warmup = 5;
  favor::SearchParams sp;
  favor::SelectorConfig cfg;

  auto rows = favor::sweep(w.idx, w.ds, w.queries, spec, sp, cfg);
  REQUIRE(rows.size() == 2 * 4);

  auto find_row = [&](uint32_t ef, Method m) -> const favor::SweepRow& {
    for (const auto& r : rows)
      if (r.ef == ef && r.method == m) return r;
    REQUIRE(false);
    return rows.front();
  };

  for (const auto& r : rows) {
    CHECK(r.filter_name == "half");
    CHECK(r.k == 10);
    CHECK(r.n_queries == w.queries.count());
    CHECK(r.recall >= 0.0);
    CHECK(r.recall <= 1.0);
    CHECK(r.qps > 0.0);
    CHECK(r.dist_comps > 0.0);
  }

  const auto& brute32 = find_row(32, Method::brute_force);
  CHECK(brute32.recall == 1.0);
  CHECK(brute32.route_brute == 1.0);
  CHECK(brute32.route_graph == 0.0);
  CHECK(brute32.hops == 0.0);
  uint64_t matching = 0;
  for (uint64_t i = 0; i < w.ds.count(); ++i)
    if (favor::evaluate(w.half, w.ds.attrs, i)) ++matching;
  CHECK(brute32.dist_comps == double(matching));
  CHECK(std::isnan(brute32.p_hat));

  const auto& favor64 = find_row(64, Method::favor);
  CHECK(favor64.route_graph == 1.0);
  CHECK(favor64.recall > 0.85);
  CHECK(favor64.p_hat > 0.3);
  CHECK(favor64.p_hat < 0.7);
  CHECK(favor64.td_path_frac > 0.0);
  CHECK(favor64.hops > 0.0);

  const auto& rsf64 = find_row(64, Method::rsf);
  CHECK(rsf64.recall > 0.7);
  CHECK(std::isnan(rsf64.p_hat));

  // unfiltered search scored against filtered truth misses the
  // non-matching half of its answers
  const auto& plain64 = find_row(64, Method::hnsw_unfiltered);
  CHECK(plain64.recall < favor64.recall);
  CHECK(plain64.recall < 0.8);

  // everything except wall-clock timing is reproducible
  auto again = favor::sweep(w.idx, w.ds, w.queries, spec, sp, cfg);
  REQUIRE(again.size() == rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(again[i].recall == rows[i].recall);
    CHECK(again[i].dist_comps == rows[i].dist_comps);
    CHECK(again[i].hops == rows[i].hops);
    CHECK(again[i].td_path_frac == rows[i].td_path_frac);
    CHECK(again[i].route_graph == rows[i].route_graph);
    CHECK(again[i].route_brute == rows[i].route_brute);
    bool both_nan = std::isnan(again[i].p_hat) && std::isnan(rows[i].p_hat);
    CHECK((both_nan || again[i].p_hat == rows[i].p_hat));
  }
}

TEST_CASE("sweep routes a vanishing filter to the scan") {
  const auto& w = bw();
  favor::SweepSpec spec;
  spec.filters = {{"none", FC::all_of({FC::bool_eq(0, true),
                                       FC::bool_eq(0, false)})}};
  spec.efs = {32};
  spec.methods = {Method::favor};
  favor::SearchParams sp;
  favor::SelectorConfig cfg;
  auto rows = favor::sweep(w.idx, w.ds, w.queries, spec, sp, cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].route_brute == 1.0);
  CHECK(rows[0].route_graph == 0.0);
  CHECK(rows[0].recall == 1.0);  // empty truth rows count as found
  CHECK(rows[0].p_hat == 0.0);
}

TEST_CASE("sweep csv layout") {
  favor::SweepRow row;
  row.filter_name = "half";
  row.ef = 64;
  row.method = Method::favor;
  row.k = 10;
  row.n_queries = 60;
  row.recall = 0.975;
  row.qps = 1234.5;
  row.dist_comps = 321.25;
  row.hops = 40.5;
  row.td_path_frac = 0.5;
  row.route_graph = 1.0;
  row.route_brute = 0.0;
  row.p_hat = 0.483;

  std::ostringstream out;
  favor::write_sweep_csv(out, {row}, {"index: abc.fvrx crc32=deadbeef"});
  std::istringstream in(out.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "# index: abc.fvrx crc32=deadbeef");
  REQUIRE(std::getline(in, line));
  CHECK(line ==
        "filter,ef,method,k,n_queries,recall,qps,dist_comps,hops,"
        "td_path_frac,route_graph,route_brute,p_hat");
  REQUIRE(std::getline(in, line));
  CHECK(line.substr(0, 14) == "half,64,favor,");
  size_t commas = 0;
  for (char ch : line) commas += ch == ',';
  CHECK(commas == 12);

  favor::SweepRow nanrow = row;
  nanrow.method = Method::rsf;
  nanrow.p_hat = std::numeric_limits<double>::quiet_NaN();
  std::ostringstream out2;
  favor::write_sweep_csv(out2, {nanrow}, {});
  CHECK(out2.str().find(",nan") != std::string::npos);
}

TEST_CASE("exclusion ablation covers the three strategies") {
  const auto& w = bw();
  favor::SearchParams sp;
  favor::SelectorConfig cfg;
  auto rows = favor::ablation_exclusion(w.idx, w.ds, w.queries, "half", w.half,
                                        {32, 64}, sp, cfg);
  REQUIRE(rows.size() == 3 * 2);

  using ES = favor::ExclusionStrategy;
  auto find_row = [&](ES s, uint32_t ef) -> const favor::AblationRow& {
    for (const auto& r : rows)
      if (r.strategy == s && r.ef == ef) return r;
    REQUIRE(false);
    return rows.front();
  };

  for (const auto& r : rows) {
    CHECK(r.filter_name == "half");
    CHECK(r.n_queries == w.queries.count());
    CHECK(r.recall >= 0.0);
    CHECK(r.recall <= 1.0);
    CHECK(r.qps > 0.0);
    CHECK(r.mean_excl >= 0.0);
  }

  CHECK(find_row(ES::d0, 64).mean_excl == 0.0);

  double p_hat = favor::estimate_selectivity(w.half, w.ds.attrs, cfg);
  double want =
      favor::exclusion_distance(p_hat, 64, w.idx.delta_d, sp.normalize_by_ef);
  CHECK(find_row(ES::eq_mid, 64).mean_excl == doctest::Approx(want));
  CHECK(find_row(ES::d_max, 64).mean_excl > 0.0);

  CHECK(favor::strategy_name(ES::d0) == "d0");
  CHECK(favor::strategy_name(ES::eq_mid) == "eq_mid");
  CHECK(favor::strategy_name(ES::d_max) == "d_max");

  std::ostringstream csv;
  favor::write_ablation_csv(csv, rows, {"note"});
  std::istringstream in(csv.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "# note");
  REQUIRE(std::getline(in, line));
  CHECK(line ==
        "strategy,filter,ef,k,n_queries,recall,qps,dist_comps,mean_excl");
}

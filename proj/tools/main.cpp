// Command line front end. One subcommand per workflow step; exit codes:
// 0 ok, 2 usage error, 3 data or file format error, 4 internal failure.
#include <zlib.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "favor/bench.hpp"
#include "favor/filters.hpp"
#include "favor/graph.hpp"
#include "favor/search.hpp"
#include "favor/selector.hpp"

namespace {

favor::VectorDataset load_dataset(const std::string& vectors,
                                  const std::string& format,
                                  const std::string& attrs_path) {
  auto ds = favor::ingest_vectors(vectors, favor::parse_vec_format(format));
  if (!attrs_path.empty()) {
    ds.attrs = favor::load_attributes(attrs_path);
    if (ds.attrs.count != ds.count())
      throw favor::DataError(
          "attribute table has " + std::to_string(ds.attrs.count) +
          " records but the dataset has " + std::to_string(ds.count()));
  }
  return ds;
}

uint32_t file_crc32(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw favor::DataError("cannot open '" + path + "'");
  uLong c = crc32(0L, Z_NULL, 0);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    c = crc32(c, reinterpret_cast<const Bytef*>(buf), uInt(in.gcount()));
  return uint32_t(c);
}

std::string crc_line(const std::string& index_path) {
  char line[512];
  std::snprintf(line, sizeof line, "index: %s crc32=%08x", index_path.c_str(),
                file_crc32(index_path));
  return line;
}

// filters file: one `name  expression` per line, # starts a comment
std::vector<std::pair<std::string, favor::FilterCondition>> load_filters(
    const std::string& path, const favor::AttributeSchema& schema) {
  std::ifstream in(path);
  if (!in) throw favor::DataError("cannot open filters file '" + path + "'");
  std::vector<std::pair<std::string, favor::FilterCondition>> out;
  std::string line;
  uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;
    size_t split = line.find_first_of(" \t", start);
    if (split == std::string::npos)
      throw favor::DataError("filters file line " + std::to_string(lineno) +
                             ": expected `name expression`");
    std::string name = line.substr(start, split - start);
    std::string expr = line.substr(split);
    try {
      auto f = favor::parse_filter(expr);
      favor::validate_filter(f, schema);
      out.emplace_back(std::move(name), std::move(f));
    } catch (const favor::UsageError& e) {
      throw favor::DataError("filters file line " + std::to_string(lineno) +
                             ": " + e.what());
    }
  }
  if (out.empty())
    throw favor::DataError("filters file '" + path + "' defines no filters");
  return out;
}

std::string join_ids(const std::vector<favor::Neighbor>& hits) {
  std::string s;
  for (size_t i = 0; i < hits.size(); ++i) {
    if (i) s.push_back(';');
    s += std::to_string(hits[i].id);
  }
  return s;
}

int run(int argc, char** argv) {
  CLI::App app{"selectivity-aware filtered vector search"};
  app.require_subcommand(1);

  // ---- build ----
  auto* build = app.add_subcommand("build", "index a vector file");
  struct {
    std::string vectors, format = "fvecs", attrs, out;
    favor::BuildParams bp;
  } b;
  build->add_option("--vectors", b.vectors, "vector file")->required();
  build->add_option("--format", b.format, "fvecs, bvecs, or raw_f32");
  build->add_option("--attrs", b.attrs, "attribute table (.fvra)");
  build->add_option("--out", b.out, "index output path")->required();
  build->add_option("--m", b.bp.m, "neighbors per node, 2x on the base layer");
  build->add_option("--efc", b.bp.efc, "construction beam width");
  build->add_option("--seed", b.bp.seed, "level-sampling seed");
  build->add_option("--alpha", b.bp.alpha_rank,
                    "lower rank for the density statistic");
  build->add_option("--beta", b.bp.beta_rank,
                    "upper rank for the density statistic, 0 = efc");
  build->add_option("--level-norm", b.bp.level_norm,
                    "layer sampling multiplier, 0 = 1/ln(m)");
  build->callback([&] {
    auto ds = load_dataset(b.vectors, b.format, b.attrs);
    auto t0 = std::chrono::steady_clock::now();
    auto idx = favor::build_index(ds, b.bp);
    std::chrono::duration<double> secs =
        std::chrono::steady_clock::now() - t0;
    favor::save_index(idx, b.out);
    std::printf(
        "built %llu vectors dim=%u in %.1fs: top_layer=%u delta_d=%.6g -> "
        "%s\n",
        (unsigned long long)idx.count, idx.dim, secs.count(), idx.top_layer,
        idx.delta_d, b.out.c_str());
  });

  // ---- synth-attrs ----
  auto* synth = app.add_subcommand("synth-attrs",
                                   "generate a random attribute table");
  struct {
    uint64_t count = 0;
    uint32_t bools = 0, ints = 0, floats = 0;
    uint64_t seed = 0;
    std::string out;
  } sa;
  synth->add_option("--count", sa.count, "number of records")->required();
  synth->add_option("--bools", sa.bools, "fair-coin boolean columns");
  synth->add_option("--ints", sa.ints, "uniform 0..9 integer columns");
  synth->add_option("--floats", sa.floats, "uniform [0,100] float columns");
  synth->add_option("--seed", sa.seed, "rng seed");
  synth->add_option("--out", sa.out, "attribute table output (.fvra)")
      ->required();
  synth->callback([&] {
    auto attrs = favor::synthesize_attributes(
        sa.count, {sa.bools, sa.ints, sa.floats}, sa.seed);
    favor::save_attributes(attrs, sa.out);
    std::printf("wrote %llu records (%u bool, %u int, %u float) -> %s\n",
                (unsigned long long)sa.count, sa.bools, sa.ints, sa.floats,
                sa.out.c_str());
  });

  // ---- gt ----
  auto* gt = app.add_subcommand("gt", "exact filtered neighbors per query");
  struct {
    std::string vectors, format = "fvecs", attrs, queries, filter, out;
    uint32_t k = 10;
  } g;
  gt->add_option("--vectors", g.vectors, "vector file")->required();
  gt->add_option("--format", g.format, "fvecs, bvecs, or raw_f32");
  gt->add_option("--attrs", g.attrs, "attribute table (.fvra)");
  gt->add_option("--queries", g.queries, "query vector file")->required();
  gt->add_option("--filter", g.filter, "filter expression")->required();
  gt->add_option("--k", g.k, "neighbors per query");
  gt->add_option("--out", g.out, "ground truth output (.ivecs)")->required();
  gt->callback([&] {
    auto ds = load_dataset(g.vectors, g.format, g.attrs);
    auto queries =
        favor::ingest_vectors(g.queries, favor::parse_vec_format(g.format));
    auto f = favor::parse_filter(g.filter);
    favor::validate_filter(f, ds.attrs.schema);
    auto truth = favor::compute_ground_truth(ds, queries, f, g.k);
    favor::save_ground_truth(truth, g.out);
    std::printf("wrote top-%u truth for %llu queries -> %s\n", g.k,
                (unsigned long long)queries.count(), g.out.c_str());
  });

  // ---- search ----
  auto* search = app.add_subcommand("search", "query an index");
  struct {
    std::string index, vectors, format = "fvecs", attrs, queries, filter;
    std::string method = "favor", gt, csv;
    favor::SearchParams sp;
    favor::SelectorConfig cfg;
    bool no_term_opt = false, no_ef_norm = false;
  } s;
  search->add_option("--index", s.index, "index file (.fvrx)")->required();
  search->add_option("--vectors", s.vectors, "vector file the index was built from")
      ->required();
  search->add_option("--format", s.format, "fvecs, bvecs, or raw_f32");
  search->add_option("--attrs", s.attrs, "attribute table (.fvra)")->required();
  search->add_option("--queries", s.queries, "query vector file")->required();
  search->add_option("--filter", s.filter, "filter expression")->required();
  search->add_option("--ef", s.sp.ef, "beam width");
  search->add_option("--k", s.sp.k, "neighbors per query");
  search->add_option("--method", s.method, "search strategy")
      ->check(CLI::IsMember({"favor", "rsf", "brute", "auto"}));
  search->add_option("--gamma", s.sp.gamma_slack, "termination slack");
  search->add_option("--td-fraction", s.sp.td_fraction,
                     "required filter-passing share before stopping");
  search->add_flag("--no-term-opt", s.no_term_opt,
                   "classical stop rule instead");
  search->add_flag("--no-ef-norm", s.no_ef_norm,
                   "skip dividing the penalty by ef");
  search->add_option("--lambda", s.cfg.lambda,
                     "selectivity below which brute force is used");
  search->add_option("--sample-frac", s.cfg.sample_fraction,
                     "sampled fraction for selectivity estimation");
  search->add_option("--sample-seed", s.cfg.seed, "sampling seed");
  search->add_option("--gt", s.gt, "ground truth file (.ivecs)")->required();
  search->add_option("--csv", s.csv, "per-query report output")->required();
  search->callback([&] {
    s.sp.termination_opt = !s.no_term_opt;
    s.sp.normalize_by_ef = !s.no_ef_norm;
    auto idx = favor::load_index(s.index);
    auto ds = load_dataset(s.vectors, s.format, s.attrs);
    if (idx.count != ds.count() || idx.dim != ds.dim)
      throw favor::DataError("index shape does not match the vector file");
    auto queries =
        favor::ingest_vectors(s.queries, favor::parse_vec_format(s.format));
    auto f = favor::parse_filter(s.filter);
    favor::validate_filter(f, ds.attrs.schema);
    auto truth = favor::load_ground_truth(s.gt);
    if (truth.ids.size() != queries.count())
      throw favor::DataError(
          "ground truth has " + std::to_string(truth.ids.size()) +
          " rows for " + std::to_string(queries.count()) + " queries");

    const uint64_t nq = queries.count();
    std::vector<favor::QueryOutcome> outs;
    outs.reserve(nq);
    auto t0 = std::chrono::steady_clock::now();
    if (s.method == "favor") {
      double p_hat = favor::estimate_selectivity(f, ds.attrs, s.cfg);
      for (uint64_t qi = 0; qi < nq; ++qi)
        outs.push_back(
            favor::favor_search(idx, ds, queries.vec(qi), f, s.sp, p_hat));
    } else if (s.method == "rsf") {
      for (uint64_t qi = 0; qi < nq; ++qi)
        outs.push_back(favor::rsf_search(idx, ds, queries.vec(qi), f, s.sp));
    } else if (s.method == "brute") {
      for (uint64_t qi = 0; qi < nq; ++qi)
        outs.push_back(
            favor::brute_force_search(ds, queries.vec(qi), f, s.sp.k));
    } else {  // auto
      for (uint64_t qi = 0; qi < nq; ++qi)
        outs.push_back(
            favor::answer(idx, ds, queries.vec(qi), f, s.sp, s.cfg));
    }
    std::chrono::duration<double> secs =
        std::chrono::steady_clock::now() - t0;
    double qps = double(nq) / std::max(secs.count(), 1e-9);

    double mean_recall = 0, graph_frac = 0;
    for (uint64_t qi = 0; qi < nq; ++qi) {
      mean_recall += favor::recall_at_k(outs[qi].hits, truth.ids[qi], s.sp.k);
      graph_frac += outs[qi].route == favor::Route::graph ? 1.0 : 0.0;
    }
    mean_recall /= double(nq);
    graph_frac /= double(nq);

    std::ofstream csv(s.csv, std::ios::trunc);
    if (!csv) throw favor::DataError("cannot open '" + s.csv + "'");
    csv.precision(12);
    csv << "# " << crc_line(s.index) << "\n";
    csv << "# method=" << s.method << " ef=" << s.sp.ef << " k=" << s.sp.k
        << " filter=" << favor::render_filter(f) << "\n";
    csv << "# summary: n_queries=" << nq << " mean_recall=" << mean_recall
        << " qps=" << qps << " route_graph=" << graph_frac << "\n";
    csv << "query,route,p_hat,recall,dist_comps,hops,td_path_frac,hits\n";
    for (uint64_t qi = 0; qi < nq; ++qi) {
      const auto& o = outs[qi];
      double frac = o.stats.hops > 0
                        ? double(o.stats.path_td) / double(o.stats.hops)
                        : 0.0;
      csv << qi << ','
          << (o.route == favor::Route::graph ? "graph" : "brute_force") << ','
          << o.p_hat << ','
          << favor::recall_at_k(o.hits, truth.ids[qi], s.sp.k) << ','
          << o.stats.dist_comps << ',' << o.stats.hops << ',' << frac << ','
          << join_ids(o.hits) << '\n';
    }
    std::printf("%s: n=%llu mean_recall=%.4f qps=%.1f route_graph=%.2f -> %s\n",
                s.method.c_str(), (unsigned long long)nq, mean_recall, qps,
                graph_frac, s.csv.c_str());
  });

  // ---- sweep ----
  auto* sweep = app.add_subcommand("sweep", "recall/speed grid over methods");
  struct {
    std::string index, vectors, format = "fvecs", attrs, queries, filters, csv;
    std::vector<uint32_t> efs;
    std::vector<std::string> methods = {"favor", "rsf", "brute_force",
                                        "hnsw_unfiltered"};
    uint32_t k = 10, warmup = 10;
    favor::SearchParams sp;
    favor::SelectorConfig cfg;
    bool no_term_opt = false, no_ef_norm = false;
  } w;
  sweep->add_option("--index", w.index, "index file (.fvrx)")->required();
  sweep->add_option("--vectors", w.vectors, "vector file the index was built from")
      ->required();
  sweep->add_option("--format", w.format, "fvecs, bvecs, or raw_f32");
  sweep->add_option("--attrs", w.attrs, "attribute table (.fvra)")->required();
  sweep->add_option("--queries", w.queries, "query vector file")->required();
  sweep->add_option("--filters", w.filters,
                    "file of `name expression` lines, # comments")
      ->required();
  sweep->add_option("--ef", w.efs, "comma-separated beam widths")
      ->required()
      ->delimiter(',');
  sweep->add_option("--methods", w.methods,
                    "favor, rsf, brute_force, hnsw_unfiltered")
      ->delimiter(',');
  sweep->add_option("--k", w.k, "neighbors per query");
  sweep->add_option("--warmup", w.warmup, "untimed leading queries per cell");
  sweep->add_option("--gamma", w.sp.gamma_slack, "termination slack");
  sweep->add_option("--td-fraction", w.sp.td_fraction,
                    "required filter-passing share before stopping");
  sweep->add_flag("--no-term-opt", w.no_term_opt,
                  "classical stop rule instead");
  sweep->add_flag("--no-ef-norm", w.no_ef_norm,
                  "skip dividing the penalty by ef");
  sweep->add_option("--lambda", w.cfg.lambda,
                    "selectivity below which brute force is used");
  sweep->add_option("--sample-frac", w.cfg.sample_fraction,
                    "sampled fraction for selectivity estimation");
  sweep->add_option("--sample-seed", w.cfg.seed, "sampling seed");
  sweep->add_option("--csv", w.csv, "grid output")->required();
  sweep->callback([&] {
    w.sp.termination_opt = !w.no_term_opt;
    w.sp.normalize_by_ef = !w.no_ef_norm;
    auto idx = favor::load_index(w.index);
    auto ds = load_dataset(w.vectors, w.format, w.attrs);
    if (idx.count != ds.count() || idx.dim != ds.dim)
      throw favor::DataError("index shape does not match the vector file");
    auto queries =
        favor::ingest_vectors(w.queries, favor::parse_vec_format(w.format));

    favor::SweepSpec spec;
    spec.filters = load_filters(w.filters, ds.attrs.schema);
    spec.efs = w.efs;
    for (const auto& name : w.methods)
      spec.methods.push_back(favor::parse_method(name));
    spec.k = w.k;
    spec.warmup = w.warmup;

    auto rows = favor::sweep(idx, ds, queries, spec, w.sp, w.cfg);
    std::ofstream out(w.csv, std::ios::trunc);
    if (!out) throw favor::DataError("cannot open '" + w.csv + "'");
    favor::write_sweep_csv(out, rows, {crc_line(w.index)});
    std::printf("%zu cells over %llu queries -> %s\n", rows.size(),
                (unsigned long long)queries.count(), w.csv.c_str());
  });

  // ---- ablate-d ----
  auto* ablate = app.add_subcommand(
      "ablate-d", "compare zero, derived, and oracle exclusion penalties");
  struct {
    std::string index, vectors, format = "fvecs", attrs, queries, filter, csv;
    std::string name = "filter";
    std::vector<uint32_t> efs;
    uint32_t k = 10;
    favor::SearchParams sp;
    favor::SelectorConfig cfg;
  } a;
  ablate->add_option("--index", a.index, "index file (.fvrx)")->required();
  ablate->add_option("--vectors", a.vectors, "vector file the index was built from")
      ->required();
  ablate->add_option("--format", a.format, "fvecs, bvecs, or raw_f32");
  ablate->add_option("--attrs", a.attrs, "attribute table (.fvra)")->required();
  ablate->add_option("--queries", a.queries, "query vector file")->required();
  ablate->add_option("--filter", a.filter, "filter expression")->required();
  ablate->add_option("--filter-name", a.name, "label used in the csv");
  ablate->add_option("--ef", a.efs, "comma-separated beam widths")
      ->required()
      ->delimiter(',');
  ablate->add_option("--k", a.k, "neighbors per query");
  ablate->add_option("--sample-seed", a.cfg.seed, "sampling seed");
  ablate->add_option("--csv", a.csv, "ablation output")->required();
  ablate->callback([&] {
    auto idx = favor::load_index(a.index);
    auto ds = load_dataset(a.vectors, a.format, a.attrs);
    if (idx.count != ds.count() || idx.dim != ds.dim)
      throw favor::DataError("index shape does not match the vector file");
    auto queries =
        favor::ingest_vectors(a.queries, favor::parse_vec_format(a.format));
    auto f = favor::parse_filter(a.filter);
    favor::validate_filter(f, ds.attrs.schema);
    a.sp.k = a.k;
    auto rows = favor::ablation_exclusion(idx, ds, queries, a.name, f, a.efs,
                                          a.sp, a.cfg);
    std::ofstream out(a.csv, std::ios::trunc);
    if (!out) throw favor::DataError("cannot open '" + a.csv + "'");
    favor::write_ablation_csv(out, rows, {crc_line(a.index)});
    std::printf("%zu ablation cells -> %s\n", rows.size(), a.csv.c_str());
  });

  // ---- verify-linear ----
  auto* verify = app.add_subcommand(
      "verify-linear", "check that sorted neighbor distances grow linearly");
  struct {
    std::string vectors, format = "fvecs";
    uint32_t anchors = 100, m_max = 200;
    uint64_t seed = 0;
  } v;
  verify->add_option("--vectors", v.vectors, "vector file")->required();
  verify->add_option("--format", v.format, "fvecs, bvecs, or raw_f32");
  verify->add_option("--anchors", v.anchors, "sampled anchor points");
  verify->add_option("--m-max", v.m_max, "regress ranks 1..m_max");
  verify->add_option("--seed", v.seed, "anchor sampling seed");
  verify->callback([&] {
    auto ds =
        favor::ingest_vectors(v.vectors, favor::parse_vec_format(v.format));
    auto rep = favor::verify_linear_model(ds, v.anchors, v.m_max, v.seed);
    std::printf("anchors_fitted=%u degenerate=%u mean_r2=%.4f std_r2=%.4f\n",
                rep.anchors, rep.degenerate, rep.mean_r2, rep.std_r2);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const favor::UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const favor::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 4;
  }
}

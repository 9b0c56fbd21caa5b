// Python module: numpy in, numpy out, filters as expression strings.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <vector>

#include "favor/bench.hpp"
#include "favor/filters.hpp"
#include "favor/graph.hpp"
#include "favor/search.hpp"
#include "favor/selector.hpp"

namespace py = pybind11;

namespace {

using DatasetPtr = std::shared_ptr<favor::VectorDataset>;
using IndexPtr = std::shared_ptr<favor::HnswIndex>;

template <typename T>
using CArray = py::array_t<T, py::array::c_style | py::array::forcecast>;

// rows x cols, 1-d input treated as a single column
template <typename T, typename Out>
void fill_column_major(const py::object& obj, uint64_t expect_rows,
                       const char* what, std::vector<Out>& flat,
                       uint32_t& cols) {
  if (obj.is_none()) {
    cols = 0;
    return;
  }
  CArray<T> arr = obj.cast<CArray<T>>();
  auto info = arr.request();
  uint64_t rows;
  if (info.ndim == 1) {
    rows = uint64_t(info.shape[0]);
    cols = 1;
  } else if (info.ndim == 2) {
    rows = uint64_t(info.shape[0]);
    cols = uint32_t(info.shape[1]);
  } else {
    throw favor::UsageError(std::string(what) + ": expected a 1-d or 2-d array");
  }
  if (rows != expect_rows)
    throw favor::UsageError(std::string(what) + ": has " +
                            std::to_string(rows) + " rows, expected " +
                            std::to_string(expect_rows));
  const T* p = static_cast<const T*>(info.ptr);
  flat.assign(p, p + size_t(rows) * cols);
}

DatasetPtr make_dataset(CArray<float> vectors, py::object bools,
                        py::object ints, py::object floats) {
  auto info = vectors.request();
  if (info.ndim != 2)
    throw favor::UsageError("vectors: expected a 2-d float array (n, dim)");
  auto ds = std::make_shared<favor::VectorDataset>();
  ds->dim = uint32_t(info.shape[1]);
  if (ds->dim == 0) throw favor::UsageError("vectors: zero-dimensional");
  uint64_t n = uint64_t(info.shape[0]);
  const float* p = static_cast<const float*>(info.ptr);
  ds->data.assign(p, p + size_t(n) * ds->dim);

  favor::AttributeTable& t = ds->attrs;
  fill_column_major<uint8_t>(bools, n, "bools", t.bools, t.schema.n_bool);
  fill_column_major<int32_t>(ints, n, "ints", t.ints, t.schema.n_int);
  fill_column_major<float>(floats, n, "floats", t.floats, t.schema.n_float);
  t.count = (t.schema.n_bool || t.schema.n_int || t.schema.n_float) ? n : 0;
  return ds;
}

favor::FilterCondition parse_checked(const std::string& expr,
                                     const favor::VectorDataset& ds) {
  auto f = favor::parse_filter(expr);
  favor::validate_filter(f, ds.attrs.schema);
  return f;
}

py::tuple hits_to_arrays(const std::vector<favor::Neighbor>& hits) {
  py::array_t<int64_t> ids(py::ssize_t(hits.size()));
  py::array_t<double> dists(py::ssize_t(hits.size()));
  auto* ip = ids.mutable_data();
  auto* dp = dists.mutable_data();
  for (size_t i = 0; i < hits.size(); ++i) {
    ip[i] = int64_t(hits[i].id);
    dp[i] = hits[i].dist;
  }
  return py::make_tuple(ids, dists);
}

favor::QueryOutcome run_one(const favor::HnswIndex& idx,
                            const favor::VectorDataset& ds,
                            std::span<const float> q,
                            const favor::FilterCondition& f,
                            const favor::SearchParams& sp,
                            const favor::SelectorConfig& cfg,
                            const std::string& method, double p_hat) {
  if (method == "favor") return favor::favor_search(idx, ds, q, f, sp, p_hat);
  if (method == "rsf") return favor::rsf_search(idx, ds, q, f, sp);
  if (method == "brute") return favor::brute_force_search(ds, q, f, sp.k);
  if (method == "auto") return favor::answer(idx, ds, q, f, sp, cfg);
  if (method == "hnsw") return favor::hnsw_search(idx, ds, q, sp);
  throw favor::UsageError("unknown method '" + method +
                          "' (expected favor, rsf, brute, auto, or hnsw)");
}

}  // namespace

PYBIND11_MODULE(favor_ann, m) {
  m.doc() = "filtered vector search with selectivity-scaled exclusion penalties";

  py::class_<favor::VectorDataset, DatasetPtr>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("vectors"),
           py::arg("bools") = py::none(), py::arg("ints") = py::none(),
           py::arg("floats") = py::none())
      .def_property_readonly("count", &favor::VectorDataset::count)
      .def_readonly("dim", &favor::VectorDataset::dim)
      .def_property_readonly("n_bool",
                             [](const favor::VectorDataset& ds) {
                               return ds.attrs.schema.n_bool;
                             })
      .def_property_readonly("n_int",
                             [](const favor::VectorDataset& ds) {
                               return ds.attrs.schema.n_int;
                             })
      .def_property_readonly("n_float", [](const favor::VectorDataset& ds) {
        return ds.attrs.schema.n_float;
      });

  m.def(
      "synthesize_attrs",
      [](DatasetPtr ds, uint32_t n_bool, uint32_t n_int, uint32_t n_float,
         uint64_t seed) {
        ds->attrs = favor::synthesize_attributes(
            ds->count(), {n_bool, n_int, n_float}, seed);
      },
      py::arg("dataset"), py::arg("n_bool") = 1, py::arg("n_int") = 2,
      py::arg("n_float") = 1, py::arg("seed") = 0,
      "attach independent random attributes to every vector");

  py::class_<favor::HnswIndex, IndexPtr>(m, "Index")
      .def_readonly("dim", &favor::HnswIndex::dim)
      .def_readonly("count", &favor::HnswIndex::count)
      .def_readonly("top_layer", &favor::HnswIndex::top_layer)
      .def_readonly("delta_d", &favor::HnswIndex::delta_d)
      .def("save",
           [](const favor::HnswIndex& idx, const std::string& path) {
             favor::save_index(idx, path);
           })
      .def_static("load", [](const std::string& path) {
        return std::make_shared<favor::HnswIndex>(favor::load_index(path));
      });

  m.def(
      "build",
      [](DatasetPtr ds, uint32_t m_, uint32_t efc, uint64_t seed,
         uint32_t alpha_rank, uint32_t beta_rank, double level_norm) {
        favor::BuildParams bp;
        bp.m = m_;
        bp.efc = efc;
        bp.seed = seed;
        bp.alpha_rank = alpha_rank;
        bp.beta_rank = beta_rank;
        bp.level_norm = level_norm;
        py::gil_scoped_release release;
        return std::make_shared<favor::HnswIndex>(favor::build_index(*ds, bp));
      },
      py::arg("dataset"), py::arg("m") = 32, py::arg("efc") = 40,
      py::arg("seed") = 42, py::arg("alpha_rank") = 10,
      py::arg("beta_rank") = 0, py::arg("level_norm") = 0.0);

  m.def(
      "search",
      [](IndexPtr idx, DatasetPtr ds, CArray<float> queries,
         const std::string& filter, uint32_t ef, uint32_t k,
         const std::string& method, py::object p_hat_obj, double gamma,
         double td_fraction, bool termination_opt, bool normalize_by_ef,
         double lambda, uint64_t sample_seed) {
        auto f = parse_checked(filter, *ds);
        favor::SearchParams sp;
        sp.ef = ef;
        sp.k = k;
        sp.gamma_slack = gamma;
        sp.td_fraction = td_fraction;
        sp.termination_opt = termination_opt;
        sp.normalize_by_ef = normalize_by_ef;
        favor::SelectorConfig cfg;
        cfg.lambda = lambda;
        cfg.seed = sample_seed;

        double p_hat = 1.0;
        if (method == "favor")
          p_hat = p_hat_obj.is_none()
                      ? favor::estimate_selectivity(f, ds->attrs, cfg)
                      : p_hat_obj.cast<double>();

        auto info = queries.request();
        bool single = info.ndim == 1;
        if (info.ndim > 2)
          throw favor::UsageError("queries: expected a 1-d or 2-d array");
        uint64_t nq = single ? 1 : uint64_t(info.shape[0]);
        uint32_t qdim =
            uint32_t(single ? info.shape[0] : info.shape[1]);
        if (qdim != ds->dim)
          throw favor::UsageError("queries: dimension " +
                                  std::to_string(qdim) + " != dataset " +
                                  std::to_string(ds->dim));
        const float* qp = static_cast<const float*>(info.ptr);

        std::vector<std::vector<favor::Neighbor>> all(nq);
        {
          py::gil_scoped_release release;
          for (uint64_t i = 0; i < nq; ++i) {
            std::span<const float> q(qp + size_t(i) * qdim, qdim);
            all[i] =
                run_one(*idx, *ds, q, f, sp, cfg, method, p_hat).hits;
          }
        }
        if (single) return py::object(hits_to_arrays(all[0]));
        py::list out;
        for (const auto& hits : all) out.append(hits_to_arrays(hits));
        return py::object(out);
      },
      py::arg("index"), py::arg("dataset"), py::arg("queries"),
      py::arg("filter") = "true", py::arg("ef") = 100, py::arg("k") = 10,
      py::arg("method") = "favor", py::arg("p_hat") = py::none(),
      py::arg("gamma") = 1.0, py::arg("td_fraction") = 0.5,
      py::arg("termination_opt") = true, py::arg("normalize_by_ef") = true,
      py::arg("lambda_") = 0.01, py::arg("sample_seed") = 0,
      "returns (ids, dists) for a single query, or a list of such pairs");

  m.def(
      "ground_truth",
      [](DatasetPtr ds, CArray<float> queries, const std::string& filter,
         uint32_t k) {
        auto f = parse_checked(filter, *ds);
        auto info = queries.request();
        if (info.ndim != 2)
          throw favor::UsageError("queries: expected a 2-d array");
        favor::VectorDataset qs;
        qs.dim = uint32_t(info.shape[1]);
        const float* p = static_cast<const float*>(info.ptr);
        qs.data.assign(p, p + size_t(info.shape[0]) * qs.dim);
        favor::GroundTruth gt;
        {
          py::gil_scoped_release release;
          gt = favor::compute_ground_truth(*ds, qs, f, k);
        }
        py::list out;
        for (const auto& row : gt.ids) {
          py::array_t<int64_t> ids(py::ssize_t(row.size()));
          auto* ip = ids.mutable_data();
          for (size_t i = 0; i < row.size(); ++i) ip[i] = int64_t(row[i]);
          out.append(ids);
        }
        return out;
      },
      py::arg("dataset"), py::arg("queries"), py::arg("filter") = "true",
      py::arg("k") = 10);

  m.def(
      "recall",
      [](CArray<int64_t> ids, CArray<int64_t> truth, uint32_t k) {
        std::vector<favor::Neighbor> hits;
        auto ii = ids.request();
        const int64_t* ip = static_cast<const int64_t*>(ii.ptr);
        for (py::ssize_t i = 0; i < ii.size; ++i)
          hits.push_back({uint64_t(ip[i]), 0.0});
        auto ti = truth.request();
        const int64_t* tp = static_cast<const int64_t*>(ti.ptr);
        std::vector<uint64_t> t(tp, tp + ti.size);
        return favor::recall_at_k(hits, t, k);
      },
      py::arg("ids"), py::arg("truth"), py::arg("k") = 10);

  m.def(
      "estimate_selectivity",
      [](DatasetPtr ds, const std::string& filter, uint64_t seed,
         uint64_t min_sample, double sample_fraction) {
        auto f = parse_checked(filter, *ds);
        favor::SelectorConfig cfg;
        cfg.seed = seed;
        cfg.min_sample = min_sample;
        cfg.sample_fraction = sample_fraction;
        return favor::estimate_selectivity(f, ds->attrs, cfg);
      },
      py::arg("dataset"), py::arg("filter"), py::arg("seed") = 0,
      py::arg("min_sample") = 1000, py::arg("sample_fraction") = 0.01);

  m.def(
      "exact_selectivity",
      [](DatasetPtr ds, const std::string& filter) {
        return favor::exact_selectivity(parse_checked(filter, *ds), ds->attrs);
      },
      py::arg("dataset"), py::arg("filter"));

  m.def("exclusion_distance", &favor::exclusion_distance, py::arg("p_hat"),
        py::arg("ef"), py::arg("delta_d"), py::arg("normalize_by_ef") = true);

  m.def(
      "check_filter",
      [](const std::string& expr) {
        return favor::render_filter(favor::parse_filter(expr));
      },
      py::arg("expr"), "parse and re-render a filter expression");
}

// Python bindings. Descriptors cross the boundary as plain dicts using the
// same field names as the JSON documents (see docs/formats.md).

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "faasprov/error.hpp"
#include "faasprov/experiment.hpp"
#include "faasprov/io.hpp"

namespace py = pybind11;
using namespace faasprov;

namespace {

Json to_doc(const py::handle& obj) {
  const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return Json::parse(text);
}

py::object to_py(const Json& doc) { return py::module_::import("json").attr("loads")(doc.dump()); }

FunctionTable function_table(const py::list& functions) {
  FunctionTable out;
  for (const auto& f : functions) {
    auto spec = function_from_json(to_doc(f));
    out.emplace(spec.id, spec);
  }
  return out;
}

ModelMap model_map(const py::dict& models) {
  ModelMap out;
  for (const auto& [k, v] : models) out.emplace(k.cast<std::string>(), model_from_json(to_doc(v)));
  return out;
}

PricingScheme pricing_of(const PipelineSuite& suite, std::optional<double> rate) {
  if (rate) return PricingScheme{*rate};
  if (suite.pricing) return *suite.pricing;
  throw Error(ErrorCode::kDataError, "no pricing in the suite and none given");
}

py::dict simulate_py(const py::dict& pipeline, const py::list& functions, const py::dict& configs,
                     const py::dict& cluster, const py::dict& workload, double hop_latency_s, double quantile) {
  ConfigurationMap cm;
  for (const auto& [k, v] : configs) cm.emplace(k.cast<std::string>(), configuration_from_json(to_doc(v)));
  SimulationOptions options;
  options.hop_latency_s = hop_latency_s;
  const auto r = simulate(pipeline_from_json(to_doc(pipeline)), function_table(functions), cm,
                          cluster_from_json(to_doc(cluster)), workload_from_json(to_doc(workload)), options);
  py::dict out = to_py(simulation_summary(r, quantile));
  out["pct_values"] = r.pct_values;
  return out;
}

py::dict train_py(const std::vector<std::tuple<double, double, double, int>>& samples,
                  const std::vector<std::size_t>& hidden, std::size_t epochs, double learning_rate,
                  std::size_t batch_size, const std::string& loss, std::uint64_t seed, double held_out_fraction,
                  std::optional<std::vector<int>> replica_classes) {
  TrainingOptions o;
  o.hidden = hidden;
  o.epochs = epochs;
  o.learning_rate = learning_rate;
  o.batch_size = batch_size;
  o.loss = parse_loss_kind(loss);
  o.seed = seed;
  o.held_out_fraction = held_out_fraction;
  if (replica_classes) o.class_map.classes = *replica_classes;
  validate(o.class_map);

  std::vector<TrainingSample> data;
  for (const auto& [mem, cpus, rate, replicas] : samples) {
    const auto& cls = o.class_map.classes;
    const auto it = std::find(cls.begin(), cls.end(), replicas);
    if (it == cls.end()) {
      throw Error(ErrorCode::kDataError, "replica label " + std::to_string(replicas) + " is not in the class map");
    }
    data.push_back({{mem, cpus, rate}, static_cast<std::size_t>(it - cls.begin())});
  }
  TrainingResult result;
  {
    py::gil_scoped_release release;
    result = train(data, o);
  }

  py::list history;
  for (const auto& e : result.history) {
    py::dict row;
    row["epoch"] = e.epoch;
    row["train_loss"] = e.train_loss;
    row["loss"] = e.held_out.mean_loss;
    row["accuracy"] = e.held_out.accuracy;
    row["macro_f1"] = e.held_out.macro_f1;
    row["macro_precision"] = e.held_out.macro_precision;
    row["macro_recall"] = e.held_out.macro_recall;
    history.append(row);
  }
  py::dict out;
  out["model"] = to_py(to_json(result.model));
  out["history"] = history;
  out["train_size"] = result.train_size;
  out["held_out_size"] = result.held_out_size;
  return out;
}

py::dict predict_py(const py::dict& model, double mem_mb, double cpus, double rate) {
  const auto m = model_from_json(to_doc(model));
  const auto p = forward(m, {mem_mb, cpus, rate});
  py::dict out;
  out["replicas"] = m.class_map.classes[argmax(p)];
  out["probabilities"] = p;
  return out;
}

py::object select_py(const py::dict& suite, const std::string& pipeline_id, const py::dict& models,
                     const py::dict& catalog, const py::dict& cluster, std::optional<double> rate,
                     std::optional<double> rate_per_gb_second, const std::string& base_dir) {
  const auto s = suite_from_json(to_doc(suite), base_dir);
  const auto& p = s.pipeline(pipeline_id);
  const auto report = select_configuration(p, s.functions, model_map(models), catalog_from_json(to_doc(catalog)),
                                           rate.value_or(p.target_rate), cluster_from_json(to_doc(cluster)),
                                           pricing_of(s, rate_per_gb_second));
  return to_py(to_json(report));
}

py::dict oracle_py(const py::dict& suite, const std::string& pipeline_id, const py::dict& catalog,
                   const py::dict& cluster, const py::dict& workload, std::optional<double> rate_per_gb_second,
                   double quantile, unsigned jobs, const std::string& base_dir) {
  const auto s = suite_from_json(to_doc(suite), base_dir);
  const auto& p = s.pipeline(pipeline_id);
  auto w = workload_from_json(to_doc(workload));
  if (!to_doc(workload).contains("rate")) w.rate = p.target_rate;
  OracleOptions o;
  o.quantile = quantile;
  o.jobs = jobs;
  const auto pricing = pricing_of(s, rate_per_gb_second);
  const auto catalog_spec = catalog_from_json(to_doc(catalog));
  const auto cluster_spec = cluster_from_json(to_doc(cluster));
  OracleResult r;
  {
    py::gil_scoped_release release;
    r = grid_search_oracle(p, s.functions, catalog_spec, cluster_spec, w, pricing, o);
  }
  py::dict optimal;
  double total = 0.0;
  for (const auto& [fid, cfg] : r.optimal) {
    optimal[py::str(fid)] = to_py(to_json(cfg));
    total += monthly_cost(cfg, pricing);
  }
  py::dict out;
  out["optimal"] = optimal;
  out["total_monthly_cost"] = total;
  out["table_csv"] = oracle_table_csv(r);
  return out;
}

py::dict experiment_py(const std::string& spec_path, std::optional<std::string> output_dir) {
  auto spec = load_experiment_spec(spec_path);
  if (output_dir) spec.output_dir = *output_dir;
  ExperimentReport report;
  {
    py::gil_scoped_release release;
    report = run_experiment(spec);
  }
  py::list checks;
  for (const auto& c : report.checks) {
    py::dict row;
    row["name"] = c.name;
    row["passed"] = c.passed;
    row["detail"] = c.detail;
    checks.append(row);
  }
  py::dict out;
  out["scenario"] = to_string(report.scenario);
  out["passed"] = report.passed();
  out["checks"] = checks;
  out["artifacts"] = report.artifacts;
  out["output_dir"] = spec.output_dir.string();
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "faasprov core bindings";

  py::exception<Error>(m, "FaasprovError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      // carries the error code name as .code
      py::object cls = py::module_::import("faasprov._core").attr("FaasprovError");
      py::object exc = cls(e.what());
      exc.attr("code") = to_string(e.code());
      PyErr_SetObject(cls.ptr(), exc.ptr());
    } catch (const nlohmann::json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("exec_time", [](const py::dict& f, const py::dict& w) {
    return exec_time(function_from_json(to_doc(f)), container_from_json(to_doc(w)));
  }, py::arg("function"), py::arg("container"));
  m.def("monthly_cost", [](const py::dict& cfg, double rate) {
    return monthly_cost(configuration_from_json(to_doc(cfg)), PricingScheme{rate});
  }, py::arg("configuration"), py::arg("rate_per_gb_second"));
  m.def("softmax", [](const std::vector<double>& q) { return softmax(q); }, py::arg("logits"));

  m.def("approx_ged", [](const py::dict& a, const py::dict& b) {
    return approx_ged(callgraph_from_json(to_doc(a)), callgraph_from_json(to_doc(b))).distance;
  }, py::arg("g1"), py::arg("g2"));
  m.def("exact_ged", [](const py::dict& a, const py::dict& b) {
    return exact_ged(callgraph_from_json(to_doc(a)), callgraph_from_json(to_doc(b))).distance;
  }, py::arg("g1"), py::arg("g2"));

  m.def("simulate", &simulate_py, py::arg("pipeline"), py::arg("functions"), py::arg("configs"), py::arg("cluster"),
        py::arg("workload"), py::arg("hop_latency_s") = 0.0, py::arg("quantile") = kDefaultSloQuantile);
  m.def("train", &train_py, py::arg("samples"), py::arg("hidden") = std::vector<std::size_t>{64, 64},
        py::arg("epochs") = 500, py::arg("learning_rate") = 5e-3, py::arg("batch_size") = 32,
        py::arg("loss") = "cce", py::arg("seed") = 0, py::arg("held_out_fraction") = 0.2,
        py::arg("replica_classes") = py::none());
  m.def("predict", &predict_py, py::arg("model"), py::arg("mem_mb"), py::arg("cpus"), py::arg("rate"));
  m.def("select_configuration", &select_py, py::arg("suite"), py::arg("pipeline_id"), py::arg("models"),
        py::arg("catalog"), py::arg("cluster"), py::arg("rate") = py::none(),
        py::arg("rate_per_gb_second") = py::none(), py::arg("base_dir") = "");
  m.def("grid_search_oracle", &oracle_py, py::arg("suite"), py::arg("pipeline_id"), py::arg("catalog"),
        py::arg("cluster"), py::arg("workload"), py::arg("rate_per_gb_second") = py::none(),
        py::arg("quantile") = kDefaultSloQuantile, py::arg("jobs") = 1, py::arg("base_dir") = "");
  m.def("run_experiment", &experiment_py, py::arg("spec_path"), py::arg("output_dir") = py::none());
}

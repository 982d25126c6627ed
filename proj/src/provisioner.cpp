#include "faasprov/provisioner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <thread>

#include "faasprov/error.hpp"

namespace faasprov {

void validate(const ConfigurationCatalog& catalog) {
  if (catalog.container_grid.empty()) throw Error(ErrorCode::kInvalidArgument, "container grid is empty");
  std::set<ContainerConfig> seen;
  for (const auto& c : catalog.container_grid) {
    validate(c);
    if (!seen.insert(c).second) throw Error(ErrorCode::kInvalidArgument, "container grid has duplicates");
  }
  validate(catalog.class_map);
}

std::vector<Configuration> enumerate(const ConfigurationCatalog& catalog) {
  validate(catalog);
  std::vector<Configuration> out;
  out.reserve(catalog.container_grid.size() * catalog.class_map.size());
  for (const auto& w : catalog.container_grid) {
    for (int r : catalog.class_map.classes) out.push_back({r, w});
  }
  return out;
}

ConfigurationMap SelectionReport::configurations() const {
  ConfigurationMap out;
  for (const auto& f : functions) out[f.function_id] = f.chosen;
  return out;
}

namespace {

// Cheaper first; ties by fewer replicas, less memory, fewer CPUs.
bool cheaper(double cost_a, const Configuration& a, double cost_b, const Configuration& b) {
  const double tol = 1e-9 * std::max(std::abs(cost_a), std::abs(cost_b));
  if (std::abs(cost_a - cost_b) > tol) return cost_a < cost_b;
  if (a.replicas != b.replicas) return a.replicas < b.replicas;
  if (a.container.mem_mb != b.container.mem_mb) return a.container.mem_mb < b.container.mem_mb;
  return a.container.cpus < b.container.cpus;
}

std::vector<std::string> distinct_functions(const PipelineSpec& pipeline) {
  std::vector<std::string> out;
  for (const auto& fid : pipeline.functions) {
    if (std::find(out.begin(), out.end(), fid) == out.end()) out.push_back(fid);
  }
  return out;
}

}  // namespace

SelectionReport select_configuration(const PipelineSpec& pipeline, const FunctionTable& functions,
                                     const ModelMap& models, const ConfigurationCatalog& catalog, double rate,
                                     const ClusterSpec& cluster, const PricingScheme& pricing,
                                     const SimulationOptions& options) {
  validate(pipeline);
  validate(catalog);
  validate(cluster);
  validate(pricing);
  if (!(std::isfinite(rate) && rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "rate must be > 0");

  SelectionReport report;
  report.pipeline_id = pipeline.id;
  report.target_rate = rate;
  for (const auto& fid : distinct_functions(pipeline)) {
    const auto& f = lookup(functions, fid);
    const auto model_it = models.find(fid);
    if (model_it == models.end()) throw Error(ErrorCode::kInvalidArgument, "no model for function '" + fid + "'");
    const auto& model = model_it->second;
    if (!(model.class_map == catalog.class_map)) {
      throw Error(ErrorCode::kInvalidArgument, "model for '" + fid + "' uses a different class map");
    }
    const double budget = stage_deadline(pipeline, functions, fid, options);

    std::optional<FunctionSelection> best;
    for (const auto& w : catalog.container_grid) {
      if (w.mem_mb < f.ref_mem) continue;
      if (exec_time(f, w) > budget) continue;
      const auto p = forward(model, {w.mem_mb, w.cpus, rate});
      // The last class doubles as "nothing in the map suffices", so a prediction
      // is raised to the first class whose replicas can keep up with the rate.
      const auto& classes = model.class_map.classes;
      auto cls = argmax(p);
      while (cls < classes.size() && static_cast<double>(classes[cls]) / exec_time(f, w) <= rate) ++cls;
      if (cls == classes.size()) continue;
      const Configuration cfg{classes[cls], w};
      if (!fits_cluster(cfg, cluster)) continue;
      const double cost = monthly_cost(cfg, pricing);
      if (best && !cheaper(cost, cfg, best->monthly_cost, best->chosen)) continue;
      FunctionSelection sel;
      sel.function_id = fid;
      sel.chosen = cfg;
      sel.class_probabilities = p;
      sel.slo_probability = 0.0;
      for (std::size_t c = cls; c < p.size(); ++c) sel.slo_probability += p[c];
      sel.monthly_cost = cost;
      best = std::move(sel);
    }
    if (!best) {
      throw Error(ErrorCode::kNoFeasibleConfiguration,
                  "no catalog container can serve '" + fid + "' within its " + std::to_string(budget) + " s share");
    }
    report.total_monthly_cost += best->monthly_cost;
    report.functions.push_back(std::move(*best));
  }
  return report;
}

OracleResult grid_search_oracle(const PipelineSpec& pipeline, const FunctionTable& functions,
                                const ConfigurationCatalog& catalog, const ClusterSpec& cluster,
                                const WorkloadSpec& workload, const PricingScheme& pricing,
                                const OracleOptions& options) {
  validate(pipeline);
  validate(pricing);
  validate(workload);
  const auto configs = enumerate(catalog);
  const auto fids = distinct_functions(pipeline);

  OracleResult result;
  result.table.resize(fids.size() * configs.size());
  for (std::size_t i = 0; i < fids.size(); ++i) {
    for (std::size_t j = 0; j < configs.size(); ++j) {
      auto& row = result.table[i * configs.size() + j];
      row.function_id = fids[i];
      row.config = configs[j];
      row.monthly_cost = monthly_cost(configs[j], pricing);
    }
  }

  std::vector<double> budgets;
  for (const auto& fid : fids) budgets.push_back(stage_deadline(pipeline, functions, fid, options.simulation));
  const double quantile = stage_quantile(pipeline, options.quantile);

  // Cells are independent; results land in their own slot, so the table is
  // identical for any job count.
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(result.table.size());
  auto worker = [&] {
    for (std::size_t cell = next++; cell < result.table.size(); cell = next++) {
      auto& row = result.table[cell];
      const std::size_t fi = cell / configs.size();
      try {
        const auto eval =
            evaluate_stage(lookup(functions, row.function_id), budgets[fi], row.config, cluster, workload, quantile);
        row.throughput = eval.throughput;
        row.pct_quantile = eval.pct_quantile;
        row.slo_met = eval.slo_met;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kPackingFailed || e.code() == ErrorCode::kDoesNotFitCluster ||
            e.code() == ErrorCode::kInsufficientMemory) {
          row.deployable = false;
        } else {
          errors[cell] = std::current_exception();
        }
      } catch (...) {
        errors[cell] = std::current_exception();
      }
    }
  };
  const unsigned jobs = std::max(1u, options.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (std::size_t i = 0; i < fids.size(); ++i) {
    const OracleRow* best = nullptr;
    for (std::size_t j = 0; j < configs.size(); ++j) {
      const auto& row = result.table[i * configs.size() + j];
      if (!row.deployable || !row.slo_met) continue;
      if (!best || cheaper(row.monthly_cost, row.config, best->monthly_cost, best->config)) best = &row;
    }
    if (!best) {
      throw Error(ErrorCode::kNoFeasibleConfiguration, "no catalog configuration meets the deadline share of '" +
                                                           fids[i] + "'");
    }
    result.optimal[fids[i]] = best->config;
  }
  return result;
}

double performance_similarity(double thr_agnostic, double thr_similar) {
  if (thr_similar == 0.0) throw Error(ErrorCode::kZeroBaseline, "similar-pipeline throughput is zero");
  return std::abs(1.0 - (thr_agnostic - thr_similar) / thr_similar) * 100.0;
}

double deviation_similarity(double thr_agnostic, double thr_similar) {
  if (thr_similar == 0.0) throw Error(ErrorCode::kZeroBaseline, "similar-pipeline throughput is zero");
  return (1.0 - std::abs(thr_agnostic - thr_similar) / thr_similar) * 100.0;
}

Configuration naive_max_configuration(const ConfigurationCatalog& catalog) {
  validate(catalog);
  const auto largest = *std::max_element(catalog.container_grid.begin(), catalog.container_grid.end(),
                                         [](const ContainerConfig& a, const ContainerConfig& b) {
                                           if (a.mem_mb != b.mem_mb) return a.mem_mb < b.mem_mb;
                                           return a.cpus < b.cpus;
                                         });
  return {catalog.class_map.classes.back(), largest};
}

double cost_saving_vs_naive(const Configuration& selected, const ConfigurationCatalog& catalog,
                            const PricingScheme& pricing) {
  const double naive = monthly_cost(naive_max_configuration(catalog), pricing);
  return (1.0 - monthly_cost(selected, pricing) / naive) * 100.0;
}

}  // namespace faasprov

#include "faasprov/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <numeric>
#include <sstream>

#include "faasprov/error.hpp"

namespace fs = std::filesystem;

namespace faasprov {

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::kTrainEval: return "train-eval";
    case Scenario::kLossComparison: return "loss-comparison";
    case Scenario::kThroughputCost: return "throughput-cost";
    case Scenario::kAgnosticGed: return "agnostic-ged";
  }
  return "?";
}

Scenario parse_scenario(const std::string& text) {
  for (auto s : {Scenario::kTrainEval, Scenario::kLossComparison, Scenario::kThroughputCost, Scenario::kAgnosticGed}) {
    if (text == to_string(s)) return s;
  }
  throw Error(ErrorCode::kDataError, "unknown scenario '" + text + "'");
}

namespace {

fs::path resolve(const fs::path& base, const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw Error(ErrorCode::kDataError, std::string("experiment spec needs a string '") + key + "'");
  }
  fs::path p = j.at(key).get<std::string>();
  return p.is_relative() ? base / p : p;
}

template <typename T>
void read_param(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kDataError, std::string("experiment parameter '") + key + "': " + e.what());
  }
}

}  // namespace

ExperimentSpec experiment_spec_from_json(const Json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::kDataError, "experiment spec must be an object");
  ExperimentSpec spec;
  if (!j.contains("scenario") || !j.at("scenario").is_string()) {
    throw Error(ErrorCode::kDataError, "experiment spec needs a string 'scenario'");
  }
  spec.scenario = parse_scenario(j.at("scenario").get<std::string>());
  spec.suite = resolve(base_dir, j, "suite");
  spec.cluster = resolve(base_dir, j, "cluster");
  spec.catalog = resolve(base_dir, j, "catalog");
  spec.workload = resolve(base_dir, j, "workload");
  spec.output_dir = resolve(base_dir, j, "output_dir");
  read_param(j, "seed", spec.seed);
  read_param(j, "jobs", spec.jobs);
  for (const auto* p : {&spec.suite, &spec.cluster, &spec.catalog, &spec.workload}) {
    if (!fs::exists(*p)) throw Error(ErrorCode::kDataError, "referenced file does not exist: " + p->string());
  }
  if (j.contains("params")) {
    const auto& pj = j.at("params");
    auto& p = spec.params;
    read_param(pj, "rates_per_function", p.rates_per_function);
    read_param(pj, "epochs", p.epochs);
    read_param(pj, "learning_rate", p.learning_rate);
    read_param(pj, "batch_size", p.batch_size);
    read_param(pj, "hidden", p.hidden);
    read_param(pj, "held_out_fraction", p.held_out_fraction);
    read_param(pj, "quantile", p.quantile);
    read_param(pj, "hop_latency_s", p.hop_latency_s);
    read_param(pj, "synthetic_pipelines", p.synthetic_pipelines);
    read_param(pj, "trials", p.trials);
    read_param(pj, "ladder", p.ladder);
    read_param(pj, "threshold", p.threshold);
  }
  return spec;
}

ExperimentSpec load_experiment_spec(const fs::path& path) {
  return experiment_spec_from_json(read_json(path), path.parent_path());
}

Json to_json(const ExperimentSpec& spec) {
  const auto& p = spec.params;
  return Json{{"scenario", to_string(spec.scenario)},
              {"suite", spec.suite.filename().string()},
              {"cluster", spec.cluster.filename().string()},
              {"catalog", spec.catalog.filename().string()},
              {"workload", spec.workload.filename().string()},
              {"seed", spec.seed},
              {"params",
               Json{{"rates_per_function", p.rates_per_function},
                    {"epochs", p.epochs},
                    {"learning_rate", p.learning_rate},
                    {"batch_size", p.batch_size},
                    {"hidden", p.hidden},
                    {"held_out_fraction", p.held_out_fraction},
                    {"quantile", p.quantile},
                    {"hop_latency_s", p.hop_latency_s},
                    {"synthetic_pipelines", p.synthetic_pipelines},
                    {"trials", p.trials},
                    {"ladder", p.ladder},
                    {"threshold", p.threshold}}}};
}

Testbed load_testbed(const ExperimentSpec& spec) {
  Testbed bed;
  bed.suite = load_suite(spec.suite);
  bed.cluster = load_cluster(spec.cluster);
  bed.catalog = load_catalog(spec.catalog);
  bed.workload = load_workload(spec.workload);
  bed.workload.seed = mix_seed(spec.seed, 0);
  bed.pricing = bed.suite.pricing.value_or(PricingScheme{});
  validate(bed.cluster);
  validate(bed.catalog);
  return bed;
}

TrainingOptions training_options(const ExperimentParams& params, LossKind loss, std::uint64_t seed) {
  TrainingOptions o;
  o.hidden = params.hidden;
  o.learning_rate = params.learning_rate;
  o.epochs = params.epochs;
  o.batch_size = params.batch_size;
  o.held_out_fraction = params.held_out_fraction;
  o.loss = loss;
  o.seed = seed;
  return o;
}

DataGenerationOptions data_options(const ExperimentParams& params, const WorkloadSpec& workload) {
  DataGenerationOptions o;
  o.duration_s = workload.duration_s;
  o.arrival_kind = workload.arrival_kind;
  o.seed = workload.seed;
  o.quantile = params.quantile;
  o.simulation.hop_latency_s = params.hop_latency_s;
  return o;
}

ModelMap PipelineTraining::models() const {
  ModelMap out;
  for (const auto& [fid, r] : results) out.emplace(fid, r.model);
  return out;
}

std::map<std::string, std::vector<TrainingSample>> build_datasets(const PipelineSpec& pipeline,
                                                                  const FunctionTable& functions,
                                                                  const Testbed& bed,
                                                                  const ExperimentParams& params) {
  auto options = data_options(params, bed.workload);
  options.quantile = stage_quantile(pipeline, params.quantile);
  std::map<std::string, std::vector<TrainingSample>> out;
  for (const auto& fid : pipeline.functions) {
    if (out.contains(fid)) continue;
    const auto& f = lookup(functions, fid);
    const double budget = stage_deadline(pipeline, functions, fid, options.simulation);
    // Each container gets its own rate grid so slow containers are not
    // swamped by rates they can never serve.
    auto& samples = out[fid];
    for (const auto& w : bed.catalog.container_grid) {
      if (w.mem_mb < f.ref_mem) continue;
      const auto rates = training_rates(f, w, bed.catalog.class_map, params.rates_per_function);
      const auto part = generate_function_data(f, budget, bed.cluster, std::span(&w, 1), bed.catalog.class_map, rates,
                                               options);
      samples.insert(samples.end(), part.begin(), part.end());
    }
  }
  return out;
}

PipelineTraining train_pipeline(const std::map<std::string, std::vector<TrainingSample>>& datasets,
                                const ExperimentParams& params, LossKind loss, std::uint64_t seed) {
  PipelineTraining out;
  out.datasets = datasets;
  std::uint64_t stream = 0;
  for (const auto& [fid, samples] : datasets) {
    out.results.emplace(fid, train(samples, training_options(params, loss, mix_seed(seed, stream++))));
  }
  return out;
}

SimulationResult simulate_selection(const PipelineSpec& pipeline, const FunctionTable& functions,
                                    const ConfigurationMap& configs, const Testbed& bed, double rate,
                                    const ExperimentParams& params) {
  WorkloadSpec w = bed.workload;
  w.rate = rate;
  SimulationOptions options;
  options.hop_latency_s = params.hop_latency_s;
  return simulate(pipeline, functions, configs, bed.cluster, w, options);
}

namespace {

const ContainerConfig& fastest_container(const ConfigurationCatalog& catalog) {
  return *std::max_element(catalog.container_grid.begin(), catalog.container_grid.end(),
                           [](const ContainerConfig& a, const ContainerConfig& b) {
                             return a.cpus != b.cpus ? a.cpus < b.cpus : a.mem_mb < b.mem_mb;
                           });
}

SyntheticPipeline suite_pipeline(const PipelineSuite& suite, const PipelineSpec& p) {
  SyntheticPipeline out{p, {}};
  for (const auto& fid : p.functions) out.functions.emplace(fid, lookup(suite.functions, fid));
  return out;
}

}  // namespace

std::vector<SyntheticPipeline> synthetic_pipelines(const Testbed& bed, std::size_t count, std::uint64_t seed) {
  std::vector<SyntheticPipeline> out;
  const auto& largest = fastest_container(bed.catalog);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(random_pipeline("syn" + std::to_string(i), mix_seed(seed, i), largest,
                                  bed.catalog.class_map.classes.back()));
  }
  return out;
}

SelectionCase selection_case(const SyntheticPipeline& p, const Testbed& bed, const ExperimentParams& params,
                             std::uint64_t seed, unsigned jobs) {
  SelectionCase c;
  c.pipeline_id = p.pipeline.id;
  c.functions = p.pipeline.functions.size();
  c.target_rate = p.pipeline.target_rate;
  c.deadline_s = p.pipeline.deadline_s;

  const auto datasets = build_datasets(p.pipeline, p.functions, bed, params);
  const auto training = train_pipeline(datasets, params, LossKind::kCce, seed);
  SimulationOptions sim;
  sim.hop_latency_s = params.hop_latency_s;
  try {
    const auto report = select_configuration(p.pipeline, p.functions, training.models(), bed.catalog,
                                             p.pipeline.target_rate, bed.cluster, bed.pricing, sim);
    c.selected = true;
    c.selected_cost = report.total_monthly_cost;
    try {
      const auto r = simulate_selection(p.pipeline, p.functions, report.configurations(), bed,
                                        p.pipeline.target_rate, params);
      c.pct_quantile = pct_quantile(r, params.quantile);
      c.slo_met = meets_slo(r, p.pipeline.deadline_s, params.quantile);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kPackingFailed) throw;
      c.note = "selection does not pack";
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoFeasibleConfiguration) throw;
    c.note = "no selection";
  }

  WorkloadSpec w = bed.workload;
  w.rate = p.pipeline.target_rate;
  OracleOptions oo;
  oo.quantile = params.quantile;
  oo.jobs = jobs;
  oo.simulation = sim;
  try {
    const auto oracle = grid_search_oracle(p.pipeline, p.functions, bed.catalog, bed.cluster, w, bed.pricing, oo);
    for (const auto& [fid, cfg] : oracle.optimal) c.oracle_cost += monthly_cost(cfg, bed.pricing);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoFeasibleConfiguration) throw;
    c.oracle_cost = std::numeric_limits<double>::quiet_NaN();
    c.note += c.note.empty() ? "oracle infeasible" : "; oracle infeasible";
  }
  return c;
}

Registry build_registry(const std::vector<KnownPipeline>& known, const Testbed& bed, const ExperimentParams& params,
                        std::uint64_t seed) {
  Registry registry;
  SimulationOptions sim;
  sim.hop_latency_s = params.hop_latency_s;
  for (std::size_t i = 0; i < known.size(); ++i) {
    const auto& k = known[i];
    KnownPipelineEntry entry;
    entry.pipeline = k.pipeline.pipeline;
    entry.functions = k.pipeline.functions;
    entry.callgraph = k.graph;
    const auto datasets = build_datasets(entry.pipeline, entry.functions, bed, params);
    entry.models = train_pipeline(datasets, params, LossKind::kCce, mix_seed(seed, i)).models();
    const auto report = select_configuration(entry.pipeline, entry.functions, entry.models, bed.catalog,
                                             entry.pipeline.target_rate, bed.cluster, bed.pricing, sim);
    entry.observed_throughput = sustainable_throughput(entry.pipeline, entry.functions, report.configurations(),
                                                       bed.cluster, bed.workload, params.quantile, sim);
    registry.register_entry(std::move(entry));
  }
  return registry;
}

std::vector<LadderTrial> perturbation_ladder(const Registry& registry, const std::vector<KnownPipeline>& known,
                                             const Testbed& bed, const ExperimentParams& params, std::uint64_t seed) {
  if (known.empty()) throw Error(ErrorCode::kInvalidArgument, "no known pipelines to perturb");
  SimulationOptions sim;
  sim.hop_latency_s = params.hop_latency_s;
  std::vector<LadderTrial> out;
  for (std::size_t t = 0; t < params.trials; ++t) {
    const auto& source = known[t % known.size()];
    for (std::size_t level = 0; level < params.ladder.size(); ++level) {
      LadderTrial row;
      row.trial = t;
      row.edits = params.ladder[level];
      row.source_id = source.pipeline.pipeline.id;
      const auto graph =
          perturb_callgraph(source.graph, row.edits, source.labels, mix_seed(seed, t));
      const auto variant = derive_variant(source.pipeline, source.graph, graph,
                                          row.source_id + ".t" + std::to_string(t) + ".e" + std::to_string(row.edits));

      const auto outcome = registry.provision_agnostic(graph, variant.pipeline.target_rate, variant.pipeline.deadline_s,
                                                       std::numeric_limits<double>::infinity(), bed.catalog,
                                                       bed.cluster, bed.pricing);
      const auto& matched = registry.at(*outcome.decision.matched);
      row.matched_id = matched.pipeline.id;
      row.ged = outcome.decision.distance.distance;
      row.work_ratio = callgraph_work(graph) / callgraph_work(source.graph);
      row.within_threshold = row.ged <= params.threshold;
      row.thr_similar = matched.observed_throughput;

      // The borrowed selection covers the matched pipeline's stages; apply it
      // to the variant's stages in pipeline order.
      ConfigurationMap configs;
      const auto& chosen = outcome.selection->functions;
      for (std::size_t k = 0; k < variant.pipeline.functions.size(); ++k) {
        configs[variant.pipeline.functions[k]] = chosen[std::min(k, chosen.size() - 1)].chosen;
      }
      row.thr_agnostic = sustainable_throughput(variant.pipeline, variant.functions, configs, bed.cluster,
                                                bed.workload, params.quantile, sim);
      row.ps = deviation_similarity(row.thr_agnostic, row.thr_similar);
      row.ps_literal = performance_similarity(row.thr_agnostic, row.thr_similar);
      out.push_back(row);
    }
  }
  return out;
}

bool ExperimentReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CriterionCheck& c) { return c.passed; });
}

namespace {

std::string fmt(double v, int digits = 4) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

class Bundle {
 public:
  Bundle(const ExperimentSpec& spec, ExperimentReport& report) : spec_(spec), report_(report) {
    fs::create_directories(spec.output_dir);
  }

  void text(const std::string& name, const std::string& content) {
    const auto path = spec_.output_dir / name;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_text(path, content);
    record(name);
  }
  void record(const std::string& name) { report_.artifacts.push_back(name); }
  void json(const std::string& name, const Json& doc) { text(name, doc.dump(2) + "\n"); }

  void check(std::string name, bool passed, std::string detail) {
    report_.checks.push_back({std::move(name), passed, std::move(detail)});
  }

 private:
  const ExperimentSpec& spec_;
  ExperimentReport& report_;
};

struct FunctionScore {
  std::string pipeline, function;
  LossKind loss;
  const TrainingResult* result;
};

std::string score_table(const std::vector<FunctionScore>& rows) {
  std::ostringstream out;
  out << "pipeline,function,loss,train_size,held_out_size,accuracy,macro_f1,macro_precision,macro_recall,loss_value\n";
  for (const auto& r : rows) {
    const auto& m = r.result->history.back().held_out;
    out << r.pipeline << ',' << r.function << ',' << to_string(r.loss) << ',' << r.result->train_size << ','
        << r.result->held_out_size << ',' << format_number(m.accuracy) << ',' << format_number(m.macro_f1) << ','
        << format_number(m.macro_precision) << ',' << format_number(m.macro_recall) << ','
        << format_number(m.mean_loss) << '\n';
  }
  return out.str();
}

// Trains every suite function under each loss, writing datasets, models and
// histories; returns per-function scores in suite order.
std::vector<FunctionScore> train_suite(const Testbed& bed, const ExperimentSpec& spec,
                                       const std::vector<LossKind>& losses, Bundle& bundle,
                                       std::vector<PipelineTraining>& keep) {
  keep.clear();
  keep.reserve(bed.suite.pipelines.size() * losses.size());
  std::vector<FunctionScore> rows;
  for (std::size_t pi = 0; pi < bed.suite.pipelines.size(); ++pi) {
    const auto& p = bed.suite.pipelines[pi];
    const auto datasets = build_datasets(p, bed.suite.functions, bed, spec.params);
    for (const auto& [fid, samples] : datasets) {
      const std::string name = "datasets/" + p.id + "." + fid + ".csv";
      fs::create_directories(spec.output_dir / "datasets");
      write_dataset_csv(spec.output_dir / name, samples, bed.catalog.class_map);
      bundle.record(name);
    }
    for (auto loss : losses) {
      keep.push_back(train_pipeline(datasets, spec.params, loss, mix_seed(spec.seed, 1 + pi)));
      for (const auto& fid : p.functions) {
        const auto it = keep.back().results.find(fid);
        if (it == keep.back().results.end()) continue;
        if (std::any_of(rows.begin(), rows.end(), [&](const FunctionScore& r) {
              return r.pipeline == p.id && r.function == fid && r.loss == loss;
            })) {
          continue;
        }
        const std::string stem = p.id + "." + fid + "." + to_string(loss);
        bundle.json("models/" + stem + ".model.json", to_json(it->second.model));
        bundle.text("metrics/" + stem + ".csv", metrics_history_csv(it->second.history));
        rows.push_back({p.id, fid, loss, &it->second});
      }
    }
  }
  return rows;
}

void run_train_eval(const Testbed& bed, const ExperimentSpec& spec, Bundle& bundle) {
  std::vector<PipelineTraining> keep;
  const auto rows = train_suite(bed, spec, {LossKind::kCce}, bundle, keep);
  bundle.text("train_eval.csv", score_table(rows));
  double min_acc = 1.0, min_f1 = 1.0;
  std::string worst_acc, worst_f1;
  for (const auto& r : rows) {
    const auto& m = r.result->history.back().held_out;
    if (m.accuracy < min_acc) min_acc = m.accuracy, worst_acc = r.pipeline + "/" + r.function;
    if (m.macro_f1 < min_f1) min_f1 = m.macro_f1, worst_f1 = r.pipeline + "/" + r.function;
  }
  bundle.check("held-out accuracy >= 0.90 for every function (CCE)", min_acc >= 0.90,
               "minimum " + fmt(min_acc) + (worst_acc.empty() ? "" : " at " + worst_acc));
  bundle.check("held-out macro-F1 >= 0.85 for every function (CCE)", min_f1 >= 0.85,
               "minimum " + fmt(min_f1) + (worst_f1.empty() ? "" : " at " + worst_f1));
}

void run_loss_comparison(const Testbed& bed, const ExperimentSpec& spec, Bundle& bundle) {
  const std::vector<LossKind> losses{LossKind::kCce, LossKind::kKlde, LossKind::kPsse};
  std::vector<PipelineTraining> keep;
  const auto rows = train_suite(bed, spec, losses, bundle, keep);
  bundle.text("loss_comparison.csv", score_table(rows));

  struct Average {
    LossKind loss;
    double accuracy, f1, precision, recall, loss_value;
  };
  std::vector<Average> averages;
  for (auto loss : losses) {
    std::vector<double> acc, f1, pr, rc, lv;
    for (const auto& r : rows) {
      if (r.loss != loss) continue;
      const auto& m = r.result->history.back().held_out;
      acc.push_back(m.accuracy);
      f1.push_back(m.macro_f1);
      pr.push_back(m.macro_precision);
      rc.push_back(m.macro_recall);
      lv.push_back(m.mean_loss);
    }
    averages.push_back({loss, mean(acc), mean(f1), mean(pr), mean(rc), mean(lv)});
  }
  auto ranked = averages;
  std::stable_sort(ranked.begin(), ranked.end(), [](const Average& a, const Average& b) {
    return a.accuracy != b.accuracy ? a.accuracy > b.accuracy : a.f1 > b.f1;
  });
  std::ostringstream table;
  table << "rank,loss,accuracy,macro_f1,macro_precision,macro_recall,loss_value\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& a = ranked[i];
    table << i + 1 << ',' << to_string(a.loss) << ',' << format_number(a.accuracy) << ',' << format_number(a.f1)
          << ',' << format_number(a.precision) << ',' << format_number(a.recall) << ','
          << format_number(a.loss_value) << '\n';
  }
  bundle.text("loss_ranking.csv", table.str());

  const auto& cce = averages.front();
  const double best = ranked.front().accuracy;
  bundle.check("CCE mean accuracy within 2 points of the best loss", cce.accuracy >= best - 0.02,
               "CCE " + fmt(100 * cce.accuracy, 2) + "%, best " + to_string(ranked.front().loss) + " " +
                   fmt(100 * best, 2) + "%");
  bundle.check("CCE mean held-out accuracy >= 0.90", cce.accuracy >= 0.90, fmt(cce.accuracy));
  bundle.check("CCE mean held-out macro-F1 >= 0.85", cce.f1 >= 0.85, fmt(cce.f1));
}

std::string selection_cases_csv(const std::vector<SelectionCase>& cases) {
  std::ostringstream out;
  out << "pipeline,functions,target_rate,deadline_s,selected,selected_cost,oracle_cost,cost_ratio,slo_met,"
         "pct_quantile,note\n";
  for (const auto& c : cases) {
    const double ratio = c.selected && std::isfinite(c.oracle_cost) && c.oracle_cost > 0.0
                             ? c.selected_cost / c.oracle_cost
                             : std::numeric_limits<double>::quiet_NaN();
    out << c.pipeline_id << ',' << c.functions << ',' << format_number(c.target_rate) << ','
        << format_number(c.deadline_s) << ',' << (c.selected ? 1 : 0) << ',' << format_number(c.selected_cost) << ','
        << format_number(c.oracle_cost) << ',' << format_number(ratio) << ',' << (c.slo_met ? 1 : 0) << ','
        << format_number(c.pct_quantile) << ',' << c.note << '\n';
  }
  return out.str();
}

void run_throughput_cost(const Testbed& bed, const ExperimentSpec& spec, Bundle& bundle) {
  SimulationOptions sim;
  sim.hop_latency_s = spec.params.hop_latency_s;
  const auto naive = naive_max_configuration(bed.catalog);
  const double naive_cost = monthly_cost(naive, bed.pricing);

  std::ostringstream savings;
  savings << "pipeline,function,replicas,mem_mb,cpus,monthly_cost,naive_monthly_cost,saving_percent,oracle_replicas,"
             "oracle_mem_mb,oracle_cpus,oracle_monthly_cost\n";
  std::ostringstream e2e;
  e2e << "pipeline,target_rate,deadline_s,selected_cost,oracle_cost,pct_quantile,throughput,slo_met\n";
  std::vector<double> saving_values;
  bool all_met = true;
  for (std::size_t pi = 0; pi < bed.suite.pipelines.size(); ++pi) {
    const auto& p = bed.suite.pipelines[pi];
    const auto datasets = build_datasets(p, bed.suite.functions, bed, spec.params);
    const auto training = train_pipeline(datasets, spec.params, LossKind::kCce, mix_seed(spec.seed, 1 + pi));
    auto report = select_configuration(p, bed.suite.functions, training.models(), bed.catalog, p.target_rate,
                                       bed.cluster, bed.pricing, sim);
    WorkloadSpec w = bed.workload;
    w.rate = p.target_rate;
    OracleOptions oo;
    oo.quantile = spec.params.quantile;
    oo.jobs = spec.jobs;
    oo.simulation = sim;
    report.oracle = grid_search_oracle(p, bed.suite.functions, bed.catalog, bed.cluster, w, bed.pricing, oo);
    bundle.text("config_table." + p.id + ".csv", oracle_table_csv(*report.oracle));
    bundle.json("selection." + p.id + ".json", to_json(report));

    double oracle_total = 0.0;
    for (const auto& f : report.functions) {
      const auto& opt = report.oracle->optimal.at(f.function_id);
      const double opt_cost = monthly_cost(opt, bed.pricing);
      oracle_total += opt_cost;
      const double saving = cost_saving_vs_naive(f.chosen, bed.catalog, bed.pricing);
      saving_values.push_back(saving);
      savings << p.id << ',' << f.function_id << ',' << f.chosen.replicas << ','
              << format_number(f.chosen.container.mem_mb) << ',' << format_number(f.chosen.container.cpus) << ','
              << format_number(f.monthly_cost) << ',' << format_number(naive_cost) << ',' << format_number(saving)
              << ',' << opt.replicas << ',' << format_number(opt.container.mem_mb) << ','
              << format_number(opt.container.cpus) << ',' << format_number(opt_cost) << '\n';
    }
    const auto r = simulate_selection(p, bed.suite.functions, report.configurations(), bed, p.target_rate, spec.params);
    const bool met = meets_slo(r, p.deadline_s, spec.params.quantile);
    all_met = all_met && met;
    e2e << p.id << ',' << format_number(p.target_rate) << ',' << format_number(p.deadline_s) << ','
        << format_number(report.total_monthly_cost) << ',' << format_number(oracle_total) << ','
        << format_number(pct_quantile(r, spec.params.quantile)) << ',' << format_number(r.throughput) << ','
        << (met ? 1 : 0) << '\n';
  }
  bundle.text("savings.csv", savings.str());
  bundle.text("selection_e2e.csv", e2e.str());

  const double avg = mean(saving_values);
  const double best = saving_values.empty() ? 0.0 : *std::max_element(saving_values.begin(), saving_values.end());
  bundle.check("average saving vs naive maximum >= 50%", avg >= 50.0,
               "average " + fmt(avg, 2) + "%, best " + fmt(best, 2) +
                   "% (reference range 64.86-68.32% per function, 66.245% average)");
  bundle.check("every suite selection meets its deadline end to end", all_met, all_met ? "yes" : "no");

  if (spec.params.synthetic_pipelines > 0) {
    const auto pipelines = synthetic_pipelines(bed, spec.params.synthetic_pipelines, mix_seed(spec.seed, 7));
    std::vector<SelectionCase> cases;
    for (std::size_t i = 0; i < pipelines.size(); ++i) {
      cases.push_back(selection_case(pipelines[i], bed, spec.params, mix_seed(spec.seed, 1000 + i), spec.jobs));
    }
    bundle.text("selection_vs_oracle.csv", selection_cases_csv(cases));
    std::size_t met = 0, within = 0;
    double worst = 0.0;
    for (const auto& c : cases) {
      if (!c.slo_met) continue;
      ++met;
      const double ratio = c.selected_cost / c.oracle_cost;
      if (std::isfinite(ratio) && ratio <= 1.25 + 1e-12) ++within;
      if (std::isfinite(ratio)) worst = std::max(worst, ratio);
    }
    const double frac = double(met) / double(cases.size());
    bundle.check("synthetic selections meet the SLO on >= 90% of cases", frac >= 0.90,
                 std::to_string(met) + "/" + std::to_string(cases.size()) + " = " + fmt(100 * frac, 1) + "%");
    bundle.check("SLO-meeting selections cost <= 1.25x the oracle optimum", within == met,
                 std::to_string(within) + "/" + std::to_string(met) + ", worst ratio " + fmt(worst, 3));
  }
}

std::vector<KnownPipeline> known_pipelines(const Testbed& bed) {
  std::vector<KnownPipeline> out;
  for (const auto& p : bed.suite.pipelines) {
    const auto it = bed.suite.callgraphs.find(p.id);
    if (it == bed.suite.callgraphs.end()) continue;
    KnownPipeline k{suite_pipeline(bed.suite, p), it->second, {}};
    for (const auto& v : it->second.vertices()) {
      if (std::find(k.labels.begin(), k.labels.end(), v.label) == k.labels.end()) k.labels.push_back(v.label);
    }
    std::sort(k.labels.begin(), k.labels.end());
    out.push_back(std::move(k));
  }
  if (out.empty()) throw Error(ErrorCode::kDataError, "agnostic-ged needs pipelines with call graphs");
  return out;
}

void run_agnostic_ged(const Testbed& bed, const ExperimentSpec& spec, Bundle& bundle) {
  const auto known = known_pipelines(bed);
  const auto registry = build_registry(known, bed, spec.params, mix_seed(spec.seed, 2));
  const auto trials = perturbation_ladder(registry, known, bed, spec.params, mix_seed(spec.seed, 3));

  std::ostringstream out;
  out << "trial,edits,source,matched,ged,work_ratio,within_threshold,thr_similar,thr_agnostic,ps,ps_literal\n";
  std::vector<double> geds, ps;
  double min_ps_ged0 = std::numeric_limits<double>::infinity(), min_ps_ged2 = min_ps_ged0;
  std::size_t ged0 = 0, ged2 = 0;
  for (const auto& t : trials) {
    out << t.trial << ',' << t.edits << ',' << t.source_id << ',' << t.matched_id << ',' << format_number(t.ged)
        << ',' << format_number(t.work_ratio) << ',' << (t.within_threshold ? 1 : 0) << ',' << format_number(t.thr_similar) << ','
        << format_number(t.thr_agnostic) << ',' << format_number(t.ps) << ',' << format_number(t.ps_literal) << '\n';
    geds.push_back(t.ged);
    ps.push_back(t.ps);
    if (t.ged == 0.0) ++ged0, min_ps_ged0 = std::min(min_ps_ged0, t.ps);
    if (t.ged <= 2.0) ++ged2, min_ps_ged2 = std::min(min_ps_ged2, t.ps);
  }
  bundle.text("agnostic_ged.csv", out.str());

  std::ostringstream summary;
  summary << "edits,trials,mean_ged,mean_ps,min_ps,matched_source\n";
  for (auto level : spec.params.ladder) {
    std::vector<double> g, s;
    std::size_t same = 0;
    for (const auto& t : trials) {
      if (t.edits != level) continue;
      g.push_back(t.ged);
      s.push_back(t.ps);
      if (t.matched_id == t.source_id) ++same;
    }
    summary << level << ',' << g.size() << ',' << format_number(mean(g)) << ',' << format_number(mean(s)) << ','
            << format_number(s.empty() ? 0.0 : *std::min_element(s.begin(), s.end())) << ',' << same << '\n';
  }
  bundle.text("agnostic_ged_summary.csv", summary.str());

  const double rho = geds.size() >= 2 ? spearman(geds, ps) : 0.0;
  bundle.check("ps >= 95% at GED 0", ged0 > 0 && min_ps_ged0 >= 95.0,
               std::to_string(ged0) + " cases, minimum " + fmt(min_ps_ged0, 2) + "%");
  bundle.check("ps >= 90% at GED <= 2", ged2 > 0 && min_ps_ged2 >= 90.0,
               std::to_string(ged2) + " cases, minimum " + fmt(min_ps_ged2, 2) + "% (reference: 96.4% at GED 2)");
  bundle.check("Spearman(GED, ps) <= -0.8", rho <= -0.8, "rho = " + fmt(rho, 4));
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  ExperimentReport report;
  report.scenario = spec.scenario;
  const auto bed = load_testbed(spec);
  Bundle bundle(spec, report);
  switch (spec.scenario) {
    case Scenario::kTrainEval: run_train_eval(bed, spec, bundle); break;
    case Scenario::kLossComparison: run_loss_comparison(bed, spec, bundle); break;
    case Scenario::kThroughputCost: run_throughput_cost(bed, spec, bundle); break;
    case Scenario::kAgnosticGed: run_agnostic_ged(bed, spec, bundle); break;
  }

  std::ostringstream text;
  text << "scenario: " << to_string(spec.scenario) << "\nseed: " << spec.seed << "\n\nchecklist:\n";
  for (const auto& c : report.checks) {
    text << "  [" << (c.passed ? "PASS" : "FAIL") << "] " << c.name << ": " << c.detail << '\n';
  }
  text << "\nartifacts:\n";
  for (const auto& a : report.artifacts) text << "  " << a << '\n';
  report.summary = text.str();
  bundle.text("summary.txt", report.summary);

  Json checks = Json::array();
  for (const auto& c : report.checks) checks.push_back(Json{{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  Json doc{{"metadata", Json{{"generated_at", utc_now()}, {"tool", "faasprov"}}},
           {"spec", to_json(spec)},
           {"checks", checks},
           {"passed", report.passed()},
           {"artifacts", report.artifacts}};
  write_json(spec.output_dir / "summary.json", doc);
  report.artifacts.push_back("summary.json");
  return report;
}

}  // namespace faasprov

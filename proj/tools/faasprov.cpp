// faasprov command-line tool. Exit codes: 0 success, 2 data error,
// 3 infeasible, 4 size limit, 1 anything else.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include "faasprov/error.hpp"
#include "faasprov/experiment.hpp"
#include "faasprov/io.hpp"
#include "faasprov/registry.hpp"

namespace fs = std::filesystem;
using namespace faasprov;

namespace {

struct TrainArgs {
  std::string dataset, out, metrics, catalog, loss = "cce";
  std::size_t epochs = 500, batch_size = 32;
  double learning_rate = 5e-3, held_out = 0.2;
  std::vector<std::size_t> hidden{64, 64};
  std::uint64_t seed = 0;
};

struct PipelineArgs {
  std::string suite, pipeline_id, cluster, catalog, workload;
  double quantile = kDefaultSloQuantile;
};

const PipelineSpec& pick_pipeline(const PipelineSuite& suite, const std::string& id) {
  if (suite.pipelines.empty()) throw Error(ErrorCode::kDataError, "suite has no pipelines");
  return id.empty() ? suite.pipelines.front() : suite.pipeline(id);
}

ReplicaClassMap class_map_from(const std::string& catalog) {
  return catalog.empty() ? ReplicaClassMap{} : load_catalog(catalog).class_map;
}

ModelMap load_models(const fs::path& dir, const PipelineSpec& pipeline) {
  ModelMap models;
  for (const auto& fid : pipeline.functions) {
    if (!models.contains(fid)) models.emplace(fid, load_model(dir / (fid + ".model.json")));
  }
  return models;
}

void emit(const Json& doc, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << doc.dump(2) << '\n';
  } else {
    write_json(out, doc);
  }
}

int cmd_train(const TrainArgs& a) {
  const auto class_map = class_map_from(a.catalog);
  const auto samples = read_dataset_csv(a.dataset, class_map);
  TrainingOptions o;
  o.hidden = a.hidden;
  o.learning_rate = a.learning_rate;
  o.epochs = a.epochs;
  o.batch_size = a.batch_size;
  o.seed = a.seed;
  o.loss = parse_loss_kind(a.loss);
  o.held_out_fraction = a.held_out;
  o.class_map = class_map;
  const auto result = train(samples, o);
  save_model(result.model, a.out);
  const fs::path metrics = a.metrics.empty() ? fs::path(a.out).replace_extension(".metrics.csv") : fs::path(a.metrics);
  write_text(metrics, metrics_history_csv(result.history));
  const auto& m = result.history.back().held_out;
  std::cout << Json{{"loss_kind", a.loss},
                    {"seed", a.seed},
                    {"train_size", result.train_size},
                    {"held_out_size", result.held_out_size},
                    {"accuracy", m.accuracy},
                    {"macro_f1", m.macro_f1},
                    {"macro_precision", m.macro_precision},
                    {"macro_recall", m.macro_recall},
                    {"loss", m.mean_loss},
                    {"model", a.out},
                    {"metrics", metrics.string()}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_select(const PipelineArgs& a, const std::string& models_dir, std::optional<double> rate, bool oracle,
               const std::string& oracle_table, unsigned jobs, std::uint64_t seed, const std::string& out) {
  const auto suite = load_suite(a.suite);
  const auto& pipeline = pick_pipeline(suite, a.pipeline_id);
  const auto cluster = load_cluster(a.cluster);
  const auto catalog = load_catalog(a.catalog);
  const auto pricing = suite.pricing.value_or(PricingScheme{});
  const double target = rate.value_or(pipeline.target_rate);
  auto report = select_configuration(pipeline, suite.functions, load_models(models_dir, pipeline), catalog, target,
                                     cluster, pricing);
  Json doc;
  if (oracle) {
    if (a.workload.empty()) throw Error(ErrorCode::kInvalidArgument, "--oracle needs --workload");
    auto w = load_workload(a.workload);
    w.rate = target;
    w.seed = seed;
    OracleOptions oo;
    oo.quantile = a.quantile;
    oo.jobs = jobs;
    report.oracle = grid_search_oracle(pipeline, suite.functions, catalog, cluster, w, pricing, oo);
    doc = to_json(report);
    const std::string table = oracle_table.empty() ? (out.empty() || out == "-" ? "oracle_table.csv"
                                                                                   : fs::path(out).replace_extension(".oracle.csv").string())
                                                   : oracle_table;
    write_text(table, oracle_table_csv(*report.oracle));
    doc["oracle"]["table"] = table;
  } else {
    doc = to_json(report);
  }
  doc["seed"] = seed;
  emit(doc, out);
  return 0;
}

int cmd_ged(const std::string& a, const std::string& b, bool exact) {
  const auto ga = load_callgraph(a);
  const auto gb = load_callgraph(b);
  const auto r = exact ? exact_ged(ga, gb) : approx_ged(ga, gb);
  std::cout << format_number(r.distance) << '\n';
  return 0;
}

int cmd_simulate(const PipelineArgs& a, const std::string& configs_path, std::optional<double> rate,
                 std::uint64_t seed, double hop, const std::string& trace, const std::string& out) {
  const auto suite = load_suite(a.suite);
  const auto& pipeline = pick_pipeline(suite, a.pipeline_id);
  const auto cluster = load_cluster(a.cluster);
  auto w = load_workload(a.workload);
  w.rate = rate.value_or(pipeline.target_rate);
  w.seed = seed;
  const auto configs_doc = read_json(configs_path);
  ConfigurationMap configs;
  const Json& fns = configs_doc.contains("functions") ? configs_doc.at("functions") : configs_doc;
  if (fns.is_array()) {
    for (const auto& f : fns) {
      configs[f.at("function_id").get<std::string>()] = configuration_from_json(f.at("configuration"));
    }
  } else {
    for (const auto& [fid, c] : fns.items()) configs[fid] = configuration_from_json(c);
  }
  const auto result = simulate(pipeline, suite.functions, configs, cluster, w, SimulationOptions{hop});
  if (!trace.empty()) write_text(trace, trace_csv(result));
  auto doc = simulation_summary(result, a.quantile);
  doc["seed"] = seed;
  emit(doc, out);
  return 0;
}

int cmd_gendata(const PipelineArgs& a, std::size_t rates, std::uint64_t seed, const std::string& out_dir) {
  const auto suite = load_suite(a.suite);
  const auto& pipeline = pick_pipeline(suite, a.pipeline_id);
  Testbed bed;
  bed.suite = suite;
  bed.cluster = load_cluster(a.cluster);
  bed.catalog = load_catalog(a.catalog);
  bed.workload = load_workload(a.workload);
  bed.workload.seed = seed;
  ExperimentParams params;
  params.rates_per_function = rates;
  params.quantile = a.quantile;
  fs::create_directories(out_dir);
  for (const auto& [fid, samples] : build_datasets(pipeline, suite.functions, bed, params)) {
    const auto path = fs::path(out_dir) / (fid + ".csv");
    write_dataset_csv(path, samples, bed.catalog.class_map);
    std::cout << path.string() << '\n';
  }
  return 0;
}

int cmd_register(const PipelineArgs& a, const std::string& registry_dir, const std::string& graph,
                 const std::string& models_dir, std::uint64_t seed) {
  const auto suite = load_suite(a.suite);
  const auto& pipeline = pick_pipeline(suite, a.pipeline_id);
  const auto cluster = load_cluster(a.cluster);
  const auto catalog = load_catalog(a.catalog);
  auto w = load_workload(a.workload);
  w.seed = seed;
  KnownPipelineEntry entry;
  entry.pipeline = pipeline;
  for (const auto& fid : pipeline.functions) entry.functions.emplace(fid, lookup(suite.functions, fid));
  if (!graph.empty()) {
    entry.callgraph = load_callgraph(graph);
  } else if (auto it = suite.callgraphs.find(pipeline.id); it != suite.callgraphs.end()) {
    entry.callgraph = it->second;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "no call graph for '" + pipeline.id + "'; pass --graph");
  }
  entry.models = load_models(models_dir, pipeline);
  const auto report = select_configuration(pipeline, entry.functions, entry.models, catalog, pipeline.target_rate,
                                           cluster, suite.pricing.value_or(PricingScheme{}));
  entry.observed_throughput =
      sustainable_throughput(pipeline, entry.functions, report.configurations(), cluster, w, a.quantile);
  auto registry = Registry::open(registry_dir);
  const auto index = registry.register_entry(entry);
  std::cout << Json{{"pipeline_id", pipeline.id}, {"index", index}, {"observed_throughput", entry.observed_throughput}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_match(const std::string& registry_dir, const std::string& graph, double threshold, std::optional<double> rate,
              std::optional<double> deadline, const std::string& cluster_path, const std::string& catalog_path,
              double pricing_rate, const std::string& out) {
  const auto registry = Registry::open(registry_dir);
  const auto g = load_callgraph(graph);
  Json doc;
  if (rate && deadline) {
    const auto outcome = registry.provision_agnostic(g, *rate, *deadline, threshold, load_catalog(catalog_path),
                                                     load_cluster(cluster_path), PricingScheme{pricing_rate});
    const auto& d = outcome.decision;
    doc = Json{{"distance", d.distance.distance}, {"threshold", d.threshold_used}};
    if (outcome.no_similar_pipeline()) {
      doc["matched"] = nullptr;
      doc["result"] = "no similar pipeline";
    } else {
      doc["matched"] = registry.at(*d.matched).pipeline.id;
      doc["selection"] = to_json(*outcome.selection);
    }
  } else {
    const auto d = registry.find_most_similar(g, threshold);
    doc = Json{{"distance", d.distance.distance}, {"threshold", d.threshold_used}};
    doc["matched"] = d.matched ? Json(registry.at(*d.matched).pipeline.id) : Json(nullptr);
  }
  emit(doc, out);
  return 0;
}

int cmd_experiment(const std::string& spec_path, std::optional<std::uint64_t> seed, std::optional<unsigned> jobs,
                   const std::string& output_dir) {
  auto spec = load_experiment_spec(spec_path);
  if (seed) spec.seed = *seed;
  if (jobs) spec.jobs = *jobs;
  if (!output_dir.empty()) spec.output_dir = output_dir;
  const auto report = run_experiment(spec);
  std::cout << report.summary;
  return report.passed() ? 0 : 1;
}

void add_pipeline_options(CLI::App* cmd, PipelineArgs& a, bool needs_catalog, bool needs_workload) {
  cmd->add_option("--suite", a.suite, "pipeline suite JSON (functions, pipelines, pricing)")->required();
  cmd->add_option("--pipeline-id", a.pipeline_id, "pipeline to use (default: first in the suite)");
  cmd->add_option("--cluster", a.cluster, "cluster JSON")->required();
  auto* catalog = cmd->add_option("--catalog", a.catalog, "configuration catalog JSON");
  if (needs_catalog) catalog->required();
  auto* workload = cmd->add_option("--workload", a.workload, "workload JSON (duration, arrival kind)");
  if (needs_workload) workload->required();
  cmd->add_option("--quantile", a.quantile, "SLO quantile of the processing completion time")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serverless pipeline configuration provisioning"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a replica-class predictor from a dataset CSV");
  train_cmd->add_option("dataset", train_args.dataset, "dataset CSV")->required();
  train_cmd->add_option("--out", train_args.out, "model JSON to write")->required();
  train_cmd->add_option("--metrics", train_args.metrics, "per-epoch metrics CSV (default: next to the model)");
  train_cmd->add_option("--catalog", train_args.catalog, "catalog JSON supplying the replica classes");
  train_cmd->add_option("--loss", train_args.loss, "cce | klde | psse")->capture_default_str();
  train_cmd->add_option("--epochs", train_args.epochs)->capture_default_str();
  train_cmd->add_option("--learning-rate", train_args.learning_rate)->capture_default_str();
  train_cmd->add_option("--batch-size", train_args.batch_size)->capture_default_str();
  train_cmd->add_option("--hidden", train_args.hidden, "hidden layer widths")->capture_default_str();
  train_cmd->add_option("--held-out", train_args.held_out, "held-out fraction")->capture_default_str();
  train_cmd->add_option("--seed", train_args.seed)->capture_default_str();

  PipelineArgs select_args;
  std::string models_dir, oracle_table, select_out;
  std::optional<double> select_rate;
  bool oracle = false;
  unsigned select_jobs = 1;
  std::uint64_t select_seed = 0;
  auto* select_cmd = app.add_subcommand("select", "pick the cheapest predicted configuration per function");
  add_pipeline_options(select_cmd, select_args, true, false);
  select_cmd->add_option("--models", models_dir, "directory of <function>.model.json files")->required();
  select_cmd->add_option("--rate", select_rate, "target request rate (default: the pipeline's)");
  select_cmd->add_flag("--oracle", oracle, "also run the grid-search oracle (needs --workload)");
  select_cmd->add_option("--oracle-table", oracle_table, "oracle table CSV path");
  select_cmd->add_option("--jobs", select_jobs, "parallel oracle cells")->capture_default_str();
  select_cmd->add_option("--seed", select_seed)->capture_default_str();
  select_cmd->add_option("--out", select_out, "report JSON (default: stdout)");

  std::string graph_a, graph_b;
  bool exact = false;
  auto* ged_cmd = app.add_subcommand("ged", "graph edit distance between two call graphs");
  ged_cmd->add_option("a", graph_a)->required();
  ged_cmd->add_option("b", graph_b)->required();
  ged_cmd->add_flag("--exact", exact, "exact search (at most 6 vertices per graph)");

  PipelineArgs sim_args;
  std::string configs_path, trace_path, sim_out;
  std::optional<double> sim_rate;
  std::uint64_t sim_seed = 0;
  double hop = 0.0;
  auto* sim_cmd = app.add_subcommand("simulate", "simulate a pipeline under given configurations");
  add_pipeline_options(sim_cmd, sim_args, false, true);
  sim_cmd->add_option("--configs", configs_path, "selection report or {function: configuration} JSON")->required();
  sim_cmd->add_option("--rate", sim_rate);
  sim_cmd->add_option("--seed", sim_seed)->capture_default_str();
  sim_cmd->add_option("--hop-latency", hop)->capture_default_str();
  sim_cmd->add_option("--trace", trace_path, "per-request trace CSV");
  sim_cmd->add_option("--out", sim_out, "summary JSON (default: stdout)");

  PipelineArgs data_args;
  std::size_t rates = 40;
  std::uint64_t data_seed = 0;
  std::string data_out;
  auto* data_cmd = app.add_subcommand("gendata", "generate labelled training datasets by simulation");
  add_pipeline_options(data_cmd, data_args, true, true);
  data_cmd->add_option("--rates", rates, "request rates per function")->capture_default_str();
  data_cmd->add_option("--seed", data_seed)->capture_default_str();
  data_cmd->add_option("--out-dir", data_out)->required();

  PipelineArgs reg_args;
  std::string registry_dir, reg_graph, reg_models;
  std::uint64_t reg_seed = 0;
  auto* reg_cmd = app.add_subcommand("register", "add a known pipeline and its models to a registry");
  add_pipeline_options(reg_cmd, reg_args, true, true);
  reg_cmd->add_option("--registry", registry_dir)->required();
  reg_cmd->add_option("--graph", reg_graph, "call graph JSON (default: from the suite)");
  reg_cmd->add_option("--models", reg_models)->required();
  reg_cmd->add_option("--seed", reg_seed)->capture_default_str();

  std::string match_registry, match_graph, match_cluster, match_catalog, match_out;
  double threshold = kDefaultSimilarityThreshold, pricing_rate = PricingScheme{}.rate_per_gb_second;
  std::optional<double> match_rate, match_deadline;
  auto* match_cmd = app.add_subcommand("match", "find the most similar registered pipeline");
  match_cmd->add_option("--registry", match_registry)->required();
  match_cmd->add_option("--graph", match_graph)->required();
  match_cmd->add_option("--threshold", threshold)->capture_default_str();
  match_cmd->add_option("--rate", match_rate, "provision at this rate (with --deadline)");
  match_cmd->add_option("--deadline", match_deadline);
  match_cmd->add_option("--cluster", match_cluster);
  match_cmd->add_option("--catalog", match_catalog);
  match_cmd->add_option("--pricing-rate", pricing_rate, "price per GB-second")->capture_default_str();
  match_cmd->add_option("--out", match_out);

  std::string spec_path, exp_out;
  std::optional<std::uint64_t> exp_seed;
  std::optional<unsigned> exp_jobs;
  auto* exp_cmd = app.add_subcommand("experiment", "run an evaluation scenario and write its artifacts");
  exp_cmd->add_option("spec", spec_path, "experiment spec JSON")->required();
  exp_cmd->add_option("--seed", exp_seed, "override the spec seed");
  exp_cmd->add_option("--jobs", exp_jobs, "parallel oracle cells");
  exp_cmd->add_option("--output-dir", exp_out, "override the spec output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train_cmd) return cmd_train(train_args);
    if (*select_cmd) {
      return cmd_select(select_args, models_dir, select_rate, oracle, oracle_table, select_jobs, select_seed,
                        select_out);
    }
    if (*ged_cmd) return cmd_ged(graph_a, graph_b, exact);
    if (*sim_cmd) return cmd_simulate(sim_args, configs_path, sim_rate, sim_seed, hop, trace_path, sim_out);
    if (*data_cmd) return cmd_gendata(data_args, rates, data_seed, data_out);
    if (*reg_cmd) return cmd_register(reg_args, registry_dir, reg_graph, reg_models, reg_seed);
    if (*match_cmd) {
      if (match_rate.has_value() != match_deadline.has_value()) {
        throw Error(ErrorCode::kInvalidArgument, "--rate and --deadline go together");
      }
      if (match_rate && (match_cluster.empty() || match_catalog.empty())) {
        throw Error(ErrorCode::kInvalidArgument, "provisioning needs --cluster and --catalog");
      }
      return cmd_match(match_registry, match_graph, threshold, match_rate, match_deadline, match_cluster,
                       match_catalog, pricing_rate, match_out);
    }
    if (*exp_cmd) return cmd_experiment(spec_path, exp_seed, exp_jobs, exp_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

#pragma once

// End-to-end evaluation scenarios: dataset generation and training per
// function, selection against the grid-search oracle, savings against the
// naive maximum, and the call-graph perturbation ladder for agnostic
// pipelines. Each scenario writes CSV/JSON artifacts plus a summary with a
// pass/fail checklist.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "faasprov/io.hpp"
#include "faasprov/predictor.hpp"
#include "faasprov/provisioner.hpp"
#include "faasprov/registry.hpp"
#include "faasprov/simulator.hpp"
#include "faasprov/workloads.hpp"

namespace faasprov {

enum class Scenario { kTrainEval, kLossComparison, kThroughputCost, kAgnosticGed };

const char* to_string(Scenario s);
Scenario parse_scenario(const std::string& text);

struct ExperimentParams {
  std::size_t rates_per_function = 40;
  std::size_t epochs = 500;
  double learning_rate = 5e-3;
  std::size_t batch_size = 32;
  std::vector<std::size_t> hidden{64, 64};
  double held_out_fraction = 0.2;
  double quantile = kDefaultSloQuantile;
  double hop_latency_s = 0.0;
  // throughput-cost: extra seeded synthetic pipelines checked against the oracle
  std::size_t synthetic_pipelines = 0;
  // agnostic-ged
  std::size_t trials = 30;
  std::vector<std::size_t> ladder{0, 1, 2, 4, 8};
  double threshold = kDefaultSimilarityThreshold;
};

struct ExperimentSpec {
  Scenario scenario = Scenario::kTrainEval;
  std::filesystem::path suite, cluster, catalog, workload;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  unsigned jobs = 1;
  ExperimentParams params;
};

// Relative paths resolve against the spec file's directory. Throws DataError
// when a referenced file is missing.
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);
ExperimentSpec experiment_spec_from_json(const Json& j, const std::filesystem::path& base_dir = {});
Json to_json(const ExperimentSpec& spec);

struct Testbed {
  PipelineSuite suite;
  ClusterSpec cluster;
  ConfigurationCatalog catalog;
  WorkloadSpec workload;  // duration, arrival kind, seed; the rate is per use
  PricingScheme pricing;
};

Testbed load_testbed(const ExperimentSpec& spec);

TrainingOptions training_options(const ExperimentParams& params, LossKind loss, std::uint64_t seed);
DataGenerationOptions data_options(const ExperimentParams& params, const WorkloadSpec& workload);

struct PipelineTraining {
  std::map<std::string, std::vector<TrainingSample>> datasets;
  std::map<std::string, TrainingResult> results;

  ModelMap models() const;
};

// Datasets over training_rates() for every function, then one model each.
std::map<std::string, std::vector<TrainingSample>> build_datasets(const PipelineSpec& pipeline,
                                                                  const FunctionTable& functions,
                                                                  const Testbed& bed,
                                                                  const ExperimentParams& params);
PipelineTraining train_pipeline(const std::map<std::string, std::vector<TrainingSample>>& datasets,
                                 const ExperimentParams& params, LossKind loss, std::uint64_t seed);

struct SelectionCase {
  std::string pipeline_id;
  std::size_t functions = 0;
  double target_rate = 0.0;
  double deadline_s = 0.0;
  bool selected = false;  // false: selection or oracle found nothing
  double selected_cost = 0.0;
  double oracle_cost = 0.0;
  bool slo_met = false;   // assembled selection, simulated end to end
  double pct_quantile = 0.0;
  std::string note;
};

// Assembled end-to-end check of a configuration map at the pipeline's rate.
SimulationResult simulate_selection(const PipelineSpec& pipeline, const FunctionTable& functions,
                                    const ConfigurationMap& configs, const Testbed& bed, double rate,
                                    const ExperimentParams& params);

SelectionCase selection_case(const SyntheticPipeline& p, const Testbed& bed, const ExperimentParams& params,
                             std::uint64_t seed, unsigned jobs);

std::vector<SyntheticPipeline> synthetic_pipelines(const Testbed& bed, std::size_t count, std::uint64_t seed);

struct LadderTrial {
  std::size_t trial = 0;
  std::size_t edits = 0;
  std::string source_id;
  std::string matched_id;
  double ged = 0.0;
  double work_ratio = 1.0;  // callgraph_work(variant) / callgraph_work(source)
  bool within_threshold = false;
  double thr_similar = 0.0;
  double thr_agnostic = 0.0;
  double ps = 0.0;          // deviation reading
  double ps_literal = 0.0;  // performance_similarity as written
};

struct KnownPipeline {
  SyntheticPipeline pipeline;
  CallGraph graph;
  std::vector<std::string> labels;  // vocabulary used when perturbing
};

// Registers every known pipeline (training its models and measuring its
// sustainable throughput at the selected configuration).
Registry build_registry(const std::vector<KnownPipeline>& known, const Testbed& bed, const ExperimentParams& params,
                        std::uint64_t seed);

std::vector<LadderTrial> perturbation_ladder(const Registry& registry, const std::vector<KnownPipeline>& known,
                                             const Testbed& bed, const ExperimentParams& params, std::uint64_t seed);

struct CriterionCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentReport {
  Scenario scenario = Scenario::kTrainEval;
  std::vector<CriterionCheck> checks;
  std::vector<std::string> artifacts;  // relative to the output directory
  std::string summary;

  bool passed() const;
};

ExperimentReport run_experiment(const ExperimentSpec& spec);

}  // namespace faasprov

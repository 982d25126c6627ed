#pragma once

// Configuration selection: enumerate the catalog, pick the cheapest
// predictor-backed configuration per function, compare against the exact
// grid-search oracle, and report cost and throughput-similarity figures.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "faasprov/model.hpp"
#include "faasprov/predictor.hpp"
#include "faasprov/simulator.hpp"

namespace faasprov {

struct ConfigurationCatalog {
  std::vector<ContainerConfig> container_grid;
  ReplicaClassMap class_map;
};

void validate(const ConfigurationCatalog& catalog);

// Container order major, replica class minor.
std::vector<Configuration> enumerate(const ConfigurationCatalog& catalog);

using ModelMap = std::map<std::string, PredictionModel>;  // function id -> model

struct FunctionSelection {
  std::string function_id;
  Configuration chosen;
  std::vector<double> class_probabilities;  // softmax output for the chosen container
  double slo_probability = 0.0;             // mass on classes >= the chosen class
  double monthly_cost = 0.0;
};

struct OracleRow {
  std::string function_id;
  Configuration config;
  bool deployable = true;  // false when the replicas cannot be packed
  double throughput = 0.0;
  double monthly_cost = 0.0;
  double pct_quantile = 0.0;
  bool slo_met = false;
};

struct OracleResult {
  std::map<std::string, Configuration> optimal;
  std::vector<OracleRow> table;
};

struct SelectionReport {
  std::string pipeline_id;
  double target_rate = 0.0;
  std::vector<FunctionSelection> functions;  // pipeline order, one per distinct function
  double total_monthly_cost = 0.0;
  std::optional<OracleResult> oracle;

  ConfigurationMap configurations() const;
};

// For every container, ask the model for a replica count at `rate`, raised to
// the smallest class with replicas / exec_time > rate (containers where no
// class gets there are dropped); keep the candidates that fit the cluster and
// whose bare service time fits the function's deadline share, then take the
// cheapest (ties: fewer replicas, less memory, fewer CPUs). Throws
// NoFeasibleConfiguration when a function has no candidate.
SelectionReport select_configuration(const PipelineSpec& pipeline, const FunctionTable& functions,
                                     const ModelMap& models, const ConfigurationCatalog& catalog, double rate,
                                     const ClusterSpec& cluster, const PricingScheme& pricing,
                                     const SimulationOptions& options = {});

struct OracleOptions {
  double quantile = kDefaultSloQuantile;  // end to end; stages are checked at stage_quantile
  unsigned jobs = 1;
  SimulationOptions simulation;
};

// Simulates every catalog point for every function against its deadline
// share at the workload's rate and keeps the cheapest one that meets it.
OracleResult grid_search_oracle(const PipelineSpec& pipeline, const FunctionTable& functions,
                                const ConfigurationCatalog& catalog, const ClusterSpec& cluster,
                                const WorkloadSpec& workload, const PricingScheme& pricing,
                                const OracleOptions& options = {});

// |1 - (agnostic - similar) / similar| * 100. Throws ZeroBaseline when
// similar == 0.
double performance_similarity(double thr_agnostic, double thr_similar);

// (1 - |agnostic - similar| / similar) * 100. Agrees with
// performance_similarity for similar <= agnostic <= 2 * similar; when the
// agnostic pipeline is slower the literal form exceeds 100, this one does not.
double deviation_similarity(double thr_agnostic, double thr_similar);

// Naive maximum: the largest container (by memory, then CPU) at the largest class.
Configuration naive_max_configuration(const ConfigurationCatalog& catalog);

double cost_saving_vs_naive(const Configuration& selected, const ConfigurationCatalog& catalog,
                            const PricingScheme& pricing);

}  // namespace faasprov

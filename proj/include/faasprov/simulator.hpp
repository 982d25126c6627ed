#pragma once

// Deterministic discrete-event simulation of a function pipeline. Each stage
// is a multi-server FIFO queue whose servers are the stage's replicas; a
// replica pays its function's init time on the first request it serves.
// Requests visit stages in pipeline order.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "faasprov/model.hpp"
#include "faasprov/predictor.hpp"

namespace faasprov {

enum class ArrivalKind { kUniform, kPoisson };

const char* to_string(ArrivalKind kind);
ArrivalKind parse_arrival_kind(const std::string& text);

struct WorkloadSpec {
  double rate = 1.0;  // requests/second
  double duration_s = 10.0;
  ArrivalKind arrival_kind = ArrivalKind::kUniform;
  std::uint64_t seed = 0;
};

void validate(const WorkloadSpec& w);

struct SimulationOptions {
  double hop_latency_s = 0.0;  // gateway delay between consecutive stages
};

using ConfigurationMap = std::map<std::string, Configuration>;  // function id -> configuration

struct StageRecord {
  double arrival = 0.0;
  double queue_wait = 0.0;
  double init = 0.0;  // cold-start share paid by this request at this stage
  double service = 0.0;
  double departure = 0.0;
  std::size_t replica = 0;
};

struct RequestRecord {
  double arrival = 0.0;
  double completion = 0.0;
  double pct = 0.0;
  double hop_total = 0.0;
  bool within_deadline = false;
};

struct SimulationResult {
  std::vector<RequestRecord> requests;
  std::size_t stage_count = 0;
  std::vector<StageRecord> stage_records;  // requests x stages, row-major
  std::vector<double> pct_values;  // per request, arrival order
  double throughput = 0.0;
  double slo_met_fraction = 0.0;
  std::size_t containers_started = 0;
  double init_time_total = 0.0;
  double duration_s = 0.0;
  double deadline_s = 0.0;
  std::size_t completed_by_horizon = 0;
  std::size_t in_flight_at_horizon = 0;

  std::span<const StageRecord> stages(std::size_t request) const {
    return std::span<const StageRecord>(stage_records).subspan(request * stage_count, stage_count);
  }
  double init_share(std::size_t request) const;
  double total_service(std::size_t request) const;
  double total_queue_wait(std::size_t request) const;
};

// Uniform: floor(rate * duration) arrivals at i / rate. Poisson: the same
// count placed as sorted uniform points on [0, duration), which is a Poisson
// process conditioned on its count.
std::vector<double> generate_arrivals(const WorkloadSpec& workload);

// Every configuration must fit the cluster and all replicas must bin-pack.
// Throws InsufficientMemory, DoesNotFitCluster or PackingFailed.
SimulationResult simulate(const PipelineSpec& pipeline, const FunctionTable& functions,
                          const ConfigurationMap& configs, const ClusterSpec& cluster,
                          const WorkloadSpec& workload, const SimulationOptions& options = {});

// Same engine driven by explicit arrival times; requests are drained to
// completion, `horizon` only bounds the throughput window.
SimulationResult simulate_arrivals(const PipelineSpec& pipeline, const FunctionTable& functions,
                                   const ConfigurationMap& configs, const ClusterSpec& cluster,
                                   std::span<const double> arrivals, double horizon,
                                   const SimulationOptions& options = {});

// Nearest-rank quantile of the PCT values.
double pct_quantile(const SimulationResult& result, double quantile);

inline constexpr double kDefaultSloQuantile = 0.95;

bool meets_slo(const SimulationResult& result, double deadline_s, double quantile = kDefaultSloQuantile);

// Requests completed inside the horizon and within the deadline, per second.
double measured_throughput(const SimulationResult& result);

// Share of the pipeline deadline given to one stage: the deadline left after
// gateway hops, split in proportion to reference execution times.
double stage_deadline(const PipelineSpec& pipeline, const FunctionTable& functions, const std::string& function_id,
                      const SimulationOptions& options = {});

// Quantile each of the n stages must meet so that, by the union bound, the
// end-to-end PCT meets `quantile`: 1 - (1 - quantile) / n.
double stage_quantile(const PipelineSpec& pipeline, double quantile);

struct StageEvaluation {
  bool slo_met = false;
  double throughput = 0.0;
  double pct_quantile = 0.0;
};

// Runs one function in isolation at the workload's rate against a stage budget.
StageEvaluation evaluate_stage(const FunctionSpec& function, double budget_s, const Configuration& config,
                               const ClusterSpec& cluster, const WorkloadSpec& workload,
                               double quantile = kDefaultSloQuantile);

struct DataGenerationOptions {
  double duration_s = 30.0;
  ArrivalKind arrival_kind = ArrivalKind::kUniform;
  std::uint64_t seed = 0;
  double quantile = kDefaultSloQuantile;
  SimulationOptions simulation;
};

// Labels for one function against an explicit stage budget and options.quantile
// taken as is; see below.
std::vector<TrainingSample> generate_function_data(const FunctionSpec& function, double budget_s,
                                                  const ClusterSpec& cluster, std::span<const ContainerConfig> grid,
                                                  const ReplicaClassMap& class_map, std::span<const double> rates,
                                                  const DataGenerationOptions& options = {});

// For each pipeline function and each (container, rate): the label is the
// smallest replica class whose stage meets its deadline share at
// stage_quantile(pipeline, options.quantile), or the largest class if none
// does. A class whose replicas cannot be packed counts as not meeting the SLO.
std::map<std::string, std::vector<TrainingSample>> generate_training_data(
    const PipelineSpec& pipeline, const FunctionTable& functions, const ClusterSpec& cluster,
    std::span<const ContainerConfig> grid, const ReplicaClassMap& class_map, std::span<const double> rates,
    const DataGenerationOptions& options = {});

// Largest offered rate (found by bisection) at which the assembled pipeline
// still meets its deadline, reported as the throughput measured at that rate.
double sustainable_throughput(const PipelineSpec& pipeline, const FunctionTable& functions,
                              const ConfigurationMap& configs, const ClusterSpec& cluster,
                              const WorkloadSpec& workload, double quantile = kDefaultSloQuantile,
                              const SimulationOptions& options = {}, int iterations = 24);

}  // namespace faasprov

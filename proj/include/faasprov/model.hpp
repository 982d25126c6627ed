#pragma once

// Domain values shared by every other component: functions, containers,
// configurations, pipelines, clusters, pricing, and the time/cost primitives.
// All types are plain immutable-by-convention values; call validate() at API
// boundaries.

#include <compare>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace faasprov {

struct ContainerConfig {
  double mem_mb = 0.0;
  double cpus = 0.0;

  auto operator<=>(const ContainerConfig&) const = default;
};

// A serverless function with a power-law CPU service-time model. Memory acts
// as a hard floor: below ref_mem the function cannot run at all.
struct FunctionSpec {
  std::string id;
  std::string name;
  double base_exec_time = 0.0;  // seconds at ref_cpu
  double ref_cpu = 1.0;
  double ref_mem = 128.0;  // MB
  double cpu_scaling_exponent = 1.0;
  double init_time = 0.0;  // cold start per container, seconds
};

// One function's deployment: `replicas` homogeneous containers.
struct Configuration {
  int replicas = 1;
  ContainerConfig container;

  auto operator<=>(const Configuration&) const = default;
};

struct PipelineSpec {
  std::string id;
  std::vector<std::string> functions;  // FunctionSpec ids in invocation order
  double deadline_s = 0.0;
  double target_rate = 0.0;  // requests/second
};

struct NodeSpec {
  double cpus = 0.0;
  double mem_mb = 0.0;
};

struct ClusterSpec {
  std::vector<NodeSpec> nodes;
};

struct PricingScheme {
  static constexpr double kSecondsPerMonth = 2'592'000.0;  // 30 days

  double rate_per_gb_second = 0.0;
};

using FunctionTable = std::map<std::string, FunctionSpec>;

void validate(const ContainerConfig& c);
void validate(const FunctionSpec& f);
void validate(const Configuration& c);
void validate(const PipelineSpec& p);
void validate(const ClusterSpec& c);
void validate(const PricingScheme& p);

// Throws InvalidArgument when a pipeline stage has no entry in the table.
const FunctionSpec& lookup(const FunctionTable& functions, const std::string& id);

// base_exec_time * (ref_cpu / cpus)^exponent. Throws InsufficientMemory when
// the container is below the function's memory floor.
double exec_time(const FunctionSpec& f, const ContainerConfig& w);

// A single container must fit on one node.
bool fits_cluster(const Configuration& cfg, const ClusterSpec& cluster);

// Always-warm reservation over a 30-day month.
double monthly_cost(const Configuration& cfg, const PricingScheme& pricing);

// First-fit-decreasing (by CPU, then memory) placement of every replica of
// every configuration. Returns, per configuration, the node index of each
// replica. Throws PackingFailed when some replica cannot be placed.
std::vector<std::vector<std::size_t>> pack_replicas(std::span<const Configuration> configs,
                                                    const ClusterSpec& cluster);

}  // namespace faasprov

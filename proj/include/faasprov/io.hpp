#pragma once

// File formats: JSON documents for descriptors, models and reports; CSV for
// datasets, training histories, request traces and configuration tables.
// Field-level schemas are documented in docs/formats.md.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "faasprov/callgraph.hpp"
#include "faasprov/model.hpp"
#include "faasprov/predictor.hpp"
#include "faasprov/provisioner.hpp"
#include "faasprov/simulator.hpp"

namespace faasprov {

using Json = nlohmann::ordered_json;

// Pipelines, their functions and (optionally) call graphs and pricing, as
// read from one descriptor document.
struct PipelineSuite {
  FunctionTable functions;
  std::vector<PipelineSpec> pipelines;
  std::map<std::string, CallGraph> callgraphs;  // pipeline id -> call graph
  std::optional<PricingScheme> pricing;

  const PipelineSpec& pipeline(const std::string& id) const;
};

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& doc);

// Shortest round-trip decimal form.
std::string format_number(double v);

Json to_json(const FunctionSpec& f);
Json to_json(const PipelineSpec& p);
Json to_json(const ContainerConfig& c);
Json to_json(const Configuration& c);
Json to_json(const ClusterSpec& c);
Json to_json(const ConfigurationCatalog& c);
Json to_json(const WorkloadSpec& w);
Json to_json(const CallGraph& g);
Json to_json(const PredictionModel& m);
Json to_json(const SelectionReport& r);
Json to_json(const PipelineSuite& s);

FunctionSpec function_from_json(const Json& j);
PipelineSpec pipeline_from_json(const Json& j);
ContainerConfig container_from_json(const Json& j);
Configuration configuration_from_json(const Json& j);
ClusterSpec cluster_from_json(const Json& j);
ConfigurationCatalog catalog_from_json(const Json& j);
// `rate` may be omitted when the workload only serves as a template.
WorkloadSpec workload_from_json(const Json& j);
CallGraph callgraph_from_json(const Json& j);
PredictionModel model_from_json(const Json& j);
// Relative call-graph paths resolve against `base_dir`.
PipelineSuite suite_from_json(const Json& j, const std::filesystem::path& base_dir = {});

PipelineSuite load_suite(const std::filesystem::path& path);
ClusterSpec load_cluster(const std::filesystem::path& path);
ConfigurationCatalog load_catalog(const std::filesystem::path& path);
WorkloadSpec load_workload(const std::filesystem::path& path);
CallGraph load_callgraph(const std::filesystem::path& path);
PredictionModel load_model(const std::filesystem::path& path);
void save_model(const PredictionModel& model, const std::filesystem::path& path);

// Dataset CSV: header mem_mb,cpus,request_rate,replica_label where the label
// is a replica count from the class map.
std::vector<TrainingSample> read_dataset_csv(const std::filesystem::path& path, const ReplicaClassMap& class_map);
void write_dataset_csv(const std::filesystem::path& path, const std::vector<TrainingSample>& samples,
                       const ReplicaClassMap& class_map);

std::string metrics_history_csv(const std::vector<EpochMetrics>& history);
std::string trace_csv(const SimulationResult& result);
Json simulation_summary(const SimulationResult& result, double quantile);
std::string oracle_table_csv(const OracleResult& oracle);

}  // namespace faasprov

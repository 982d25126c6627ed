#pragma once

// Synthetic desk-scale workloads: random functions and pipelines, random call
// graphs and edit perturbations, and the call-graph work model that turns a
// perturbed graph into a pipeline with proportionally different service times.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "faasprov/callgraph.hpp"
#include "faasprov/model.hpp"
#include "faasprov/provisioner.hpp"

namespace faasprov {

// splitmix64 step; derives independent sub-seeds from one top-level seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

struct SyntheticPipeline {
  PipelineSpec pipeline;
  FunctionTable functions;
};

struct SyntheticRanges {
  double base_exec_min = 0.05, base_exec_max = 0.2;
  double exponent_min = 0.6, exponent_max = 1.0;
  double init_min = 0.1, init_max = 0.4;
  double slack_min = 3.0, slack_max = 6.0;   // deadline / sum of base times
  double load_min = 0.15, load_max = 0.6;    // target rate / bottleneck capacity
  std::size_t functions_min = 1, functions_max = 3;
};

// Bottleneck capacity is taken at `largest` with `max_replicas` replicas.
SyntheticPipeline random_pipeline(const std::string& id, std::uint64_t seed, const ContainerConfig& largest,
                                  int max_replicas, const SyntheticRanges& ranges = {});

// Random rooted call tree (parent -> child) plus `extra_edges` random calls.
CallGraph random_callgraph(const std::string& id_prefix, std::size_t vertices, std::size_t extra_edges,
                           std::span<const std::string> labels, std::uint64_t seed);

enum class EditKind { kRelabel, kInsertVertex, kDeleteVertex, kInsertEdge, kDeleteEdge };

// Applies `edits` uniformly drawn edit operations; new labels come from `labels`.
CallGraph perturb_callgraph(const CallGraph& graph, std::size_t edits, std::span<const std::string> labels,
                            std::uint64_t seed);

// Deterministic per-label work in [0.5, 1.5] (FNV-1a of the label).
double label_work(const std::string& label);

inline constexpr double kCallWork = 0.25;

// Sum of label work plus kCallWork per call edge.
double callgraph_work(const CallGraph& graph);

// Same stages and ids; every base_exec_time scaled by work(variant)/work(source).
SyntheticPipeline derive_variant(const SyntheticPipeline& source, const CallGraph& source_graph,
                                 const CallGraph& variant_graph, const std::string& id);

std::vector<double> linear_rates(double lo, double hi, std::size_t count);

// Rates from near zero up to 1.1x the capacity of the largest class on
// `container`.
std::vector<double> training_rates(const FunctionSpec& function, const ContainerConfig& container,
                                   const ReplicaClassMap& class_map, std::size_t count);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace faasprov

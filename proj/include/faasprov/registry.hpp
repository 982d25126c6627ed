#pragma once

// Registry of known pipelines with trained models, and similarity-based
// provisioning for pipelines seen for the first time: the submitted call
// graph is compared (approximate GED) against every registered graph and the
// closest entry within the threshold lends its models.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "faasprov/callgraph.hpp"
#include "faasprov/model.hpp"
#include "faasprov/provisioner.hpp"

namespace faasprov {

struct KnownPipelineEntry {
  PipelineSpec pipeline;
  FunctionTable functions;
  CallGraph callgraph;
  ModelMap models;
  double observed_throughput = 0.0;  // requests/second at its selected configuration
};

void validate(const KnownPipelineEntry& entry);

struct MatchDecision {
  std::optional<std::size_t> matched;  // registry index
  GedResult distance;                  // of the match, or the minimum seen
  double threshold_used = 0.0;
};

struct AgnosticOutcome {
  MatchDecision decision;
  std::optional<SelectionReport> selection;  // empty: no similar pipeline

  bool no_similar_pipeline() const { return !selection.has_value(); }
};

inline constexpr double kDefaultSimilarityThreshold = 5.0;

class Registry {
 public:
  Registry() = default;

  // Loads the registry stored in `dir` (creating an empty one if absent);
  // every later registration is written back to that directory.
  static Registry open(const std::filesystem::path& dir);

  // Throws DuplicateId when the pipeline id is already registered.
  std::size_t register_entry(KnownPipelineEntry entry);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const KnownPipelineEntry& at(std::size_t index) const { return entries_.at(index); }
  const std::vector<KnownPipelineEntry>& entries() const { return entries_; }

  // Smallest approximate GED wins (insertion order breaks ties); accepted when
  // distance <= threshold. Throws EmptyRegistry.
  MatchDecision find_most_similar(const CallGraph& graph, double threshold = kDefaultSimilarityThreshold) const;

  // On a match, selects configurations for the matched pipeline's functions
  // using its models at the new rate and deadline.
  AgnosticOutcome provision_agnostic(const CallGraph& graph, double target_rate, double deadline_s,
                                     double threshold, const ConfigurationCatalog& catalog,
                                     const ClusterSpec& cluster, const PricingScheme& pricing) const;

 private:
  void persist(const KnownPipelineEntry& entry) const;

  std::vector<KnownPipelineEntry> entries_;
  std::optional<std::filesystem::path> dir_;
};

}  // namespace faasprov

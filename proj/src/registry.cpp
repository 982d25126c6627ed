#include "faasprov/registry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "faasprov/error.hpp"
#include "faasprov/io.hpp"

namespace faasprov {

namespace fs = std::filesystem;

namespace {

constexpr const char* kIndexFile = "registry.json";

std::string entry_file(const std::string& id) { return id + ".entry.json"; }
std::string graph_file(const std::string& id) { return id + ".graph.json"; }
std::string model_file(const std::string& id, const std::string& fid) { return id + "." + fid + ".model.json"; }

}  // namespace

void validate(const KnownPipelineEntry& entry) {
  validate(entry.pipeline);
  for (const auto& fid : entry.pipeline.functions) {
    lookup(entry.functions, fid);
    if (!entry.models.contains(fid)) {
      throw Error(ErrorCode::kInvalidArgument, "entry '" + entry.pipeline.id + "' lacks a model for '" + fid + "'");
    }
  }
  if (!(std::isfinite(entry.observed_throughput) && entry.observed_throughput > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "entry '" + entry.pipeline.id + "' needs observed_throughput > 0");
  }
}

Registry Registry::open(const fs::path& dir) {
  Registry reg;
  reg.dir_ = dir;
  const auto index_path = dir / kIndexFile;
  if (!fs::exists(index_path)) {
    fs::create_directories(dir);
    write_json(index_path, Json{{"entries", Json::array()}});
    return reg;
  }
  const auto index = read_json(index_path);
  for (const auto& id_json : index.at("entries")) {
    const auto id = id_json.get<std::string>();
    const auto doc = read_json(dir / entry_file(id));
    KnownPipelineEntry entry;
    entry.pipeline = pipeline_from_json(doc.at("pipeline"));
    for (const auto& fj : doc.at("functions")) {
      auto f = function_from_json(fj);
      entry.functions.emplace(f.id, f);
    }
    entry.callgraph = load_callgraph(dir / doc.at("callgraph").get<std::string>());
    for (const auto& [fid, file] : doc.at("models").items()) {
      entry.models.emplace(fid, load_model(dir / file.get<std::string>()));
    }
    entry.observed_throughput = doc.at("observed_throughput").get<double>();
    validate(entry);
    reg.entries_.push_back(std::move(entry));
  }
  return reg;
}

void Registry::persist(const KnownPipelineEntry& entry) const {
  const auto& dir = *dir_;
  const auto& id = entry.pipeline.id;
  write_json(dir / graph_file(id), to_json(entry.callgraph));
  Json models = Json::object();
  for (const auto& [fid, model] : entry.models) {
    save_model(model, dir / model_file(id, fid));
    models[fid] = model_file(id, fid);
  }
  Json functions = Json::array();
  for (const auto& [fid, f] : entry.functions) functions.push_back(to_json(f));
  write_json(dir / entry_file(id), Json{{"pipeline", to_json(entry.pipeline)},
                                        {"functions", functions},
                                        {"callgraph", graph_file(id)},
                                        {"models", models},
                                        {"observed_throughput", entry.observed_throughput}});
  Json ids = Json::array();
  for (const auto& e : entries_) ids.push_back(e.pipeline.id);
  write_json(dir / kIndexFile, Json{{"entries", ids}});
}

std::size_t Registry::register_entry(KnownPipelineEntry entry) {
  validate(entry);
  for (const auto& e : entries_) {
    if (e.pipeline.id == entry.pipeline.id) {
      throw Error(ErrorCode::kDuplicateId, "pipeline '" + entry.pipeline.id + "' is already registered");
    }
  }
  entries_.push_back(std::move(entry));
  if (dir_) persist(entries_.back());
  return entries_.size();
}

MatchDecision Registry::find_most_similar(const CallGraph& graph, double threshold) const {
  if (entries_.empty()) throw Error(ErrorCode::kEmptyRegistry, "no registered pipelines");
  if (!(threshold >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "threshold must be >= 0");

  std::vector<double> distance(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) distance[i] = approx_ged(graph, entries_[i].callgraph).distance;
  std::vector<std::size_t> order(entries_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return distance[a] < distance[b]; });

  MatchDecision decision;
  decision.threshold_used = threshold;
  decision.distance = {distance[order.front()], false};
  if (distance[order.front()] <= threshold) decision.matched = order.front();
  return decision;
}

AgnosticOutcome Registry::provision_agnostic(const CallGraph& graph, double target_rate, double deadline_s,
                                             double threshold, const ConfigurationCatalog& catalog,
                                             const ClusterSpec& cluster, const PricingScheme& pricing) const {
  AgnosticOutcome outcome;
  outcome.decision = find_most_similar(graph, threshold);
  if (!outcome.decision.matched) return outcome;

  const auto& entry = entries_[*outcome.decision.matched];
  PipelineSpec borrowed = entry.pipeline;
  borrowed.target_rate = target_rate;
  borrowed.deadline_s = deadline_s;
  outcome.selection =
      select_configuration(borrowed, entry.functions, entry.models, catalog, target_rate, cluster, pricing);
  return outcome;
}

}  // namespace faasprov

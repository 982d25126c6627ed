#include "faasprov/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <random>

#include "faasprov/error.hpp"

namespace faasprov {

const char* to_string(ArrivalKind kind) { return kind == ArrivalKind::kPoisson ? "poisson" : "uniform"; }

ArrivalKind parse_arrival_kind(const std::string& text) {
  if (text == "uniform") return ArrivalKind::kUniform;
  if (text == "poisson") return ArrivalKind::kPoisson;
  throw Error(ErrorCode::kInvalidArgument, "unknown arrival kind '" + text + "'");
}

void validate(const WorkloadSpec& w) {
  if (!(std::isfinite(w.rate) && w.rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "workload rate must be > 0");
  if (!(std::isfinite(w.duration_s) && w.duration_s > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "workload duration must be > 0");
  }
}

double SimulationResult::init_share(std::size_t request) const {
  double total = 0.0;
  for (const auto& s : stages(request)) total += s.init;
  return total;
}

double SimulationResult::total_service(std::size_t request) const {
  double total = 0.0;
  for (const auto& s : stages(request)) total += s.service;
  return total;
}

double SimulationResult::total_queue_wait(std::size_t request) const {
  double total = 0.0;
  for (const auto& s : stages(request)) total += s.queue_wait;
  return total;
}

std::vector<double> generate_arrivals(const WorkloadSpec& workload) {
  validate(workload);
  const auto count = static_cast<std::size_t>(std::floor(workload.rate * workload.duration_s + 1e-9));
  std::vector<double> arrivals(count);
  if (workload.arrival_kind == ArrivalKind::kUniform) {
    for (std::size_t i = 0; i < count; ++i) arrivals[i] = double(i) / workload.rate;
  } else {
    // Sorted uniforms without sorting: normalized partial sums of count + 1
    // unit exponentials are the order statistics of count uniforms.
    std::mt19937_64 rng(workload.seed);
    std::exponential_distribution<double> gap(1.0);
    double total = 0.0;
    for (double& a : arrivals) a = (total += gap(rng));
    total += gap(rng);
    for (double& a : arrivals) a = std::min(a / total * workload.duration_s, std::nextafter(workload.duration_s, 0.0));
  }
  return arrivals;
}

namespace {

using MinIndexHeap = std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>>;

// Idle replicas are kept in two min-heaps so dispatch takes the lowest-index
// warm replica, else the lowest-index never-started one.
struct Stage {
  double exec = 0.0;
  double init = 0.0;
  std::deque<std::size_t> queue;
  MinIndexHeap idle_warm;
  MinIndexHeap idle_cold;
};

enum class EventKind { kArrive, kDepart };

struct Event {
  double time;
  std::uint64_t seq;
  EventKind kind;
  std::size_t request;
  std::size_t stage;
  std::size_t replica;
};

struct LaterFirst {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }
};

}  // namespace

SimulationResult simulate_arrivals(const PipelineSpec& pipeline, const FunctionTable& functions,
                                   const ConfigurationMap& configs, const ClusterSpec& cluster,
                                   std::span<const double> arrivals, double horizon,
                                   const SimulationOptions& options) {
  validate(pipeline);
  validate(cluster);
  if (!(options.hop_latency_s >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "hop latency must be >= 0");
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    if (!std::isfinite(arrivals[i]) || arrivals[i] < 0.0 || (i > 0 && arrivals[i] < arrivals[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "arrival times must be finite, non-negative and sorted");
    }
  }

  const std::size_t n_stages = pipeline.functions.size();
  std::vector<Stage> stages(n_stages);
  std::vector<Configuration> stage_configs;
  for (std::size_t k = 0; k < n_stages; ++k) {
    const auto& fid = pipeline.functions[k];
    const auto& f = lookup(functions, fid);
    auto it = configs.find(fid);
    if (it == configs.end()) throw Error(ErrorCode::kInvalidArgument, "no configuration for function '" + fid + "'");
    const auto& cfg = it->second;
    stages[k].exec = exec_time(f, cfg.container);
    stages[k].init = f.init_time;
    if (!fits_cluster(cfg, cluster)) {
      throw Error(ErrorCode::kDoesNotFitCluster, "container for '" + fid + "' exceeds every node");
    }
    for (int r = 0; r < cfg.replicas; ++r) stages[k].idle_cold.push(static_cast<std::size_t>(r));
    stage_configs.push_back(cfg);
  }
  pack_replicas(stage_configs, cluster);

  SimulationResult result;
  result.duration_s = horizon;
  result.deadline_s = pipeline.deadline_s;
  result.requests.resize(arrivals.size());

  // Initial arrivals are consumed in order straight from `arrivals`; they
  // precede any queued event with the same timestamp.
  std::priority_queue<Event, std::vector<Event>, LaterFirst> events;
  std::uint64_t seq = 0;
  result.stage_count = n_stages;
  result.stage_records.resize(arrivals.size() * n_stages);
  for (std::size_t i = 0; i < arrivals.size(); ++i) result.requests[i].arrival = arrivals[i];
  auto record = [&](std::size_t req, std::size_t k) -> StageRecord& {
    return result.stage_records[req * n_stages + k];
  };

  auto dispatch = [&](std::size_t k, double now) {
    auto& stage = stages[k];
    while (!stage.queue.empty()) {
      bool warm = true;
      std::size_t chosen;
      if (!stage.idle_warm.empty()) {
        chosen = stage.idle_warm.top();
        stage.idle_warm.pop();
      } else if (!stage.idle_cold.empty()) {
        chosen = stage.idle_cold.top();
        stage.idle_cold.pop();
        warm = false;
      } else {
        return;
      }

      const std::size_t req = stage.queue.front();
      stage.queue.pop_front();
      auto& rec = record(req, k);
      rec.queue_wait = now - rec.arrival;
      rec.init = warm ? 0.0 : stage.init;
      rec.service = stage.exec;
      rec.replica = chosen;
      if (!warm) {
        ++result.containers_started;
        result.init_time_total += stage.init;
      }
      events.push({now + rec.init + rec.service, seq++, EventKind::kDepart, req, k, chosen});
    }
  };

  std::size_t next_arrival = 0;
  while (next_arrival < arrivals.size() || !events.empty()) {
    Event ev;
    if (next_arrival < arrivals.size() && (events.empty() || arrivals[next_arrival] <= events.top().time)) {
      ev = {arrivals[next_arrival], 0, EventKind::kArrive, next_arrival, 0, 0};
      ++next_arrival;
    } else {
      ev = events.top();
      events.pop();
    }
    auto& request = result.requests[ev.request];
    if (ev.kind == EventKind::kArrive) {
      record(ev.request, ev.stage).arrival = ev.time;
      stages[ev.stage].queue.push_back(ev.request);
    } else {
      stages[ev.stage].idle_warm.push(ev.replica);
      record(ev.request, ev.stage).departure = ev.time;
      if (ev.stage + 1 < n_stages) {
        request.hop_total += options.hop_latency_s;
        events.push({ev.time + options.hop_latency_s, seq++, EventKind::kArrive, ev.request, ev.stage + 1, 0});
      } else {
        request.completion = ev.time;
      }
    }
    dispatch(ev.stage, ev.time);
  }

  std::size_t within = 0, served = 0;
  result.pct_values.reserve(result.requests.size());
  for (auto& r : result.requests) {
    r.pct = r.completion - r.arrival;
    r.within_deadline = r.pct <= pipeline.deadline_s;
    result.pct_values.push_back(r.pct);
    if (r.within_deadline) ++within;
    if (r.completion <= horizon) {
      ++result.completed_by_horizon;
      if (r.within_deadline) ++served;
    }
  }
  result.in_flight_at_horizon = result.requests.size() - result.completed_by_horizon;
  result.slo_met_fraction = result.requests.empty() ? 1.0 : double(within) / double(result.requests.size());
  result.throughput = horizon > 0.0 ? double(served) / horizon : 0.0;
  return result;
}

SimulationResult simulate(const PipelineSpec& pipeline, const FunctionTable& functions,
                          const ConfigurationMap& configs, const ClusterSpec& cluster,
                          const WorkloadSpec& workload, const SimulationOptions& options) {
  const auto arrivals = generate_arrivals(workload);
  return simulate_arrivals(pipeline, functions, configs, cluster, arrivals, workload.duration_s, options);
}

double pct_quantile(const SimulationResult& result, double quantile) {
  if (result.pct_values.empty()) throw Error(ErrorCode::kInvalidArgument, "no completed requests");
  if (!(quantile >= 0.0 && quantile <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "quantile must be in [0, 1]");
  std::vector<double> values = result.pct_values;
  const double rank = std::ceil(quantile * double(values.size()));
  const auto idx = static_cast<std::size_t>(std::clamp(rank - 1.0, 0.0, double(values.size() - 1)));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(idx), values.end());
  return values[idx];
}

bool meets_slo(const SimulationResult& result, double deadline_s, double quantile) {
  return pct_quantile(result, quantile) <= deadline_s;
}

double measured_throughput(const SimulationResult& result) {
  if (!(result.duration_s > 0.0)) throw Error(ErrorCode::kInvalidArgument, "duration must be > 0");
  std::size_t served = 0;
  for (const auto& r : result.requests) {
    if (r.completion <= result.duration_s && r.within_deadline) ++served;
  }
  return double(served) / result.duration_s;
}

double stage_deadline(const PipelineSpec& pipeline, const FunctionTable& functions, const std::string& function_id,
                      const SimulationOptions& options) {
  validate(pipeline);
  double total = 0.0;
  for (const auto& fid : pipeline.functions) total += lookup(functions, fid).base_exec_time;
  const double hops = options.hop_latency_s * double(pipeline.functions.size() - 1);
  const double available = std::max(0.0, pipeline.deadline_s - hops);
  return available * lookup(functions, function_id).base_exec_time / total;
}

double stage_quantile(const PipelineSpec& pipeline, double quantile) {
  validate(pipeline);
  if (!(quantile >= 0.0 && quantile <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "quantile must be in [0, 1]");
  return 1.0 - (1.0 - quantile) / double(pipeline.functions.size());
}

namespace {

// Lower bound on the PCT quantile of a single FIFO stage with c cold-started
// replicas. Starts happen in arrival order and the k-th start on a replica
// cannot precede init + (k - 1) * service (k >= 2), so request i starts no
// earlier than max(a_i, i < c ? 0 : init + floor(i / c) * service).
double quantile_lower_bound(std::span<const double> arrivals, int replicas, double service, double init,
                            double quantile) {
  const auto c = static_cast<std::size_t>(replicas);
  std::vector<double> pct(arrivals.size());
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    const double slot = i < c ? 0.0 : init + double(i / c) * service;
    pct[i] = std::max(arrivals[i], slot) + service - arrivals[i];
  }
  const double rank = std::ceil(quantile * double(pct.size()));
  const auto idx = static_cast<std::size_t>(std::clamp(rank - 1.0, 0.0, double(pct.size() - 1)));
  std::nth_element(pct.begin(), pct.begin() + static_cast<std::ptrdiff_t>(idx), pct.end());
  return pct[idx];
}

StageEvaluation evaluate_stage_on(const FunctionSpec& function, double budget_s, const Configuration& config,
                                  const ClusterSpec& cluster, std::span<const double> arrivals, double horizon,
                                  double quantile, bool verdict_only) {
  StageEvaluation out;
  const double service = exec_time(function, config.container);
  if (!(budget_s > 0.0) || service > budget_s) {
    // Service alone overruns the budget; every request misses.
    if (!fits_cluster(config, cluster)) {
      throw Error(ErrorCode::kDoesNotFitCluster, "container for '" + function.id + "' exceeds every node");
    }
    return out;
  }
  if (!fits_cluster(config, cluster)) {
    throw Error(ErrorCode::kDoesNotFitCluster, "container for '" + function.id + "' exceeds every node");
  }
  if (verdict_only && !arrivals.empty() && quantile_lower_bound(arrivals, config.replicas, service, function.init_time, quantile) >
                                 budget_s) {
    // Capacity alone rules the budget out; skip the event simulation (the
    // throughput field is then left at zero, hence verdict_only).
    return out;
  }
  const PipelineSpec single{function.id, {function.id}, budget_s, 1.0};
  const FunctionTable table{{function.id, function}};
  const auto result = simulate_arrivals(single, table, {{function.id, config}}, cluster, arrivals, horizon);
  out.throughput = measured_throughput(result);
  if (result.pct_values.empty()) {
    out.slo_met = true;
    return out;
  }
  out.pct_quantile = pct_quantile(result, quantile);
  out.slo_met = out.pct_quantile <= budget_s;
  return out;
}

}  // namespace

StageEvaluation evaluate_stage(const FunctionSpec& function, double budget_s, const Configuration& config,
                               const ClusterSpec& cluster, const WorkloadSpec& workload, double quantile) {
  const auto arrivals = generate_arrivals(workload);
  return evaluate_stage_on(function, budget_s, config, cluster, arrivals, workload.duration_s, quantile, false);
}

std::vector<TrainingSample> generate_function_data(const FunctionSpec& function, double budget_s,
                                                  const ClusterSpec& cluster, std::span<const ContainerConfig> grid,
                                                  const ReplicaClassMap& class_map, std::span<const double> rates,
                                                  const DataGenerationOptions& options) {
  validate(class_map);
  if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, "container grid is empty");
  std::vector<TrainingSample> samples;
  for (const auto& w : grid) {
    for (double rate : rates) {
      const auto arrivals = generate_arrivals({rate, options.duration_s, options.arrival_kind, options.seed});
      std::size_t label = class_map.size() - 1;
      for (std::size_t c = 0; c < class_map.size(); ++c) {
        bool met = false;
        try {
          met = evaluate_stage_on(function, budget_s, {class_map.classes[c], w}, cluster, arrivals, options.duration_s,
                                  options.quantile, true)
                    .slo_met;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kPackingFailed) throw;
        }
        if (met) {
          label = c;
          break;
        }
      }
      samples.push_back({{w.mem_mb, w.cpus, rate}, label});
    }
  }
  return samples;
}

std::map<std::string, std::vector<TrainingSample>> generate_training_data(
    const PipelineSpec& pipeline, const FunctionTable& functions, const ClusterSpec& cluster,
    std::span<const ContainerConfig> grid, const ReplicaClassMap& class_map, std::span<const double> rates,
    const DataGenerationOptions& options) {
  validate(pipeline);
  auto stage_options = options;
  stage_options.quantile = stage_quantile(pipeline, options.quantile);
  std::map<std::string, std::vector<TrainingSample>> out;
  for (const auto& fid : pipeline.functions) {
    if (out.contains(fid)) continue;
    const double budget = stage_deadline(pipeline, functions, fid, options.simulation);
    out[fid] = generate_function_data(lookup(functions, fid), budget, cluster, grid, class_map, rates, stage_options);
  }
  return out;
}

double sustainable_throughput(const PipelineSpec& pipeline, const FunctionTable& functions,
                              const ConfigurationMap& configs, const ClusterSpec& cluster,
                              const WorkloadSpec& workload, double quantile, const SimulationOptions& options,
                              int iterations) {
  validate(pipeline);
  double capacity = std::numeric_limits<double>::infinity();
  for (const auto& fid : pipeline.functions) {
    const auto it = configs.find(fid);
    if (it == configs.end()) throw Error(ErrorCode::kInvalidArgument, "no configuration for function '" + fid + "'");
    capacity = std::min(capacity, double(it->second.replicas) / exec_time(lookup(functions, fid), it->second.container));
  }

  auto probe = [&](double rate, double& throughput) {
    WorkloadSpec w = workload;
    w.rate = rate;
    const auto r = simulate(pipeline, functions, configs, cluster, w, options);
    throughput = measured_throughput(r);
    return r.pct_values.empty() || meets_slo(r, pipeline.deadline_s, quantile);
  };

  double best = 0.0;
  double thr = 0.0;
  if (probe(capacity, thr)) return thr;
  double lo = 0.0, hi = capacity;
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (probe(mid, thr)) {
      lo = mid;
      best = thr;
    } else {
      hi = mid;
    }
  }
  return best;
}

}  // namespace faasprov

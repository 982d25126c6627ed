#include "faasprov/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "faasprov/error.hpp"

namespace faasprov {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void data_error(const std::string& what) { throw Error(ErrorCode::kDataError, what); }

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) data_error(std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const Json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_number()) data_error(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

double number_or(const Json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j, key) : fallback;
}

std::string text(const Json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_string()) data_error(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

template <typename T>
std::vector<T> array_of(const Json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_array()) data_error(std::string("field '") + key + "' must be an array");
  try {
    return v.get<std::vector<T>>();
  } catch (const nlohmann::json::exception& e) {
    data_error(std::string("field '") + key + "': " + e.what());
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  return cells;
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) data_error("line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

}  // namespace

const PipelineSpec& PipelineSuite::pipeline(const std::string& id) const {
  for (const auto& p : pipelines) {
    if (p.id == id) return p;
  }
  throw Error(ErrorCode::kInvalidArgument, "no pipeline '" + id + "' in suite");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << contents;
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

Json read_json(const fs::path& path) {
  const auto contents = read_text(path);
  try {
    return Json::parse(contents);
  } catch (const nlohmann::json::parse_error& e) {
    data_error(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& doc) { write_text(path, doc.dump(2) + "\n"); }

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Json to_json(const FunctionSpec& f) {
  return Json{{"id", f.id},
              {"name", f.name},
              {"base_exec_time", f.base_exec_time},
              {"ref_cpu", f.ref_cpu},
              {"ref_mem", f.ref_mem},
              {"cpu_scaling_exponent", f.cpu_scaling_exponent},
              {"init_time", f.init_time}};
}

Json to_json(const PipelineSpec& p) {
  return Json{{"id", p.id}, {"functions", p.functions}, {"deadline_s", p.deadline_s}, {"target_rate", p.target_rate}};
}

Json to_json(const ContainerConfig& c) { return Json{{"mem_mb", c.mem_mb}, {"cpus", c.cpus}}; }

Json to_json(const Configuration& c) {
  return Json{{"replicas", c.replicas}, {"mem_mb", c.container.mem_mb}, {"cpus", c.container.cpus}};
}

Json to_json(const ClusterSpec& c) {
  Json nodes = Json::array();
  for (const auto& n : c.nodes) nodes.push_back(Json{{"cpus", n.cpus}, {"mem_mb", n.mem_mb}});
  return Json{{"nodes", nodes}};
}

Json to_json(const ConfigurationCatalog& c) {
  Json grid = Json::array();
  for (const auto& w : c.container_grid) grid.push_back(to_json(w));
  return Json{{"containers", grid}, {"replica_classes", c.class_map.classes}};
}

Json to_json(const WorkloadSpec& w) {
  return Json{{"rate", w.rate},
              {"duration_s", w.duration_s},
              {"arrival_kind", to_string(w.arrival_kind)},
              {"seed", w.seed}};
}

Json to_json(const CallGraph& g) {
  Json vertices = Json::array();
  for (const auto& v : g.vertices()) vertices.push_back(Json{{"id", v.id}, {"label", v.label}});
  Json edges = Json::array();
  for (auto [f, t] : g.edges()) edges.push_back(Json::array({g.vertices()[f].id, g.vertices()[t].id}));
  return Json{{"vertices", vertices}, {"edges", edges}};
}

Json to_json(const PredictionModel& m) {
  Json weights = Json::array(), biases = Json::array();
  for (const auto& l : m.layers) {
    weights.push_back(l.weights);
    biases.push_back(l.bias);
  }
  return Json{{"format", "faasprov-model/1"},
              {"layer_sizes", m.layer_sizes()},
              {"weights", weights},
              {"biases", biases},
              {"class_map", m.class_map.classes},
              {"feature_stats", Json{{"mean", m.feature_stats.mean}, {"stddev", m.feature_stats.stddev}}},
              {"loss_kind", to_string(m.loss_kind)}};
}

namespace {

Json oracle_to_json(const OracleResult& o) {
  Json optimal = Json::object();
  for (const auto& [fid, cfg] : o.optimal) optimal[fid] = to_json(cfg);
  return optimal;
}

}  // namespace

Json to_json(const SelectionReport& r) {
  Json functions = Json::array();
  for (const auto& f : r.functions) {
    functions.push_back(Json{{"function_id", f.function_id},
                             {"configuration", to_json(f.chosen)},
                             {"class_probabilities", f.class_probabilities},
                             {"slo_probability", f.slo_probability},
                             {"monthly_cost", f.monthly_cost}});
  }
  Json doc{{"pipeline_id", r.pipeline_id},
           {"target_rate", r.target_rate},
           {"functions", functions},
           {"total_monthly_cost", r.total_monthly_cost}};
  if (r.oracle) doc["oracle"] = Json{{"optimal", oracle_to_json(*r.oracle)}};
  return doc;
}

Json to_json(const PipelineSuite& s) {
  Json functions = Json::array();
  for (const auto& [id, f] : s.functions) functions.push_back(to_json(f));
  Json pipelines = Json::array();
  for (const auto& p : s.pipelines) {
    Json pj = to_json(p);
    if (auto it = s.callgraphs.find(p.id); it != s.callgraphs.end()) pj["callgraph"] = to_json(it->second);
    pipelines.push_back(pj);
  }
  Json doc{{"functions", functions}, {"pipelines", pipelines}};
  if (s.pricing) doc["pricing"] = Json{{"rate_per_gb_second", s.pricing->rate_per_gb_second}};
  return doc;
}

FunctionSpec function_from_json(const Json& j) {
  FunctionSpec f;
  f.id = text(j, "id");
  f.name = j.contains("name") ? text(j, "name") : f.id;
  f.base_exec_time = number(j, "base_exec_time");
  f.ref_cpu = number_or(j, "ref_cpu", 1.0);
  f.ref_mem = number_or(j, "ref_mem", 128.0);
  f.cpu_scaling_exponent = number_or(j, "cpu_scaling_exponent", 1.0);
  f.init_time = number_or(j, "init_time", 0.0);
  validate(f);
  return f;
}

PipelineSpec pipeline_from_json(const Json& j) {
  PipelineSpec p;
  p.id = text(j, "id");
  p.functions = array_of<std::string>(j, "functions");
  p.deadline_s = number(j, "deadline_s");
  p.target_rate = number(j, "target_rate");
  validate(p);
  return p;
}

ContainerConfig container_from_json(const Json& j) {
  ContainerConfig c{number(j, "mem_mb"), number(j, "cpus")};
  validate(c);
  return c;
}

Configuration configuration_from_json(const Json& j) {
  const auto& r = field(j, "replicas");
  if (!r.is_number_integer()) data_error("field 'replicas' must be an integer");
  Configuration c{r.get<int>(), container_from_json(j)};
  validate(c);
  return c;
}

ClusterSpec cluster_from_json(const Json& j) {
  ClusterSpec c;
  const auto& nodes = field(j, "nodes");
  if (!nodes.is_array()) data_error("field 'nodes' must be an array");
  for (const auto& n : nodes) {
    const auto count = n.contains("count") ? static_cast<std::size_t>(number(n, "count")) : 1;
    for (std::size_t i = 0; i < count; ++i) c.nodes.push_back({number(n, "cpus"), number(n, "mem_mb")});
  }
  validate(c);
  return c;
}

ConfigurationCatalog catalog_from_json(const Json& j) {
  ConfigurationCatalog c;
  const auto& grid = field(j, "containers");
  if (!grid.is_array()) data_error("field 'containers' must be an array");
  for (const auto& w : grid) c.container_grid.push_back(container_from_json(w));
  if (j.contains("replica_classes")) c.class_map.classes = array_of<int>(j, "replica_classes");
  validate(c);
  return c;
}

WorkloadSpec workload_from_json(const Json& j) {
  WorkloadSpec w;
  w.rate = number_or(j, "rate", 1.0);
  w.duration_s = number(j, "duration_s");
  if (j.contains("arrival_kind")) w.arrival_kind = parse_arrival_kind(text(j, "arrival_kind"));
  if (j.contains("seed")) w.seed = field(j, "seed").get<std::uint64_t>();
  validate(w);
  return w;
}

CallGraph callgraph_from_json(const Json& j) {
  std::vector<Vertex> vertices;
  const auto& vs = field(j, "vertices");
  if (!vs.is_array()) data_error("field 'vertices' must be an array");
  for (const auto& v : vs) {
    const auto& id = field(v, "id");
    vertices.push_back({id.is_string() ? id.get<std::string>() : id.dump(), text(v, "label")});
  }
  std::vector<std::pair<std::string, std::string>> edges;
  const auto& es = field(j, "edges");
  if (!es.is_array()) data_error("field 'edges' must be an array");
  for (const auto& e : es) {
    if (!e.is_array() || e.size() != 2) data_error("each edge must be a [from, to] pair");
    auto id = [](const Json& x) { return x.is_string() ? x.get<std::string>() : x.dump(); };
    edges.emplace_back(id(e[0]), id(e[1]));
  }
  return CallGraph(std::move(vertices), edges);
}

PredictionModel model_from_json(const Json& j) {
  PredictionModel m;
  const auto sizes = array_of<std::size_t>(j, "layer_sizes");
  const auto weights = array_of<std::vector<double>>(j, "weights");
  const auto biases = array_of<std::vector<double>>(j, "biases");
  if (sizes.size() < 2 || weights.size() != sizes.size() - 1 || biases.size() != weights.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "model layer arrays disagree with layer_sizes");
  }
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    m.layers.push_back({sizes[l], sizes[l + 1], weights[l], biases[l]});
  }
  m.class_map.classes = array_of<int>(j, "class_map");
  const auto& stats = field(j, "feature_stats");
  const auto mean = array_of<double>(stats, "mean");
  const auto stddev = array_of<double>(stats, "stddev");
  if (mean.size() != kFeatureCount || stddev.size() != kFeatureCount) {
    throw Error(ErrorCode::kDimensionMismatch, "feature_stats must have 3 entries");
  }
  std::copy(mean.begin(), mean.end(), m.feature_stats.mean.begin());
  std::copy(stddev.begin(), stddev.end(), m.feature_stats.stddev.begin());
  m.loss_kind = parse_loss_kind(text(j, "loss_kind"));
  validate(m);
  return m;
}

PipelineSuite suite_from_json(const Json& j, const fs::path& base_dir) {
  PipelineSuite s;
  const auto& functions = field(j, "functions");
  if (!functions.is_array()) data_error("field 'functions' must be an array");
  for (const auto& fj : functions) {
    auto f = function_from_json(fj);
    if (!s.functions.emplace(f.id, f).second) data_error("duplicate function id '" + f.id + "'");
  }
  const auto& pipelines = field(j, "pipelines");
  if (!pipelines.is_array()) data_error("field 'pipelines' must be an array");
  for (const auto& pj : pipelines) {
    auto p = pipeline_from_json(pj);
    for (const auto& fid : p.functions) {
      if (!s.functions.contains(fid)) data_error("pipeline '" + p.id + "' uses unknown function '" + fid + "'");
    }
    if (pj.contains("callgraph")) {
      const auto& g = pj.at("callgraph");
      s.callgraphs.emplace(p.id, g.is_string() ? load_callgraph(base_dir / g.get<std::string>()) : callgraph_from_json(g));
    }
    s.pipelines.push_back(std::move(p));
  }
  if (j.contains("pricing")) {
    PricingScheme pricing{number(field(j, "pricing"), "rate_per_gb_second")};
    validate(pricing);
    s.pricing = pricing;
  }
  return s;
}

PipelineSuite load_suite(const fs::path& path) { return suite_from_json(read_json(path), path.parent_path()); }
ClusterSpec load_cluster(const fs::path& path) { return cluster_from_json(read_json(path)); }
ConfigurationCatalog load_catalog(const fs::path& path) { return catalog_from_json(read_json(path)); }
WorkloadSpec load_workload(const fs::path& path) { return workload_from_json(read_json(path)); }
CallGraph load_callgraph(const fs::path& path) { return callgraph_from_json(read_json(path)); }
PredictionModel load_model(const fs::path& path) { return model_from_json(read_json(path)); }
void save_model(const PredictionModel& model, const fs::path& path) { write_json(path, to_json(model)); }

std::vector<TrainingSample> read_dataset_csv(const fs::path& path, const ReplicaClassMap& class_map) {
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t line_no = 0;
  std::vector<TrainingSample> samples;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (!header_seen) {
      const std::vector<std::string> expected{"mem_mb", "cpus", "request_rate", "replica_label"};
      if (cells != expected) data_error(path.string() + ": header must be mem_mb,cpus,request_rate,replica_label");
      header_seen = true;
      continue;
    }
    if (cells.size() != 4) data_error(path.string() + ": line " + std::to_string(line_no) + " needs 4 cells");
    const double replicas = parse_double(cells[3], line_no);
    auto it = std::find(class_map.classes.begin(), class_map.classes.end(), static_cast<int>(replicas));
    if (it == class_map.classes.end() || double(*it) != replicas) {
      data_error(path.string() + ": line " + std::to_string(line_no) + ": replica label " + cells[3] +
                 " is not in the class map");
    }
    samples.push_back({{parse_double(cells[0], line_no), parse_double(cells[1], line_no),
                        parse_double(cells[2], line_no)},
                       static_cast<std::size_t>(it - class_map.classes.begin())});
  }
  return samples;
}

void write_dataset_csv(const fs::path& path, const std::vector<TrainingSample>& samples,
                       const ReplicaClassMap& class_map) {
  std::ostringstream out;
  out << "mem_mb,cpus,request_rate,replica_label\n";
  for (const auto& s : samples) {
    out << format_number(s.features.mem_mb) << ',' << format_number(s.features.cpus) << ','
        << format_number(s.features.request_rate) << ',' << class_map.classes.at(s.label) << '\n';
  }
  write_text(path, out.str());
}

std::string metrics_history_csv(const std::vector<EpochMetrics>& history) {
  std::ostringstream out;
  out << "epoch,train_loss,loss,accuracy,macro_f1,macro_precision,macro_recall\n";
  for (const auto& e : history) {
    out << e.epoch << ',' << format_number(e.train_loss) << ',' << format_number(e.held_out.mean_loss) << ','
        << format_number(e.held_out.accuracy) << ',' << format_number(e.held_out.macro_f1) << ','
        << format_number(e.held_out.macro_precision) << ',' << format_number(e.held_out.macro_recall) << '\n';
  }
  return out.str();
}

std::string trace_csv(const SimulationResult& result) {
  std::ostringstream out;
  out << "request,stage,arrival,queue_wait,init,service,departure,replica,pct\n";
  for (std::size_t i = 0; i < result.requests.size(); ++i) {
    const auto& r = result.requests[i];
    const auto stages = result.stages(i);
    for (std::size_t k = 0; k < stages.size(); ++k) {
      const auto& s = stages[k];
      out << i << ',' << k << ',' << format_number(s.arrival) << ',' << format_number(s.queue_wait) << ','
          << format_number(s.init) << ',' << format_number(s.service) << ',' << format_number(s.departure) << ','
          << s.replica << ',' << format_number(r.pct) << '\n';
    }
  }
  return out.str();
}

Json simulation_summary(const SimulationResult& result, double quantile) {
  Json doc{{"requests", result.requests.size()},
           {"duration_s", result.duration_s},
           {"deadline_s", result.deadline_s},
           {"throughput", result.throughput},
           {"slo_met_fraction", result.slo_met_fraction},
           {"containers_started", result.containers_started},
           {"init_time_total", result.init_time_total},
           {"completed_by_horizon", result.completed_by_horizon},
           {"in_flight_at_horizon", result.in_flight_at_horizon},
           {"quantile", quantile}};
  if (!result.pct_values.empty()) {
    doc["pct_quantile"] = pct_quantile(result, quantile);
    doc["meets_slo"] = meets_slo(result, result.deadline_s, quantile);
  }
  return doc;
}

std::string oracle_table_csv(const OracleResult& oracle) {
  std::ostringstream out;
  out << "function,replicas,mem_mb,cpus,deployable,throughput,monthly_cost,pct_quantile,slo_met,optimal\n";
  for (const auto& row : oracle.table) {
    const auto it = oracle.optimal.find(row.function_id);
    const bool optimal = it != oracle.optimal.end() && it->second == row.config;
    out << row.function_id << ',' << row.config.replicas << ',' << format_number(row.config.container.mem_mb) << ','
        << format_number(row.config.container.cpus) << ',' << (row.deployable ? 1 : 0) << ','
        << format_number(row.throughput) << ',' << format_number(row.monthly_cost) << ','
        << format_number(row.pct_quantile) << ',' << (row.slo_met ? 1 : 0) << ',' << (optimal ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace faasprov

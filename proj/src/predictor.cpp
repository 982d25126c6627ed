#include "faasprov/predictor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "faasprov/error.hpp"

namespace faasprov {

const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kCce: return "cce";
    case LossKind::kKlde: return "klde";
    case LossKind::kPsse: return "psse";
  }
  return "cce";
}

LossKind parse_loss_kind(const std::string& text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "cce") return LossKind::kCce;
  if (lower == "klde") return LossKind::kKlde;
  if (lower == "psse") return LossKind::kPsse;
  throw Error(ErrorCode::kInvalidArgument, "unknown loss kind '" + text + "'");
}

void validate(const ReplicaClassMap& m) {
  if (m.classes.empty()) throw Error(ErrorCode::kInvalidArgument, "class map is empty");
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    if (m.classes[i] < 1) throw Error(ErrorCode::kInvalidArgument, "replica classes must be positive");
    if (i > 0 && m.classes[i] <= m.classes[i - 1]) {
      throw Error(ErrorCode::kInvalidArgument, "replica classes must be strictly increasing");
    }
  }
}

std::vector<std::size_t> PredictionModel::layer_sizes() const {
  std::vector<std::size_t> sizes;
  if (layers.empty()) return sizes;
  sizes.push_back(layers.front().inputs);
  for (const auto& l : layers) sizes.push_back(l.outputs);
  return sizes;
}

void validate(const PredictionModel& model) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kDimensionMismatch, what); };
  validate(model.class_map);
  if (model.layers.empty()) fail("model has no layers");
  if (model.layers.front().inputs != kFeatureCount) fail("first layer must take 3 features");
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    if (l.weights.size() != l.inputs * l.outputs) fail("layer " + std::to_string(i) + " weight count");
    if (l.bias.size() != l.outputs) fail("layer " + std::to_string(i) + " bias count");
    if (i > 0 && model.layers[i - 1].outputs != l.inputs) fail("layer " + std::to_string(i) + " input width");
  }
  if (model.layers.back().outputs != model.class_map.size()) fail("output width differs from class count");
  for (double s : model.feature_stats.stddev) {
    if (!(s > 0.0) || !std::isfinite(s)) fail("feature standard deviation must be positive");
  }
}

double relu(double h) { return h > 0.0 ? h : 0.0; }

std::vector<double> softmax(std::span<const double> q) {
  if (q.empty()) throw Error(ErrorCode::kInvalidArgument, "softmax of an empty vector");
  const double top = *std::max_element(q.begin(), q.end());
  std::vector<double> out(q.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    out[i] = std::exp(q[i] - top);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

namespace {

std::array<double, kFeatureCount> standardize(const FeatureStats& stats, const FeatureVector& x) {
  auto raw = log_features(x);
  std::array<double, kFeatureCount> out{};
  for (std::size_t i = 0; i < kFeatureCount; ++i) out[i] = (raw[i] - stats.mean[i]) / stats.stddev[i];
  return out;
}

void affine(const DenseLayer& layer, std::span<const double> in, std::vector<double>& out) {
  out.assign(layer.outputs, 0.0);
  for (std::size_t o = 0; o < layer.outputs; ++o) {
    const double* row = layer.weights.data() + o * layer.inputs;
    double acc = layer.bias[o];
    for (std::size_t i = 0; i < layer.inputs; ++i) acc += row[i] * in[i];
    out[o] = acc;
  }
}

// Pre-activations and activations of every layer for one input.
struct Trace {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> act;  // act[0] is the standardized input
};

Trace run(const PredictionModel& model, const FeatureVector& x) {
  Trace t;
  const auto in = standardize(model.feature_stats, x);
  t.act.emplace_back(in.begin(), in.end());
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    std::vector<double> z;
    affine(model.layers[l], t.act.back(), z);
    std::vector<double> a = z;
    if (l + 1 < model.layers.size()) {
      for (double& v : a) v = relu(v);
    }
    t.pre.push_back(std::move(z));
    t.act.push_back(std::move(a));
  }
  return t;
}

double clipped(double p) { return std::max(p, kLogClip); }

}  // namespace

std::vector<double> logits(const PredictionModel& model, const FeatureVector& x) {
  validate(model);
  return run(model, x).pre.back();
}

std::vector<double> forward(const PredictionModel& model, const FeatureVector& x) {
  const auto q = logits(model, x);
  return softmax(q);
}

double loss(LossKind kind, std::span<const double> p, std::span<const double> t) {
  if (p.size() != t.size()) throw Error(ErrorCode::kDimensionMismatch, "prediction/target size differ");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pc = clipped(p[i]);
    switch (kind) {
      case LossKind::kCce:
        total -= t[i] * std::log(pc);
        break;
      case LossKind::kKlde:
        if (t[i] > 0.0) total += t[i] * (std::log(t[i]) - std::log(pc));
        break;
      case LossKind::kPsse:
        total += p[i] - t[i] * std::log(pc);
        break;
    }
  }
  return total;
}

std::vector<double> loss_gradient(LossKind kind, std::span<const double> p, std::span<const double> t) {
  if (p.size() != t.size()) throw Error(ErrorCode::kDimensionMismatch, "prediction/target size differ");
  std::vector<double> g(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    // Below the clip the log term is constant.
    const double dlog = p[i] > kLogClip ? 1.0 / p[i] : 0.0;
    switch (kind) {
      case LossKind::kCce:
      case LossKind::kKlde:
        g[i] = -t[i] * dlog;
        break;
      case LossKind::kPsse:
        g[i] = 1.0 - t[i] * dlog;
        break;
    }
  }
  return g;
}

std::vector<double> one_hot(std::size_t label, std::size_t classes) {
  std::vector<double> t(classes, 0.0);
  if (label >= classes) throw Error(ErrorCode::kInvalidArgument, "label out of range");
  t[label] = 1.0;
  return t;
}

namespace {

Gradients zero_gradients(const PredictionModel& model) {
  Gradients g;
  for (const auto& l : model.layers) {
    g.weights.emplace_back(l.weights.size(), 0.0);
    g.bias.emplace_back(l.bias.size(), 0.0);
  }
  return g;
}

// Adds one sample's loss and gradients into `acc` (shaped like the model).
void accumulate(const PredictionModel& model, const TrainingSample& sample, Gradients& acc) {
  const auto trace = run(model, sample.features);
  const auto p = softmax(trace.pre.back());
  const auto t = one_hot(sample.label, p.size());
  acc.loss += loss(model.loss_kind, p, t);

  // Through the softmax Jacobian: dz_j = p_j (g_j - sum_i p_i g_i).
  const auto g = loss_gradient(model.loss_kind, p, t);
  const double pg = std::inner_product(p.begin(), p.end(), g.begin(), 0.0);
  std::vector<double> delta(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) delta[j] = p[j] * (g[j] - pg);

  std::vector<double> prev;
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const auto& layer = model.layers[l];
    const auto& input = trace.act[l];
    double* dw = acc.weights[l].data();
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      double* row = dw + o * layer.inputs;
      for (std::size_t i = 0; i < layer.inputs; ++i) row[i] += d * input[i];
      acc.bias[l][o] += d;
    }
    if (l == 0) break;
    prev.assign(layer.inputs, 0.0);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = layer.weights.data() + o * layer.inputs;
      for (std::size_t i = 0; i < layer.inputs; ++i) prev[i] += row[i] * d;
    }
    const auto& z = trace.pre[l - 1];
    for (std::size_t i = 0; i < prev.size(); ++i) {
      if (z[i] <= 0.0) prev[i] = 0.0;
    }
    delta.swap(prev);
  }
}

}  // namespace

Gradients backpropagate(const PredictionModel& model, const TrainingSample& sample) {
  validate(model);
  if (sample.label >= model.class_map.size()) throw Error(ErrorCode::kInvalidArgument, "label out of range");
  auto grads = zero_gradients(model);
  accumulate(model, sample, grads);
  return grads;
}

double sample_loss(const PredictionModel& model, const TrainingSample& sample) {
  const auto p = forward(model, sample.features);
  return loss(model.loss_kind, p, one_hot(sample.label, p.size()));
}

PredictionModel initialize_model(const std::vector<std::size_t>& hidden, const ReplicaClassMap& class_map,
                                 LossKind loss_kind, std::uint64_t seed) {
  validate(class_map);
  PredictionModel model;
  model.class_map = class_map;
  model.loss_kind = loss_kind;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> sizes{kFeatureCount};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(class_map.size());
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (sizes[l + 1] == 0) throw Error(ErrorCode::kInvalidArgument, "layer width must be positive");
    DenseLayer layer;
    layer.inputs = sizes[l];
    layer.outputs = sizes[l + 1];
    const double limit = std::sqrt(6.0 / double(layer.inputs + layer.outputs));
    std::uniform_real_distribution<double> dist(-limit, limit);
    layer.weights.resize(layer.inputs * layer.outputs);
    for (double& w : layer.weights) w = dist(rng);
    layer.bias.assign(layer.outputs, 0.0);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

std::array<double, kFeatureCount> log_features(const FeatureVector& x) {
  auto v = x.values();
  for (double& f : v) f = std::log(std::max(f, kFeatureFloor));
  return v;
}

FeatureStats fit_feature_stats(std::span<const TrainingSample> samples) {
  FeatureStats stats;
  if (samples.empty()) return stats;
  const double n = double(samples.size());
  for (const auto& s : samples) {
    auto v = log_features(s.features);
    for (std::size_t i = 0; i < kFeatureCount; ++i) stats.mean[i] += v[i] / n;
  }
  std::array<double, kFeatureCount> var{};
  for (const auto& s : samples) {
    auto v = log_features(s.features);
    for (std::size_t i = 0; i < kFeatureCount; ++i) var[i] += (v[i] - stats.mean[i]) * (v[i] - stats.mean[i]) / n;
  }
  // A feature that never varies (a one-container grid) is centred but left unscaled.
  for (std::size_t i = 0; i < kFeatureCount; ++i) stats.stddev[i] = var[i] > 0.0 ? std::sqrt(var[i]) : 1.0;
  return stats;
}

namespace {

struct AdamState {
  std::vector<std::vector<double>> mw, vw, mb, vb;
  std::size_t step = 0;
};

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-7;

void adam_update(PredictionModel& model, const Gradients& g, AdamState& s, double lr) {
  if (s.mw.empty()) {
    for (const auto& l : model.layers) {
      s.mw.emplace_back(l.weights.size(), 0.0);
      s.vw.emplace_back(l.weights.size(), 0.0);
      s.mb.emplace_back(l.bias.size(), 0.0);
      s.vb.emplace_back(l.bias.size(), 0.0);
    }
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(kBeta1, double(s.step));
  const double c2 = 1.0 - std::pow(kBeta2, double(s.step));
  auto apply = [&](std::vector<double>& param, const std::vector<double>& grad, std::vector<double>& m,
                   std::vector<double>& v) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      param[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kAdamEps);
    }
  };
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    apply(model.layers[l].weights, g.weights[l], s.mw[l], s.vw[l]);
    apply(model.layers[l].bias, g.bias[l], s.mb[l], s.vb[l]);
  }
}

// Seeded shuffle within each class so every class is represented on both
// sides whenever it has enough samples.
void stratified_split(std::span<const TrainingSample> samples, double fraction, std::mt19937_64& rng,
                      std::vector<std::size_t>& train_idx, std::vector<std::size_t>& held_idx) {
  std::map<std::size_t, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < samples.size(); ++i) by_label[samples[i].label].push_back(i);
  for (auto& [label, idx] : by_label) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto held = static_cast<std::size_t>(std::floor(double(idx.size()) * fraction + 0.5));
    const auto keep = std::min(held, idx.size() > 0 ? idx.size() - 1 : 0);
    held_idx.insert(held_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep));
    train_idx.insert(train_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(held_idx.begin(), held_idx.end());
}

}  // namespace

TrainingResult train(std::span<const TrainingSample> samples, const TrainingOptions& options) {
  validate(options.class_map);
  if (options.batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "batch size must be positive");
  if (!(options.held_out_fraction >= 0.0 && options.held_out_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "held-out fraction must be in [0, 1)");
  }
  std::vector<bool> seen(options.class_map.size(), false);
  std::size_t distinct = 0;
  for (const auto& s : samples) {
    if (s.label >= options.class_map.size()) {
      throw Error(ErrorCode::kInvalidArgument, "sample label " + std::to_string(s.label) + " outside class map");
    }
    if (!seen[s.label]) seen[s.label] = true, ++distinct;
  }
  if (distinct < 2) {
    throw Error(ErrorCode::kDegenerateDataset,
                std::to_string(samples.size()) + " samples with " + std::to_string(distinct) + " distinct labels");
  }

  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> train_idx, held_idx;
  stratified_split(samples, options.held_out_fraction, rng, train_idx, held_idx);

  std::vector<TrainingSample> train_set, held_set;
  for (auto i : train_idx) train_set.push_back(samples[i]);
  for (auto i : held_idx) held_set.push_back(samples[i]);
  const auto& metric_set = held_set.empty() ? train_set : held_set;

  TrainingResult result;
  result.train_size = train_set.size();
  result.held_out_size = held_set.size();
  result.model = initialize_model(options.hidden, options.class_map, options.loss, rng());
  result.model.feature_stats = fit_feature_stats(train_set);
  auto& model = result.model;

  AdamState adam;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      Gradients batch = zero_gradients(model);
      for (std::size_t k = start; k < end; ++k) accumulate(model, train_set[order[k]], batch);
      epoch_loss += batch.loss;
      const double scale = 1.0 / double(end - start);
      for (auto& w : batch.weights) for (double& v : w) v *= scale;
      for (auto& b : batch.bias) for (double& v : b) v *= scale;
      adam_update(model, batch, adam, options.learning_rate);
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = epoch_loss / double(train_set.size());
    em.held_out = evaluate(model, metric_set);
    result.history.push_back(em);
  }
  return result;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

int predict_replicas(const PredictionModel& model, const ContainerConfig& w, double rate) {
  const auto p = forward(model, {w.mem_mb, w.cpus, rate});
  return model.class_map.classes[argmax(p)];
}

Metrics metrics_from_confusion(const std::vector<std::vector<std::size_t>>& confusion) {
  Metrics m;
  const std::size_t k = confusion.size();
  if (k == 0) return m;
  std::size_t total = 0, correct = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (confusion[i].size() != k) throw Error(ErrorCode::kDimensionMismatch, "confusion matrix is not square");
    for (std::size_t j = 0; j < k; ++j) total += confusion[i][j];
    correct += confusion[i][i];
  }
  m.accuracy = total ? double(correct) / double(total) : 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t predicted = 0, actual = 0;
    for (std::size_t i = 0; i < k; ++i) {
      predicted += confusion[i][c];
      actual += confusion[c][i];
    }
    const double tp = double(confusion[c][c]);
    const double precision = predicted ? tp / double(predicted) : 0.0;
    const double recall = actual ? tp / double(actual) : 0.0;
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    m.macro_precision += precision / double(k);
    m.macro_recall += recall / double(k);
    m.macro_f1 += f1 / double(k);
  }
  return m;
}

Metrics evaluate(const PredictionModel& model, std::span<const TrainingSample> samples) {
  if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot evaluate on an empty sample set");
  const std::size_t k = model.class_map.size();
  std::vector<std::vector<std::size_t>> confusion(k, std::vector<std::size_t>(k, 0));
  double total_loss = 0.0;
  for (const auto& s : samples) {
    const auto p = forward(model, s.features);
    confusion.at(s.label)[argmax(p)] += 1;
    total_loss += loss(model.loss_kind, p, one_hot(s.label, k));
  }
  Metrics m = metrics_from_confusion(confusion);
  m.mean_loss = total_loss / double(samples.size());
  return m;
}

}  // namespace faasprov

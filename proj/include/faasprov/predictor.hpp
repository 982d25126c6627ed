#pragma once

// Feed-forward replica-count classifier: (memory, CPUs, request rate) ->
// probability over replica classes. Dense ReLU hidden layers, softmax output,
// trained by mini-batch backpropagation under one of three losses.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "faasprov/model.hpp"

namespace faasprov {

enum class LossKind { kCce, kKlde, kPsse };

const char* to_string(LossKind kind);
// Accepts "cce", "klde", "psse" (case-insensitive).
LossKind parse_loss_kind(const std::string& text);

struct ReplicaClassMap {
  std::vector<int> classes{5, 10, 15, 20, 25, 30};

  std::size_t size() const { return classes.size(); }
  bool operator==(const ReplicaClassMap&) const = default;
};

void validate(const ReplicaClassMap& m);

inline constexpr std::size_t kFeatureCount = 3;

struct FeatureVector {
  double mem_mb = 0.0;
  double cpus = 0.0;
  double request_rate = 0.0;

  std::array<double, kFeatureCount> values() const { return {mem_mb, cpus, request_rate}; }
};

// Inputs enter the network as logarithms (floored at kFeatureFloor): replica
// demand scales with rate times service time, so class boundaries are close to
// linear in log space.
inline constexpr double kFeatureFloor = 1e-9;
std::array<double, kFeatureCount> log_features(const FeatureVector& x);

// Per-feature standardization parameters of the log features, estimated on
// the training split.
struct FeatureStats {
  std::array<double, kFeatureCount> mean{0.0, 0.0, 0.0};
  std::array<double, kFeatureCount> stddev{1.0, 1.0, 1.0};
};

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> bias;     // outputs
};

struct PredictionModel {
  std::vector<DenseLayer> layers;
  ReplicaClassMap class_map;
  FeatureStats feature_stats;
  LossKind loss_kind = LossKind::kCce;

  // {inputs, hidden..., classes}
  std::vector<std::size_t> layer_sizes() const;
};

// Throws DimensionMismatch when consecutive layers disagree or the output
// width differs from the class count.
void validate(const PredictionModel& model);

struct TrainingSample {
  FeatureVector features;  // raw, unstandardized
  std::size_t label = 0;   // index into the class map
};

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double mean_loss = 0.0;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean over the epoch's mini-batches, each taken before its update
  Metrics held_out;
};

struct TrainingOptions {
  std::vector<std::size_t> hidden{64, 64};
  double learning_rate = 5e-3;
  std::size_t epochs = 500;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::kCce;
  double held_out_fraction = 0.2;
  ReplicaClassMap class_map;
};

struct TrainingResult {
  PredictionModel model;
  std::vector<EpochMetrics> history;
  std::size_t train_size = 0;
  std::size_t held_out_size = 0;
};

struct Gradients {
  double loss = 0.0;
  std::vector<std::vector<double>> weights;  // same layout as DenseLayer::weights
  std::vector<std::vector<double>> bias;
};

inline constexpr double kLogClip = 1e-12;

double relu(double h);

// Max-shifted softmax.
std::vector<double> softmax(std::span<const double> logits);

// Raw logits of the final layer (before softmax).
std::vector<double> logits(const PredictionModel& model, const FeatureVector& x);
std::vector<double> forward(const PredictionModel& model, const FeatureVector& x);

double loss(LossKind kind, std::span<const double> predicted, std::span<const double> target);
// dL/dp, consistent with the clipping applied in loss().
std::vector<double> loss_gradient(LossKind kind, std::span<const double> predicted,
                                  std::span<const double> target);

std::vector<double> one_hot(std::size_t label, std::size_t classes);

// Loss for one sample under model.loss_kind, and its gradient w.r.t. every
// weight and bias.
Gradients backpropagate(const PredictionModel& model, const TrainingSample& sample);
double sample_loss(const PredictionModel& model, const TrainingSample& sample);

// Glorot-uniform weights, zero biases.
PredictionModel initialize_model(const std::vector<std::size_t>& hidden, const ReplicaClassMap& class_map,
                                 LossKind loss_kind, std::uint64_t seed);

FeatureStats fit_feature_stats(std::span<const TrainingSample> samples);

// Throws DegenerateDataset when fewer than two distinct labels are present.
TrainingResult train(std::span<const TrainingSample> samples, const TrainingOptions& options);

// Index of the largest component; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

int predict_replicas(const PredictionModel& model, const ContainerConfig& w, double rate);

Metrics evaluate(const PredictionModel& model, std::span<const TrainingSample> samples);

// Macro metrics from a confusion matrix (rows = truth, columns = prediction).
// Classes with no support and no predictions contribute zero.
Metrics metrics_from_confusion(const std::vector<std::vector<std::size_t>>& confusion);

}  // namespace faasprov

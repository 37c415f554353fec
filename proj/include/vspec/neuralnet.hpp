#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vspec/training_data.hpp"

namespace vspec {

enum class Activation { Logistic, Tanh, Identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// input -> hidden... -> output, plus an optional direct input -> output term.
// A "3-layer" net is one hidden layer.
struct NetworkTopology {
  std::size_t input_count = 1;
  std::vector<std::size_t> hidden_widths;
  std::size_t output_count = 1;
  bool jump_connections = false;
  Activation hidden_activation = Activation::Logistic;
  Activation output_activation = Activation::Logistic;

  void validate() const;
  std::size_t parameter_count() const;
  std::size_t hidden_neurons() const;
  bool operator==(const NetworkTopology&) const = default;
};

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  bool operator==(const Matrix&) const = default;
};

struct DenseLayer {
  Matrix weights;  // out x in
  std::vector<double> bias;
  bool operator==(const DenseLayer&) const = default;
};

struct WeightSet {
  std::vector<DenseLayer> layers;  // hidden layers then the output layer
  std::optional<Matrix> jump;      // output x input

  // Parameter blocks in canonical order: per layer weights then bias, then jump.
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;
  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  bool all_finite() const;
  // Throws DomainError when shapes disagree with the topology.
  void check_against(const NetworkTopology& topology) const;
  bool operator==(const WeightSet&) const = default;
};

// Weights uniform in [-0.5, 0.5], biases zero.
WeightSet init_network(const NetworkTopology& topology, std::uint64_t seed);

std::vector<double> forward(const WeightSet& weights, const NetworkTopology& topology, std::span<const double> input);

// Per-sample loss: mean over outputs of the squared error.
double sample_loss(const WeightSet& weights, const NetworkTopology& topology, std::span<const double> input,
                   std::span<const double> target);
// Mean of sample_loss over the set.
double mean_squared_error(const WeightSet& weights, const NetworkTopology& topology, const TrainingData& data);

// d(sample_loss)/d(parameter), flattened in WeightSet::blocks() order.
std::vector<double> backprop_gradient(const WeightSet& weights, const NetworkTopology& topology,
                                      std::span<const double> input, std::span<const double> target);
// Central differences of sample_loss; independent of the backprop path.
std::vector<double> numerical_gradient(const WeightSet& weights, const NetworkTopology& topology,
                                       std::span<const double> input, std::span<const double> target, double eps);

struct TrainingConfig {
  double learning_rate = 0.1;
  double momentum = 0.5;
  std::size_t max_epochs = 1000;
  std::size_t patience = 100;
  std::uint64_t seed = 42;
  // Abort once the epoch's train MSE exceeds this or turns non-finite.
  double divergence_threshold = 1e6;

  void validate() const;
};

enum class StopReason { Patience, MaxEpochs };
std::string to_string(StopReason r);

struct TrainingTrace {
  std::vector<double> train_mse;  // index e-1 holds epoch e
  std::vector<double> test_mse;
  std::size_t best_epoch = 0;  // 1-based; 0 means no epoch completed
  StopReason stopped_reason = StopReason::MaxEpochs;

  std::size_t epochs() const { return test_mse.size(); }
};

// Patience rule over a stream of test errors. An epoch improves only if its
// error is strictly below the best seen so far.
class EarlyStopping {
public:
  explicit EarlyStopping(std::size_t patience);

  // Records the next epoch's test error; returns true if it is a new best.
  bool observe(double test_error);
  bool should_stop() const { return since_best_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_error() const { return best_; }
  std::size_t epochs() const { return epoch_; }

private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_ = 0.0;
};

class TrainingError : public std::runtime_error {
public:
  TrainingError(const std::string& what, TrainingTrace trace) : std::runtime_error(what), trace_(std::move(trace)) {}
  const TrainingTrace& trace() const { return trace_; }

private:
  TrainingTrace trace_;
};

struct TrainingResult {
  WeightSet weights;  // snapshot from trace.best_epoch
  TrainingTrace trace;
};

// Per-sample backpropagation with momentum, reshuffling every epoch.
// Stops after `patience` epochs without test improvement or at max_epochs.
TrainingResult train(const NetworkTopology& topology, const TrainingData& train_set, const TrainingData& test_set,
                     const TrainingConfig& config);
// Same, starting from the given weights instead of init_network(topology, config.seed).
TrainingResult train(const NetworkTopology& topology, WeightSet initial, const TrainingData& train_set,
                     const TrainingData& test_set, const TrainingConfig& config);

}  // namespace vspec

#include "vspec/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vspec/errors.hpp"
#include "vspec/random.hpp"

namespace vspec {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Logistic: return "logistic";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  return "logistic";
}

Activation activation_from_string(const std::string& s) {
  if (s == "logistic") return Activation::Logistic;
  if (s == "tanh") return Activation::Tanh;
  if (s == "identity") return Activation::Identity;
  throw DomainError("unknown activation '" + s + "'");
}

std::string to_string(StopReason r) { return r == StopReason::Patience ? "patience" : "max_epochs"; }

void NetworkTopology::validate() const {
  if (input_count < 1) throw DomainError("topology: input_count must be >= 1");
  if (output_count < 1) throw DomainError("topology: output_count must be >= 1");
  for (std::size_t i = 0; i < hidden_widths.size(); ++i)
    if (hidden_widths[i] < 1) throw DomainError("topology: hidden layer " + std::to_string(i + 1) + " has width 0");
}

std::size_t NetworkTopology::parameter_count() const {
  std::size_t n = 0, prev = input_count;
  for (auto w : hidden_widths) {
    n += w * prev + w;
    prev = w;
  }
  n += output_count * prev + output_count;
  if (jump_connections) n += output_count * input_count;
  return n;
}

std::size_t NetworkTopology::hidden_neurons() const {
  return std::accumulate(hidden_widths.begin(), hidden_widths.end(), std::size_t{0});
}

std::vector<std::span<double>> WeightSet::blocks() {
  std::vector<std::span<double>> out;
  for (auto& l : layers) {
    out.emplace_back(l.weights.data);
    out.emplace_back(l.bias);
  }
  if (jump) out.emplace_back(jump->data);
  return out;
}

std::vector<std::span<const double>> WeightSet::blocks() const {
  std::vector<std::span<const double>> out;
  for (const auto& l : layers) {
    out.emplace_back(l.weights.data);
    out.emplace_back(l.bias);
  }
  if (jump) out.emplace_back(jump->data);
  return out;
}

std::size_t WeightSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks()) n += b.size();
  return n;
}

std::vector<double> WeightSet::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& b : blocks()) out.insert(out.end(), b.begin(), b.end());
  return out;
}

bool WeightSet::all_finite() const {
  for (const auto& b : blocks())
    for (double v : b)
      if (!std::isfinite(v)) return false;
  return true;
}

void WeightSet::check_against(const NetworkTopology& topology) const {
  topology.validate();
  if (layers.size() != topology.hidden_widths.size() + 1)
    throw DomainError("weights: layer count does not match topology");
  std::size_t prev = topology.input_count;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::size_t out = l < topology.hidden_widths.size() ? topology.hidden_widths[l] : topology.output_count;
    const auto& layer = layers[l];
    if (layer.weights.rows != out || layer.weights.cols != prev || layer.weights.data.size() != out * prev ||
        layer.bias.size() != out)
      throw DomainError("weights: layer " + std::to_string(l + 1) + " shape does not match topology");
    prev = out;
  }
  if (topology.jump_connections != jump.has_value())
    throw DomainError("weights: jump matrix presence does not match topology");
  if (jump && (jump->rows != topology.output_count || jump->cols != topology.input_count ||
               jump->data.size() != jump->rows * jump->cols))
    throw DomainError("weights: jump matrix shape does not match topology");
}

WeightSet init_network(const NetworkTopology& topology, std::uint64_t seed) {
  topology.validate();
  Rng rng(seed);
  WeightSet w;
  std::size_t prev = topology.input_count;
  auto make_layer = [&](std::size_t out) {
    DenseLayer l{Matrix(out, prev), std::vector<double>(out, 0.0)};
    for (double& v : l.weights.data) v = rng.uniform(-0.5, 0.5);
    prev = out;
    return l;
  };
  for (auto width : topology.hidden_widths) w.layers.push_back(make_layer(width));
  w.layers.push_back(make_layer(topology.output_count));
  if (topology.jump_connections) {
    Matrix j(topology.output_count, topology.input_count);
    for (double& v : j.data) v = rng.uniform(-0.5, 0.5);
    w.jump = std::move(j);
  }
  return w;
}

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::Logistic: return 1.0 / (1.0 + std::exp(-z));
    case Activation::Tanh: return std::tanh(z);
    case Activation::Identity: return z;
  }
  return z;
}

// Derivative expressed through the activation's output value.
double derivative_from_output(Activation a, double y) {
  switch (a) {
    case Activation::Logistic: return y * (1.0 - y);
    case Activation::Tanh: return 1.0 - y * y;
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

// Activations for every layer of one forward pass; reused across samples.
struct Workspace {
  std::vector<std::vector<double>> act;    // act[0] = input, act[L] = output
  std::vector<std::vector<double>> delta;  // delta[l] pairs with layers[l]

  explicit Workspace(const NetworkTopology& t) {
    act.emplace_back(t.input_count);
    for (auto w : t.hidden_widths) act.emplace_back(w);
    act.emplace_back(t.output_count);
    for (std::size_t l = 1; l < act.size(); ++l) delta.emplace_back(act[l].size());
  }
};

void run_forward(const WeightSet& w, const NetworkTopology& t, std::span<const double> x, Workspace& ws) {
  std::copy(x.begin(), x.end(), ws.act[0].begin());
  const std::size_t n_layers = w.layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& layer = w.layers[l];
    const auto& in = ws.act[l];
    auto& out = ws.act[l + 1];
    const bool is_output = l + 1 == n_layers;
    const Activation f = is_output ? t.output_activation : t.hidden_activation;
    for (std::size_t r = 0; r < layer.weights.rows; ++r) {
      const double* row = layer.weights.data.data() + r * layer.weights.cols;
      double z = layer.bias[r];
      for (std::size_t c = 0; c < layer.weights.cols; ++c) z += row[c] * in[c];
      if (is_output && w.jump) {
        const double* jrow = w.jump->data.data() + r * w.jump->cols;
        for (std::size_t c = 0; c < w.jump->cols; ++c) z += jrow[c] * x[c];
      }
      out[r] = activate(f, z);
    }
  }
}

double loss_of(std::span<const double> y, std::span<const double> t) {
  double e = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double d = y[k] - t[k];
    e += d * d;
  }
  return e / static_cast<double>(y.size());
}

void check_sample(const NetworkTopology& t, std::span<const double> x, std::span<const double> target) {
  if (x.size() != t.input_count)
    throw DomainError("network expects " + std::to_string(t.input_count) + " inputs, got " + std::to_string(x.size()));
  if (target.size() != t.output_count)
    throw DomainError("network has " + std::to_string(t.output_count) + " outputs, target has " +
                      std::to_string(target.size()));
}

// Fills ws.delta with dE/dz per layer after run_forward.
void run_backward(const WeightSet& w, const NetworkTopology& t, std::span<const double> target, Workspace& ws) {
  const std::size_t n_layers = w.layers.size();
  const auto& y = ws.act[n_layers];
  auto& d_out = ws.delta[n_layers - 1];
  const double scale = 2.0 / static_cast<double>(y.size());
  for (std::size_t k = 0; k < y.size(); ++k)
    d_out[k] = scale * (y[k] - target[k]) * derivative_from_output(t.output_activation, y[k]);
  for (std::size_t l = n_layers - 1; l > 0; --l) {
    const auto& upper = w.layers[l].weights;
    const auto& d_up = ws.delta[l];
    auto& d = ws.delta[l - 1];
    const auto& a = ws.act[l];
    std::fill(d.begin(), d.end(), 0.0);
    for (std::size_t r = 0; r < upper.rows; ++r) {
      const double* row = upper.data.data() + r * upper.cols;
      const double g = d_up[r];
      for (std::size_t c = 0; c < upper.cols; ++c) d[c] += row[c] * g;
    }
    for (std::size_t c = 0; c < d.size(); ++c) d[c] *= derivative_from_output(t.hidden_activation, a[c]);
  }
}

// Visits (block, index, dE/dparam) in canonical order.
template <typename F>
void for_each_gradient(const WeightSet& w, std::span<const double> x, const Workspace& ws, F&& f) {
  std::size_t block = 0;
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const auto& in = ws.act[l];
    const auto& d = ws.delta[l];
    const auto& m = w.layers[l].weights;
    for (std::size_t r = 0; r < m.rows; ++r)
      for (std::size_t c = 0; c < m.cols; ++c) f(block, r * m.cols + c, d[r] * in[c]);
    ++block;
    for (std::size_t r = 0; r < d.size(); ++r) f(block, r, d[r]);
    ++block;
  }
  if (w.jump) {
    const auto& d = ws.delta.back();
    for (std::size_t r = 0; r < w.jump->rows; ++r)
      for (std::size_t c = 0; c < w.jump->cols; ++c) f(block, r * w.jump->cols + c, d[r] * x[c]);
  }
}

}  // namespace

std::vector<double> forward(const WeightSet& weights, const NetworkTopology& topology, std::span<const double> input) {
  weights.check_against(topology);
  if (input.size() != topology.input_count)
    throw DomainError("network expects " + std::to_string(topology.input_count) + " inputs, got " +
                      std::to_string(input.size()));
  Workspace ws(topology);
  run_forward(weights, topology, input, ws);
  return ws.act.back();
}

double sample_loss(const WeightSet& weights, const NetworkTopology& topology, std::span<const double> input,
                   std::span<const double> target) {
  check_sample(topology, input, target);
  return loss_of(forward(weights, topology, input), target);
}

double mean_squared_error(const WeightSet& weights, const NetworkTopology& topology, const TrainingData& data) {
  weights.check_against(topology);
  if (data.empty()) throw DomainError("mean_squared_error: empty data set");
  if (data.input_count != topology.input_count || data.output_count != topology.output_count)
    throw DomainError("mean_squared_error: data shape does not match topology");
  Workspace ws(topology);
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    run_forward(weights, topology, data.input(i), ws);
    sum += loss_of(ws.act.back(), data.target(i));
  }
  return sum / static_cast<double>(data.size());
}

std::vector<double> backprop_gradient(const WeightSet& weights, const NetworkTopology& topology,
                                      std::span<const double> input, std::span<const double> target) {
  weights.check_against(topology);
  check_sample(topology, input, target);
  Workspace ws(topology);
  run_forward(weights, topology, input, ws);
  run_backward(weights, topology, target, ws);
  std::vector<double> g;
  g.reserve(weights.parameter_count());
  for_each_gradient(weights, input, ws, [&](std::size_t, std::size_t, double v) { g.push_back(v); });
  return g;
}

std::vector<double> numerical_gradient(const WeightSet& weights, const NetworkTopology& topology,
                                       std::span<const double> input, std::span<const double> target, double eps) {
  if (!(eps > 0.0)) throw DomainError("numerical_gradient: eps must be > 0");
  weights.check_against(topology);
  check_sample(topology, input, target);
  WeightSet probe = weights;
  std::vector<double> g;
  g.reserve(weights.parameter_count());
  for (auto block : probe.blocks()) {
    for (double& p : block) {
      const double saved = p;
      p = saved + eps;
      const double up = sample_loss(probe, topology, input, target);
      p = saved - eps;
      const double down = sample_loss(probe, topology, input, target);
      p = saved;
      g.push_back((up - down) / (2.0 * eps));
    }
  }
  return g;
}

void TrainingConfig::validate() const {
  // A zero rate is accepted: it trains nothing but still runs the protocol.
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw DomainError("training: learning_rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("training: momentum must be in [0, 1)");
  if (patience < 1) throw DomainError("training: patience must be >= 1");
  if (max_epochs < 1) throw DomainError("training: max_epochs must be >= 1");
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience < 1) throw DomainError("early stopping: patience must be >= 1");
}

bool EarlyStopping::observe(double test_error) {
  ++epoch_;
  if (best_epoch_ == 0 || test_error < best_) {
    best_ = test_error;
    best_epoch_ = epoch_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

TrainingResult train(const NetworkTopology& topology, const TrainingData& train_set, const TrainingData& test_set,
                     const TrainingConfig& config) {
  return train(topology, init_network(topology, config.seed), train_set, test_set, config);
}

TrainingResult train(const NetworkTopology& topology, WeightSet weights, const TrainingData& train_set,
                     const TrainingData& test_set, const TrainingConfig& config) {
  config.validate();
  weights.check_against(topology);
  TrainingTrace trace;
  if (train_set.empty() || test_set.empty()) throw TrainingError("training: train and test sets must be non-empty", trace);
  for (const auto* d : {&train_set, &test_set})
    if (d->input_count != topology.input_count || d->output_count != topology.output_count)
      throw DomainError("training: data shape does not match topology");

  // Velocity has the same shape as the weights.
  WeightSet velocity = weights;
  for (auto b : velocity.blocks()) std::fill(b.begin(), b.end(), 0.0);

  Workspace ws(topology);
  Rng order_rng(mix_seed(config.seed, 0x5348));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  EarlyStopping stopper(config.patience);
  WeightSet best = weights;
  const double eta = config.learning_rate;
  const double alpha = config.momentum;

  // Spans stay valid: the block vectors never reallocate during training.
  auto wb = weights.blocks();
  auto vb = velocity.blocks();
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    double sum = 0.0;
    for (auto i : order) {
      const auto x = train_set.input(i);
      run_forward(weights, topology, x, ws);
      sum += loss_of(ws.act.back(), train_set.target(i));
      run_backward(weights, topology, train_set.target(i), ws);
      for_each_gradient(weights, x, ws, [&](std::size_t b, std::size_t k, double g) {
        double& v = vb[b][k];
        v = -eta * g + alpha * v;
        wb[b][k] += v;
      });
    }
    const double train_mse = sum / static_cast<double>(train_set.size());
    trace.train_mse.push_back(train_mse);
    if (!std::isfinite(train_mse) || train_mse > config.divergence_threshold || !weights.all_finite()) {
      trace.test_mse.push_back(std::numeric_limits<double>::quiet_NaN());
      throw TrainingError("training diverged at epoch " + std::to_string(epoch), trace);
    }
    const double test_mse = mean_squared_error(weights, topology, test_set);
    trace.test_mse.push_back(test_mse);
    if (stopper.observe(test_mse)) best = weights;
    trace.best_epoch = stopper.best_epoch();
    if (stopper.should_stop()) {
      trace.stopped_reason = StopReason::Patience;
      return {std::move(best), std::move(trace)};
    }
  }
  trace.stopped_reason = StopReason::MaxEpochs;
  return {std::move(best), std::move(trace)};
}

}  // namespace vspec

#include "vspec/achem.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <numeric>
#include <ostream>
#include <thread>

#include "vspec/errors.hpp"
#include "vspec/metrics.hpp"

namespace vspec {

using nlohmann::ordered_json;

void GeneBounds::validate() const {
  if (min_layers < 1 || max_layers < min_layers) throw DomainError("gene bounds: need 1 <= min_layers <= max_layers");
  if (min_width < 1 || max_width < min_width) throw DomainError("gene bounds: need 1 <= min_width <= max_width");
  if (!(min_learning_rate > 0.0) || max_learning_rate < min_learning_rate)
    throw DomainError("gene bounds: need 0 < min_learning_rate <= max_learning_rate");
  if (!(min_momentum >= 0.0) || !(max_momentum < 1.0) || max_momentum < min_momentum)
    throw DomainError("gene bounds: need 0 <= min_momentum <= max_momentum < 1");
}

std::size_t Molecule::total_neurons() const { return std::accumulate(widths.begin(), widths.end(), std::size_t{0}); }

bool Molecule::within(const GeneBounds& b) const {
  if (widths.size() < b.min_layers || widths.size() > b.max_layers) return false;
  for (auto w : widths)
    if (w < b.min_width || w > b.max_width) return false;
  return learning_rate >= b.min_learning_rate && learning_rate <= b.max_learning_rate && momentum >= b.min_momentum &&
         momentum <= b.max_momentum;
}

bool Molecule::same_genes(const Molecule& o) const {
  return widths == o.widths && jump == o.jump && learning_rate == o.learning_rate && momentum == o.momentum;
}

ordered_json molecule_to_json(const Molecule& m) {
  ordered_json j = {{"hidden_layer_count", m.hidden_layer_count()},
                    {"widths", m.widths},
                    {"jump", m.jump},
                    {"learning_rate", m.learning_rate},
                    {"momentum", m.momentum}};
  j["fitness"] = m.fitness ? ordered_json(*m.fitness) : ordered_json();
  return j;
}

Molecule molecule_from_json(const ordered_json& j) {
  try {
    Molecule m;
    m.widths = j.at("widths").get<std::vector<std::size_t>>();
    if (j.contains("hidden_layer_count") && j.at("hidden_layer_count").get<std::size_t>() != m.widths.size())
      throw FormatError("molecule: hidden_layer_count does not match widths");
    m.jump = j.at("jump").get<bool>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.momentum = j.at("momentum").get<double>();
    if (j.contains("fitness") && !j.at("fitness").is_null()) m.fitness = j.at("fitness").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("molecule: ") + e.what());
  }
}

namespace {

std::size_t draw_width(const GeneBounds& b, Rng& rng) {
  return static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(b.min_width), static_cast<std::int64_t>(b.max_width)));
}

// Uniform over [lo, hi] without `current`; requires hi > lo.
std::size_t draw_other(std::size_t lo, std::size_t hi, std::size_t current, Rng& rng) {
  auto v = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi) - 1));
  return v >= current ? v + 1 : v;
}

// Gaussian step of 10% of the range, clipped; never returns x unchanged.
double perturb(double x, double lo, double hi, Rng& rng) {
  const double sigma = 0.1 * (hi - lo);
  for (int tries = 0; tries < 64; ++tries) {
    const double y = std::clamp(x + rng.normal(0.0, sigma), lo, hi);
    if (y != x) return y;
  }
  return x - lo > hi - x ? x - sigma : x + sigma;
}

double blend(double p1, double p2, double u, double lo, double hi) { return std::clamp(p2 + u * (p1 - p2), lo, hi); }

}  // namespace

Molecule random_molecule(const GeneBounds& bounds, Rng& rng) {
  Molecule m;
  const auto layers = rng.uniform_int(static_cast<std::int64_t>(bounds.min_layers), static_cast<std::int64_t>(bounds.max_layers));
  for (std::int64_t i = 0; i < layers; ++i) m.widths.push_back(draw_width(bounds, rng));
  m.jump = rng.bernoulli(0.5);
  m.learning_rate = rng.uniform(bounds.min_learning_rate, bounds.max_learning_rate);
  m.momentum = rng.uniform(bounds.min_momentum, bounds.max_momentum);
  return m;
}

std::pair<Molecule, Molecule> collide(const Molecule& m1, const Molecule& m2, const GeneBounds& bounds, Rng& rng) {
  // Each coin decides which parent child A inherits from; child B takes the other.
  Molecule a, b;
  const bool layers_from_first = rng.bernoulli(0.5);
  const std::size_t layers_a = (layers_from_first ? m1 : m2).widths.size();
  const std::size_t layers_b = (layers_from_first ? m2 : m1).widths.size();
  const std::size_t longest = std::max(m1.widths.size(), m2.widths.size());
  for (std::size_t i = 0; i < longest; ++i) {
    const bool from_first = rng.bernoulli(0.5);
    auto pick = [&](bool first) -> std::size_t {
      const Molecule& p = first ? m1 : m2;
      const Molecule& q = first ? m2 : m1;
      return i < p.widths.size() ? p.widths[i] : q.widths[i];
    };
    if (i < layers_a) a.widths.push_back(pick(from_first));
    if (i < layers_b) b.widths.push_back(pick(!from_first));
  }
  const bool jump_from_first = rng.bernoulli(0.5);
  a.jump = jump_from_first ? m1.jump : m2.jump;
  b.jump = jump_from_first ? m2.jump : m1.jump;

  const double u_rate = rng.uniform(-0.25, 1.25);
  const double u_mom = rng.uniform(-0.25, 1.25);
  a.learning_rate = blend(m1.learning_rate, m2.learning_rate, u_rate, bounds.min_learning_rate, bounds.max_learning_rate);
  b.learning_rate = blend(m2.learning_rate, m1.learning_rate, u_rate, bounds.min_learning_rate, bounds.max_learning_rate);
  a.momentum = blend(m1.momentum, m2.momentum, u_mom, bounds.min_momentum, bounds.max_momentum);
  b.momentum = blend(m2.momentum, m1.momentum, u_mom, bounds.min_momentum, bounds.max_momentum);
  return {std::move(a), std::move(b)};
}

Molecule wall_collision(const Molecule& m, const GeneBounds& bounds, Rng& rng) {
  enum class Gene { Layers, Width, Jump, Rate, Momentum };
  std::vector<std::pair<Gene, std::size_t>> genes;
  if (bounds.max_layers > bounds.min_layers) genes.emplace_back(Gene::Layers, 0);
  if (bounds.max_width > bounds.min_width)
    for (std::size_t i = 0; i < m.widths.size(); ++i) genes.emplace_back(Gene::Width, i);
  genes.emplace_back(Gene::Jump, 0);
  if (bounds.max_learning_rate > bounds.min_learning_rate) genes.emplace_back(Gene::Rate, 0);
  if (bounds.max_momentum > bounds.min_momentum) genes.emplace_back(Gene::Momentum, 0);

  Molecule out = m;
  out.fitness.reset();
  const auto [gene, index] = genes[rng.index(genes.size())];
  switch (gene) {
    case Gene::Layers: {
      const auto n = draw_other(bounds.min_layers, bounds.max_layers, m.widths.size(), rng);
      while (out.widths.size() > n) out.widths.pop_back();
      while (out.widths.size() < n) out.widths.push_back(draw_width(bounds, rng));
      break;
    }
    case Gene::Width: out.widths[index] = draw_other(bounds.min_width, bounds.max_width, m.widths[index], rng); break;
    case Gene::Jump: out.jump = !m.jump; break;
    case Gene::Rate:
      out.learning_rate = perturb(m.learning_rate, bounds.min_learning_rate, bounds.max_learning_rate, rng);
      break;
    case Gene::Momentum: out.momentum = perturb(m.momentum, bounds.min_momentum, bounds.max_momentum, rng); break;
  }
  return out;
}

std::size_t gene_distance(const Molecule& a, const Molecule& b) {
  std::size_t d = 0;
  const std::size_t common = std::min(a.widths.size(), b.widths.size());
  if (a.widths.size() != b.widths.size()) ++d;
  for (std::size_t i = 0; i < common; ++i) d += a.widths[i] != b.widths[i];
  d += a.jump != b.jump;
  d += a.learning_rate != b.learning_rate;
  d += a.momentum != b.momentum;
  return d;
}

NetworkTopology molecule_topology(const Molecule& m, std::size_t input_count, std::size_t output_count) {
  NetworkTopology t;
  t.input_count = input_count;
  t.hidden_widths = m.widths;
  t.output_count = output_count;
  t.jump_connections = m.jump;
  return t;
}

double score_predictions(std::span<const double> predicted, std::span<const double> actual, std::size_t outputs,
                         FitnessMetric metric) {
  if (metric == FitnessMetric::NegativeMse) {
    if (predicted.size() != actual.size() || predicted.empty()) throw DomainError("score: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) s += (predicted[i] - actual[i]) * (predicted[i] - actual[i]);
    return -s / static_cast<double>(predicted.size());
  }
  std::vector<std::string> labels(outputs);
  return correlation_report(predicted, actual, outputs, std::move(labels)).mean_r();
}

double evaluate_molecule(const Molecule& m, const SplitSet& split, Direction direction, const EvaluationBudget& budget) {
  const auto train_data = make_training_data(split.train, direction);
  const auto test_data = make_training_data(split.test, direction);
  const auto val_data = make_training_data(split.validation, direction);
  if (val_data.empty()) throw DomainError("evaluate_molecule: empty validation set");
  const auto topology = molecule_topology(m, train_data.input_count, train_data.output_count);

  TrainingConfig cfg;
  cfg.learning_rate = m.learning_rate;
  cfg.momentum = m.momentum;
  cfg.max_epochs = budget.max_epochs;
  cfg.patience = budget.patience;
  cfg.seed = budget.training_seed;

  TrainingResult trained;
  try {
    trained = train(topology, train_data, test_data, cfg);
  } catch (const TrainingError&) {
    return kDivergedFitness;
  }
  std::vector<double> predicted;
  predicted.reserve(val_data.targets.size());
  for (std::size_t i = 0; i < val_data.size(); ++i) {
    const auto y = forward(trained.weights, topology, val_data.input(i));
    predicted.insert(predicted.end(), y.begin(), y.end());
  }
  return score_predictions(predicted, val_data.targets, val_data.output_count, budget.metric);
}

void ReactorConfig::validate() const {
  if (population_size < 2) throw DomainError("reactor: population_size must be >= 2");
  if (!(consensus_fraction > 0.0 && consensus_fraction <= 1.0)) throw DomainError("reactor: consensus_fraction must be in (0, 1]");
  if (!(wall_collision_probability >= 0.0 && wall_collision_probability <= 1.0))
    throw DomainError("reactor: wall_collision_probability must be in [0, 1]");
  bounds.validate();
}

std::string to_string(Termination t) { return t == Termination::Consensus ? "consensus" : "budget"; }

double consensus_observed(const std::vector<Molecule>& population) {
  if (population.empty()) return 0.0;
  std::map<StructureKey, std::size_t> counts;
  std::size_t top = 0;
  for (const auto& m : population) top = std::max(top, ++counts[m.structure()]);
  return static_cast<double>(top) / static_cast<double>(population.size());
}

void filter_population(std::vector<Molecule>& molecules, std::size_t keep) {
  std::stable_sort(molecules.begin(), molecules.end(), [](const Molecule& a, const Molecule& b) {
    const double fa = a.fitness.value_or(-std::numeric_limits<double>::infinity());
    const double fb = b.fitness.value_or(-std::numeric_limits<double>::infinity());
    if (fa != fb) return fa > fb;
    return a.total_neurons() < b.total_neurons();
  });
  if (molecules.size() > keep) molecules.resize(keep);
}

namespace {

using GeneKey = std::tuple<std::vector<std::size_t>, bool, double, double>;

GeneKey gene_key(const Molecule& m) { return {m.widths, m.jump, m.learning_rate, m.momentum}; }

// Evaluates every molecule lacking fitness; duplicates share one evaluation.
// Results are written back by index, so thread count cannot change them.
class Evaluator {
public:
  Evaluator(const FitnessFunction& fn, std::size_t threads) : fn_(fn), threads_(threads) {
    if (threads_ == 0) threads_ = std::max(1u, std::thread::hardware_concurrency());
  }

  void evaluate(std::vector<Molecule>& molecules) {
    std::vector<GeneKey> pending;
    std::map<GeneKey, std::size_t> pending_index;
    for (const auto& m : molecules) {
      if (m.fitness) continue;
      auto key = gene_key(m);
      if (cache_.count(key) || pending_index.count(key)) continue;
      pending_index.emplace(key, pending.size());
      pending.push_back(std::move(key));
    }
    std::vector<const Molecule*> todo(pending.size());
    for (const auto& m : molecules) {
      if (m.fitness) continue;
      auto it = pending_index.find(gene_key(m));
      if (it != pending_index.end()) todo[it->second] = &m;
    }
    std::vector<double> results(todo.size());
    if (threads_ <= 1 || todo.size() <= 1) {
      for (std::size_t i = 0; i < todo.size(); ++i) results[i] = fn_(*todo[i]);
    } else {
      for (std::size_t start = 0; start < todo.size(); start += threads_) {
        std::vector<std::future<double>> jobs;
        const std::size_t end = std::min(todo.size(), start + threads_);
        for (std::size_t i = start; i < end; ++i)
          jobs.push_back(std::async(std::launch::async, [this, m = todo[i]] { return fn_(*m); }));
        for (std::size_t i = start; i < end; ++i) results[i] = jobs[i - start].get();
      }
    }
    for (std::size_t i = 0; i < pending.size(); ++i) cache_.emplace(pending[i], results[i]);
    evaluations_ += pending.size();
    for (auto& m : molecules)
      if (!m.fitness) m.fitness = cache_.at(gene_key(m));
  }

  std::size_t evaluations() const { return evaluations_; }

private:
  const FitnessFunction& fn_;
  std::size_t threads_;
  std::map<GeneKey, double> cache_;
  std::size_t evaluations_ = 0;
};

CycleStats stats_of(std::size_t cycle, const std::vector<Molecule>& pop) {
  CycleStats s;
  s.cycle = cycle;
  s.best_fitness = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const auto& m : pop) {
    s.best_fitness = std::max(s.best_fitness, *m.fitness);
    sum += *m.fitness;
  }
  s.mean_fitness = sum / static_cast<double>(pop.size());
  s.consensus_observed = consensus_observed(pop);
  return s;
}

bool has_consensus(const std::vector<Molecule>& pop, double fraction) {
  return consensus_observed(pop) * static_cast<double>(pop.size()) >= fraction * static_cast<double>(pop.size()) - 1e-9;
}

}  // namespace

ReactorResult run_reactor(const ReactorConfig& config, const FitnessFunction& fitness,
                          std::optional<std::vector<Molecule>> initial) {
  config.validate();
  Rng rng(config.seed);
  Evaluator evaluator(fitness, config.threads);

  std::vector<Molecule> pop;
  if (initial) {
    pop = std::move(*initial);
    if (pop.size() != config.population_size)
      throw DomainError("reactor: initial population size does not match population_size");
    for (const auto& m : pop)
      if (!m.within(config.bounds)) throw DomainError("reactor: initial molecule violates gene bounds");
  } else {
    for (std::size_t i = 0; i < config.population_size; ++i) pop.push_back(random_molecule(config.bounds, rng));
  }
  evaluator.evaluate(pop);
  filter_population(pop, config.population_size);

  ReactorResult result;
  result.history.push_back(stats_of(0, pop));
  result.termination = Termination::Budget;
  if (has_consensus(pop, config.consensus_fraction)) {
    result.termination = Termination::Consensus;
  } else {
    for (std::size_t cycle = 1; cycle <= config.max_cycles; ++cycle) {
      std::vector<Molecule> offspring;
      for (std::size_t k = 0; k < config.collisions_per_cycle; ++k) {
        if (rng.bernoulli(config.wall_collision_probability)) {
          offspring.push_back(wall_collision(pop[rng.index(pop.size())], config.bounds, rng));
        } else {
          const std::size_t i = rng.index(pop.size());
          std::size_t j = rng.index(pop.size() - 1);
          if (j >= i) ++j;
          auto [a, b] = collide(pop[i], pop[j], config.bounds, rng);
          offspring.push_back(std::move(a));
          offspring.push_back(std::move(b));
        }
      }
      evaluator.evaluate(offspring);
      pop.insert(pop.end(), std::make_move_iterator(offspring.begin()), std::make_move_iterator(offspring.end()));
      filter_population(pop, config.population_size);
      result.history.push_back(stats_of(cycle, pop));
      if (has_consensus(pop, config.consensus_fraction)) {
        result.termination = Termination::Consensus;
        break;
      }
    }
  }
  result.best = pop.front();
  result.population = std::move(pop);
  result.evaluations = evaluator.evaluations();
  return result;
}

ReactorResult run_reactor(const ReactorConfig& config, const SplitSet& split, Direction direction,
                          const EvaluationBudget& budget) {
  FitnessFunction fn = [&](const Molecule& m) { return evaluate_molecule(m, split, direction, budget); };
  return run_reactor(config, fn);
}

void write_history_csv(std::ostream& out, const ReactorResult& result) {
  out << "cycle,best_fitness,mean_fitness,consensus_fraction_observed\n";
  for (const auto& h : result.history)
    out << h.cycle << ',' << format_double(h.best_fitness) << ',' << format_double(h.mean_fitness) << ','
        << format_double(h.consensus_observed) << '\n';
}

}  // namespace vspec

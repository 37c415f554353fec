#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "vspec/dataset.hpp"
#include "vspec/neuralnet.hpp"
#include "vspec/random.hpp"

namespace vspec {

struct GeneBounds {
  std::size_t min_layers = 1;
  std::size_t max_layers = 3;
  std::size_t min_width = 1;
  std::size_t max_width = 200;
  double min_learning_rate = 0.001;
  double max_learning_rate = 1.0;
  double min_momentum = 0.0;
  double max_momentum = 0.99;

  void validate() const;
};

// Structure tuple compared by the consensus test.
using StructureKey = std::tuple<std::size_t, std::vector<std::size_t>, bool>;

struct Molecule {
  std::vector<std::size_t> widths;  // one per hidden layer
  bool jump = false;
  double learning_rate = 0.1;
  double momentum = 0.5;
  std::optional<double> fitness;

  std::size_t hidden_layer_count() const { return widths.size(); }
  std::size_t total_neurons() const;
  StructureKey structure() const { return {widths.size(), widths, jump}; }
  bool within(const GeneBounds& b) const;
  // Equality on genes only; fitness is ignored.
  bool same_genes(const Molecule& o) const;
};

nlohmann::ordered_json molecule_to_json(const Molecule& m);
Molecule molecule_from_json(const nlohmann::ordered_json& j);

Molecule random_molecule(const GeneBounds& bounds, Rng& rng);

// Bimolecular reaction. Discrete genes are inherited per gene from either
// parent (the second child takes the complementary picks); the learning rate
// and momentum are blended u*p1 + (1-u)*p2 with u in [-0.25, 1.25], clipped.
std::pair<Molecule, Molecule> collide(const Molecule& m1, const Molecule& m2, const GeneBounds& bounds, Rng& rng);

// Wall reaction: mutates exactly one gene. Genes are the layer count, each
// width, the jump flag, the learning rate and the momentum.
Molecule wall_collision(const Molecule& m, const GeneBounds& bounds, Rng& rng);

// Number of genes that differ, using the gene list of wall_collision. A change
// of layer count counts once regardless of the widths added or dropped.
std::size_t gene_distance(const Molecule& a, const Molecule& b);

enum class FitnessMetric { MeanPearson, NegativeMse };

struct EvaluationBudget {
  std::size_t max_epochs = 2000;
  std::size_t patience = 100;
  std::uint64_t training_seed = 42;
  FitnessMetric metric = FitnessMetric::MeanPearson;
};

inline constexpr double kDivergedFitness = -1.0;

NetworkTopology molecule_topology(const Molecule& m, std::size_t input_count, std::size_t output_count);

// Trains on split.train with early stopping on split.test, then scores on
// split.validation. Divergence yields kDivergedFitness instead of throwing.
double evaluate_molecule(const Molecule& m, const SplitSet& normalized_split, Direction direction,
                         const EvaluationBudget& budget);

// Score of predictions against targets (both row-major, `outputs` wide).
double score_predictions(std::span<const double> predicted, std::span<const double> actual, std::size_t outputs,
                         FitnessMetric metric);

struct ReactorConfig {
  std::size_t population_size = 50;
  std::size_t max_cycles = 10000;
  double consensus_fraction = 0.80;
  std::size_t collisions_per_cycle = 10;
  double wall_collision_probability = 0.2;
  GeneBounds bounds;
  std::uint64_t seed = 42;
  // 0 picks std::thread::hardware_concurrency().
  std::size_t threads = 0;

  void validate() const;
};

struct CycleStats {
  std::size_t cycle = 0;  // 0 is the initial population
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  double consensus_observed = 0.0;
};

enum class Termination { Consensus, Budget };
std::string to_string(Termination t);

struct ReactorResult {
  Molecule best;
  std::vector<Molecule> population;
  std::vector<CycleStats> history;
  Termination termination = Termination::Budget;
  std::size_t evaluations = 0;  // distinct gene tuples evaluated
};

// Must be safe to call concurrently.
using FitnessFunction = std::function<double(const Molecule&)>;

// Largest share of the population holding one structure tuple.
double consensus_observed(const std::vector<Molecule>& population);

// Reactor filter: sorts by fitness (desc), then total neurons (asc), then
// position, and keeps the first `keep`.
void filter_population(std::vector<Molecule>& molecules, std::size_t keep);

ReactorResult run_reactor(const ReactorConfig& config, const FitnessFunction& fitness,
                          std::optional<std::vector<Molecule>> initial = std::nullopt);

// Fitness = evaluate_molecule over the split. Fitness values are cached per
// gene tuple (the training seed is fixed for the run).
ReactorResult run_reactor(const ReactorConfig& config, const SplitSet& normalized_split, Direction direction,
                          const EvaluationBudget& budget);

void write_history_csv(std::ostream& out, const ReactorResult& result);

}  // namespace vspec

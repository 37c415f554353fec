#pragma once

#include "vspec/dataset.hpp"
#include "vspec/model_io.hpp"
#include "vspec/random.hpp"

namespace vspec::testing {

inline WavelengthGrid tiny_grid() { return {350.0, 354.0, 2.0}; }

// Three-point spectra where a350 tracks co and a352 tracks ni exactly; a354
// mixes both.
inline SampleSet linear_samples(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  SampleSet s;
  s.grid = tiny_grid();
  for (std::size_t i = 0; i < n; ++i) {
    Sample x;
    x.co_M = rng.uniform(0.02, 0.10);
    x.ni_M = rng.uniform(0.02, 0.10);
    x.absorbances = {4.0 * x.co_M, 3.0 * x.ni_M, x.co_M + x.ni_M};
    s.samples.push_back(x);
  }
  return s;
}

// Forward model without hidden layers: normalized co = normalized a350 and
// normalized ni = normalized a352, so predictions reproduce the truth.
inline Model echo_forward_model(const SampleSet& samples) {
  Model m;
  m.direction = Direction::Forward;
  m.grid = samples.grid;
  m.topology.input_count = 3;
  m.topology.output_count = 2;
  m.topology.output_activation = Activation::Identity;
  m.weights = init_network(m.topology, 1);
  auto& w = m.weights.layers.at(0);
  std::fill(w.weights.data.begin(), w.weights.data.end(), 0.0);
  w.weights(0, 0) = 1.0;
  w.weights(1, 1) = 1.0;
  m.normalization = fit_normalization(samples);
  m.provenance = {{"note", "echo"}};
  return m;
}

}  // namespace vspec::testing

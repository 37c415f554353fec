#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vspec {

// Dense row-major (input, target) pairs fed to the network.
struct TrainingData {
  std::size_t input_count = 0;
  std::size_t output_count = 0;
  std::vector<double> inputs;
  std::vector<double> targets;

  std::size_t size() const { return input_count == 0 ? 0 : inputs.size() / input_count; }
  bool empty() const { return size() == 0; }

  std::span<const double> input(std::size_t i) const { return {inputs.data() + i * input_count, input_count}; }
  std::span<const double> target(std::size_t i) const { return {targets.data() + i * output_count, output_count}; }

  void add(std::span<const double> x, std::span<const double> y) {
    inputs.insert(inputs.end(), x.begin(), x.end());
    targets.insert(targets.end(), y.begin(), y.end());
  }
};

}  // namespace vspec

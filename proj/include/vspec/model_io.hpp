#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vspec/dataset.hpp"
#include "vspec/neuralnet.hpp"
#include "vspec/spectral_model.hpp"

namespace vspec {

inline constexpr const char* kModelFormat = "vspec-model/1";

// A trained network together with everything needed to run it on raw
// (physical-unit) values.
struct Model {
  Direction direction = Direction::Forward;
  WavelengthGrid grid;
  NetworkTopology topology;
  WeightSet weights;
  NormalizationParams normalization;  // full column set: co_M, ni_M, a...
  nlohmann::ordered_json provenance = nlohmann::ordered_json::object();

  // Input/output column params for this model's direction.
  NormalizationParams input_normalization() const;
  NormalizationParams output_normalization() const;

  void validate() const;
};

nlohmann::ordered_json model_to_json(const Model& m);
Model model_from_json(const nlohmann::ordered_json& j);

void save_model(const std::filesystem::path& path, const Model& m);
Model load_model(const std::filesystem::path& path);

// Raw input -> raw output: scale, run the network, unscale.
std::vector<double> predict(const Model& m, std::span<const double> raw_input);

void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& j);
nlohmann::ordered_json read_json_file(const std::filesystem::path& path);

}  // namespace vspec

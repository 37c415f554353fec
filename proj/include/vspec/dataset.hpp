#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "vspec/spectral_model.hpp"
#include "vspec/training_data.hpp"

namespace vspec {

struct ColumnStats {
  std::string name;
  double min = 0.0;
  double max = 0.0;
  bool constant = false;

  bool operator==(const ColumnStats&) const = default;
};

// Per-column min-max scaling. Column order matches the CSV: co_M, ni_M, then
// one column per wavelength.
struct NormalizationParams {
  std::vector<ColumnStats> columns;

  std::size_t size() const { return columns.size(); }
  // Sub-range of columns, e.g. just the concentrations or just the spectrum.
  NormalizationParams slice(std::size_t first, std::size_t count) const;
  NormalizationParams concentrations() const { return slice(0, 2); }
  NormalizationParams absorbances() const { return slice(2, columns.size() - 2); }

  bool operator==(const NormalizationParams&) const = default;
};

void to_json(nlohmann::ordered_json& j, const NormalizationParams& p);
void from_json(const nlohmann::ordered_json& j, NormalizationParams& p);

std::vector<std::string> column_names(const WavelengthGrid& grid);
std::string wavelength_label(double nm);

NormalizationParams fit_normalization(const SampleSet& samples);
SampleSet apply_normalization(const SampleSet& samples, const NormalizationParams& params);
std::pair<SampleSet, NormalizationParams> normalize(const SampleSet& samples);

// Inverse scaling of values laid out against params.columns.
std::vector<double> denormalize(std::span<const double> values, const NormalizationParams& params);
std::vector<double> scale(std::span<const double> values, const NormalizationParams& params);
SampleSet denormalize(const SampleSet& samples, const NormalizationParams& params);

struct SplitSet {
  SampleSet train;
  SampleSet test;
  SampleSet validation;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<std::size_t> validation;
};

// Seeded shuffle, then contiguous 70/10/20 cuts (4200/600/1200 for 6000 rows).
SplitIndices split_indices(std::size_t n, std::uint64_t seed);
SplitSet split(const SampleSet& samples, std::uint64_t seed);

enum class Direction {
  Forward,  // spectrum -> (co, ni)
  Dual,     // (co, ni) -> spectrum
};

std::string to_string(Direction d);
Direction direction_from_string(const std::string& s);

// Expects already-normalized samples.
TrainingData make_training_data(const SampleSet& samples, Direction direction);

void write_samples_csv(std::ostream& out, const SampleSet& samples);
void write_samples_csv(const std::filesystem::path& path, const SampleSet& samples);
SampleSet read_samples_csv(std::istream& in);
SampleSet read_samples_csv(const std::filesystem::path& path);

// Shortest decimal that round-trips.
std::string format_double(double v);

}  // namespace vspec

#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vspec/model_io.hpp"

namespace vspec {

// Sample Pearson correlation. Throws DomainError on length mismatch,
// fewer than two points, or a zero-variance argument.
double pearson(std::span<const double> predicted, std::span<const double> actual);

// Like pearson, but nullopt instead of throwing for zero variance.
std::optional<double> try_pearson(std::span<const double> predicted, std::span<const double> actual);

struct CorrelationReport {
  std::vector<std::string> labels;
  std::vector<std::optional<double>> r;  // nullopt marks an undefined correlation

  // Over defined entries only; index into labels/r. Empty when none are defined.
  std::optional<std::size_t> argmax() const;
  std::optional<std::size_t> argmin() const;
  std::optional<double> max_r() const;
  std::optional<double> min_r() const;
  // Undefined entries count as 0.
  double mean_r() const;
  std::size_t size() const { return r.size(); }
};

// Column-wise correlations of two row-major (rows x cols) matrices.
CorrelationReport correlation_report(std::span<const double> predicted, std::span<const double> actual,
                                     std::size_t cols, std::vector<std::string> labels);

struct ModelPredictions {
  std::size_t outputs = 0;
  std::vector<double> predicted;  // raw units, row-major
  std::vector<double> actual;
};

// Runs the model on raw samples in its direction.
ModelPredictions run_model(const Model& model, const SampleSet& samples);

// Forward reports label "[Co]", "[Ni]"; dual reports label wavelengths in nm.
CorrelationReport evaluate_model(const Model& model, const SampleSet& samples);
std::vector<std::string> output_labels(const Model& model);

void write_report_csv(std::ostream& out, const CorrelationReport& report);
void write_report_table(std::ostream& out, const CorrelationReport& report);
// Two columns, "label r", undefined entries skipped, for gnuplot.
void write_report_plot(std::ostream& out, const CorrelationReport& report);

}  // namespace vspec

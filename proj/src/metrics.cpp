#include "vspec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "vspec/errors.hpp"

namespace vspec {

namespace {

// Two-pass moments; returns nullopt if either side has zero variance.
std::optional<double> pearson_impl(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("pearson: length mismatch");
  if (x.size() < 2) throw DomainError("pearson: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

}  // namespace

double pearson(std::span<const double> predicted, std::span<const double> actual) {
  auto r = pearson_impl(predicted, actual);
  if (!r) throw DomainError("pearson: zero variance");
  return *r;
}

std::optional<double> try_pearson(std::span<const double> predicted, std::span<const double> actual) {
  return pearson_impl(predicted, actual);
}

std::optional<std::size_t> CorrelationReport::argmax() const {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r[i] && (!best || *r[i] > *r[*best])) best = i;
  return best;
}

std::optional<std::size_t> CorrelationReport::argmin() const {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r[i] && (!best || *r[i] < *r[*best])) best = i;
  return best;
}

std::optional<double> CorrelationReport::max_r() const {
  auto i = argmax();
  return i ? r[*i] : std::nullopt;
}

std::optional<double> CorrelationReport::min_r() const {
  auto i = argmin();
  return i ? r[*i] : std::nullopt;
}

double CorrelationReport::mean_r() const {
  if (r.empty()) return 0.0;
  double s = 0.0;
  for (const auto& v : r) s += v.value_or(0.0);
  return s / static_cast<double>(r.size());
}

CorrelationReport correlation_report(std::span<const double> predicted, std::span<const double> actual,
                                     std::size_t cols, std::vector<std::string> labels) {
  if (cols == 0 || predicted.size() != actual.size() || predicted.size() % cols != 0)
    throw DomainError("correlation_report: prediction and target shapes differ");
  if (labels.size() != cols) throw DomainError("correlation_report: label count does not match columns");
  const std::size_t rows = predicted.size() / cols;
  CorrelationReport rep;
  rep.labels = std::move(labels);
  std::vector<double> p(rows), a(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t i = 0; i < rows; ++i) {
      p[i] = predicted[i * cols + c];
      a[i] = actual[i * cols + c];
    }
    rep.r.push_back(pearson_impl(p, a));
  }
  return rep;
}

std::vector<std::string> output_labels(const Model& model) {
  if (model.direction == Direction::Forward) return {"[Co]", "[Ni]"};
  std::vector<std::string> labels;
  for (double nm : model.grid.wavelengths()) labels.push_back(wavelength_label(nm));
  return labels;
}

ModelPredictions run_model(const Model& model, const SampleSet& samples) {
  model.validate();
  if (!(samples.grid == model.grid)) throw DomainError("evaluate: sample grid does not match the model grid");
  ModelPredictions out;
  out.outputs = model.topology.output_count;
  const auto in_norm = model.input_normalization();
  const auto out_norm = model.output_normalization();
  for (const auto& s : samples.samples) {
    const double conc[2] = {s.co_M, s.ni_M};
    std::span<const double> x = model.direction == Direction::Forward ? std::span<const double>(s.absorbances)
                                                                      : std::span<const double>(conc);
    std::span<const double> y = model.direction == Direction::Forward ? std::span<const double>(conc)
                                                                      : std::span<const double>(s.absorbances);
    if (x.size() != model.topology.input_count) throw DomainError("evaluate: sample width does not match the model");
    auto pred = denormalize(forward(model.weights, model.topology, scale(x, in_norm)), out_norm);
    out.predicted.insert(out.predicted.end(), pred.begin(), pred.end());
    out.actual.insert(out.actual.end(), y.begin(), y.end());
  }
  return out;
}

CorrelationReport evaluate_model(const Model& model, const SampleSet& samples) {
  const auto preds = run_model(model, samples);
  return correlation_report(preds.predicted, preds.actual, preds.outputs, output_labels(model));
}

namespace {

std::string r_text(const std::optional<double>& r) {
  if (!r) return "undefined";
  std::ostringstream s;
  s << std::setprecision(17) << *r;
  return s.str();
}

}  // namespace

void write_report_csv(std::ostream& out, const CorrelationReport& report) {
  out << "label,r\n";
  for (std::size_t i = 0; i < report.size(); ++i) out << report.labels[i] << ',' << r_text(report.r[i]) << '\n';
}

void write_report_table(std::ostream& out, const CorrelationReport& report) {
  out << std::left << std::setw(10) << "output" << "  r\n";
  for (std::size_t i = 0; i < report.size(); ++i) {
    out << std::left << std::setw(10) << report.labels[i] << "  ";
    if (report.r[i])
      out << std::fixed << std::setprecision(4) << *report.r[i] << '\n';
    else
      out << "undefined\n";
    out.unsetf(std::ios::floatfield);
  }
  if (auto i = report.argmax()) {
    out << "max r " << std::fixed << std::setprecision(4) << *report.r[*i] << " at " << report.labels[*i];
    auto j = report.argmin();
    out << ", min r " << *report.r[*j] << " at " << report.labels[*j] << '\n';
    out.unsetf(std::ios::floatfield);
  }
}

void write_report_plot(std::ostream& out, const CorrelationReport& report) {
  out << "# label r\n";
  for (std::size_t i = 0; i < report.size(); ++i)
    if (report.r[i]) out << report.labels[i] << ' ' << r_text(report.r[i]) << '\n';
}

}  // namespace vspec

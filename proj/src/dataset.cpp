#include "vspec/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "vspec/errors.hpp"
#include "vspec/random.hpp"

namespace vspec {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string wavelength_label(double nm) { return format_double(nm); }

std::vector<std::string> column_names(const WavelengthGrid& grid) {
  std::vector<std::string> names{"co_M", "ni_M"};
  for (std::size_t i = 0; i < grid.count(); ++i) names.push_back("a" + wavelength_label(grid.at(i)));
  return names;
}

NormalizationParams NormalizationParams::slice(std::size_t first, std::size_t count) const {
  if (first + count > columns.size()) throw DomainError("normalization slice out of range");
  NormalizationParams p;
  p.columns.assign(columns.begin() + static_cast<std::ptrdiff_t>(first),
                   columns.begin() + static_cast<std::ptrdiff_t>(first + count));
  return p;
}

void to_json(nlohmann::ordered_json& j, const NormalizationParams& p) {
  j = nlohmann::ordered_json::object();
  for (const auto& c : p.columns) j[c.name] = {{"min", c.min}, {"max", c.max}, {"constant_flag", c.constant}};
}

void from_json(const nlohmann::ordered_json& j, NormalizationParams& p) {
  if (!j.is_object()) throw FormatError("normalization params: expected a JSON object");
  p.columns.clear();
  for (const auto& [name, v] : j.items()) {
    ColumnStats c;
    c.name = name;
    c.min = v.at("min").get<double>();
    c.max = v.at("max").get<double>();
    c.constant = v.at("constant_flag").get<bool>();
    if (c.min > c.max) throw FormatError("normalization params: min > max for " + name);
    p.columns.push_back(std::move(c));
  }
}

namespace {

std::vector<double> row_of(const Sample& s) {
  std::vector<double> r{s.co_M, s.ni_M};
  r.insert(r.end(), s.absorbances.begin(), s.absorbances.end());
  return r;
}

Sample sample_of(std::span<const double> row) {
  Sample s;
  s.co_M = row[0];
  s.ni_M = row[1];
  s.absorbances.assign(row.begin() + 2, row.end());
  return s;
}

void check_layout(const SampleSet& samples) {
  const std::size_t n = samples.grid.count();
  for (const auto& s : samples.samples) {
    if (s.absorbances.size() != n) throw DomainError("sample has " + std::to_string(s.absorbances.size()) +
                                                     " absorbances, grid has " + std::to_string(n));
  }
}

}  // namespace

NormalizationParams fit_normalization(const SampleSet& samples) {
  if (samples.empty()) throw DomainError("normalize: empty sample set");
  check_layout(samples);
  const auto names = column_names(samples.grid);
  NormalizationParams p;
  p.columns.resize(names.size());
  for (std::size_t c = 0; c < names.size(); ++c) {
    p.columns[c].name = names[c];
    p.columns[c].min = std::numeric_limits<double>::infinity();
    p.columns[c].max = -std::numeric_limits<double>::infinity();
  }
  for (const auto& s : samples.samples) {
    const auto r = row_of(s);
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (!std::isfinite(r[c])) throw DomainError("normalize: non-finite value in column " + names[c]);
      p.columns[c].min = std::min(p.columns[c].min, r[c]);
      p.columns[c].max = std::max(p.columns[c].max, r[c]);
    }
  }
  for (auto& c : p.columns) c.constant = c.min == c.max;
  return p;
}

std::vector<double> scale(std::span<const double> values, const NormalizationParams& params) {
  if (values.size() != params.size())
    throw DomainError("normalize: " + std::to_string(values.size()) + " values for " +
                      std::to_string(params.size()) + " columns");
  std::vector<double> out(values.size());
  for (std::size_t c = 0; c < values.size(); ++c) {
    const auto& col = params.columns[c];
    out[c] = col.constant ? 0.0 : (values[c] - col.min) / (col.max - col.min);
  }
  return out;
}

std::vector<double> denormalize(std::span<const double> values, const NormalizationParams& params) {
  if (values.size() != params.size())
    throw DomainError("denormalize: " + std::to_string(values.size()) + " values for " +
                      std::to_string(params.size()) + " columns");
  std::vector<double> out(values.size());
  for (std::size_t c = 0; c < values.size(); ++c) {
    const auto& col = params.columns[c];
    out[c] = col.constant ? col.min : col.min + values[c] * (col.max - col.min);
  }
  return out;
}

SampleSet apply_normalization(const SampleSet& samples, const NormalizationParams& params) {
  check_layout(samples);
  SampleSet out;
  out.grid = samples.grid;
  out.samples.reserve(samples.size());
  for (const auto& s : samples.samples) out.samples.push_back(sample_of(scale(row_of(s), params)));
  return out;
}

std::pair<SampleSet, NormalizationParams> normalize(const SampleSet& samples) {
  auto params = fit_normalization(samples);
  return {apply_normalization(samples, params), std::move(params)};
}

SampleSet denormalize(const SampleSet& samples, const NormalizationParams& params) {
  check_layout(samples);
  SampleSet out;
  out.grid = samples.grid;
  out.samples.reserve(samples.size());
  for (const auto& s : samples.samples) out.samples.push_back(sample_of(denormalize(row_of(s), params)));
  return out;
}

SplitIndices split_indices(std::size_t n, std::uint64_t seed) {
  const auto n_train = static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(n)));
  const auto n_test = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
  if (n_train == 0 || n_test == 0 || n_train + n_test >= n)
    throw DomainError("split: " + std::to_string(n) + " records cannot fill a 70/10/20 partition");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  SplitIndices idx;
  idx.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  idx.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                  order.begin() + static_cast<std::ptrdiff_t>(n_train + n_test));
  idx.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_test), order.end());
  return idx;
}

SplitSet split(const SampleSet& samples, std::uint64_t seed) {
  const auto idx = split_indices(samples.size(), seed);
  auto pick = [&](const std::vector<std::size_t>& rows) {
    SampleSet s;
    s.grid = samples.grid;
    s.samples.reserve(rows.size());
    for (auto r : rows) s.samples.push_back(samples.samples[r]);
    return s;
  };
  return {pick(idx.train), pick(idx.test), pick(idx.validation)};
}

std::string to_string(Direction d) { return d == Direction::Forward ? "forward" : "dual"; }

Direction direction_from_string(const std::string& s) {
  if (s == "forward") return Direction::Forward;
  if (s == "dual") return Direction::Dual;
  throw DomainError("unknown direction '" + s + "' (expected forward or dual)");
}

TrainingData make_training_data(const SampleSet& samples, Direction direction) {
  check_layout(samples);
  const std::size_t n = samples.grid.count();
  TrainingData d;
  d.input_count = direction == Direction::Forward ? n : 2;
  d.output_count = direction == Direction::Forward ? 2 : n;
  d.inputs.reserve(samples.size() * d.input_count);
  d.targets.reserve(samples.size() * d.output_count);
  for (const auto& s : samples.samples) {
    const double conc[2] = {s.co_M, s.ni_M};
    if (direction == Direction::Forward)
      d.add(s.absorbances, conc);
    else
      d.add(conc, s.absorbances);
  }
  return d;
}

void write_samples_csv(std::ostream& out, const SampleSet& samples) {
  check_layout(samples);
  const auto names = column_names(samples.grid);
  for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
  out << '\n';
  for (const auto& s : samples.samples) {
    out << format_double(s.co_M) << ',' << format_double(s.ni_M);
    for (double a : s.absorbances) out << ',' << format_double(a);
    out << '\n';
  }
}

void write_samples_csv(const std::filesystem::path& path, const SampleSet& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  write_samples_csv(out, samples);
  if (!out) throw FormatError("write failed for " + path.string());
}

namespace {

double parse_field(std::string_view f, std::size_t line) {
  double v = 0.0;
  auto res = std::from_chars(f.data(), f.data() + f.size(), v);
  if (res.ec != std::errc{} || res.ptr != f.data() + f.size())
    throw FormatError("sample CSV line " + std::to_string(line) + ": bad number '" + std::string(f) + "'");
  return v;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto comma = s.find(',', pos);
    out.push_back(s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

// Recovers the grid from a header of the form co_M,ni_M,a350,a352,...
WavelengthGrid grid_from_header(const std::vector<std::string_view>& cols) {
  if (cols.size() < 3 || cols[0] != "co_M" || cols[1] != "ni_M")
    throw FormatError("sample CSV: header must start with co_M,ni_M followed by aNNN columns");
  std::vector<double> nm;
  for (std::size_t c = 2; c < cols.size(); ++c) {
    if (cols[c].empty() || cols[c][0] != 'a') throw FormatError("sample CSV: bad column '" + std::string(cols[c]) + "'");
    nm.push_back(parse_field(cols[c].substr(1), 1));
  }
  WavelengthGrid g;
  g.start_nm = nm.front();
  g.end_nm = nm.back();
  g.step_nm = nm.size() > 1 ? nm[1] - nm[0] : 1.0;
  if (g.step_nm <= 0.0 || g.count() != nm.size()) throw FormatError("sample CSV: header wavelengths are not a uniform grid");
  for (std::size_t i = 0; i < nm.size(); ++i)
    if (std::abs(g.at(i) - nm[i]) > 1e-6) throw FormatError("sample CSV: header wavelengths are not a uniform grid");
  return g;
}

}  // namespace

SampleSet read_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("sample CSV: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  SampleSet set;
  const auto header = split_commas(line);
  set.grid = grid_from_header(header);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != header.size())
      throw FormatError("sample CSV line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                        " fields, found " + std::to_string(fields.size()));
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      row[c] = parse_field(fields[c], lineno);
      if (!std::isfinite(row[c])) throw FormatError("sample CSV line " + std::to_string(lineno) + ": non-finite value");
    }
    set.samples.push_back(sample_of(row));
  }
  return set;
}

SampleSet read_samples_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_samples_csv(in);
}

}  // namespace vspec

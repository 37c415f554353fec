#include "vspec/model_io.hpp"

#include <fstream>

#include "vspec/errors.hpp"

namespace vspec {

using nlohmann::ordered_json;

NormalizationParams Model::input_normalization() const {
  return direction == Direction::Forward ? normalization.absorbances() : normalization.concentrations();
}

NormalizationParams Model::output_normalization() const {
  return direction == Direction::Forward ? normalization.concentrations() : normalization.absorbances();
}

void Model::validate() const {
  weights.check_against(topology);
  const std::size_t n = grid.count();
  if (normalization.size() != n + 2) throw DomainError("model: normalization does not cover the grid columns");
  const std::size_t in = direction == Direction::Forward ? n : 2;
  const std::size_t out = direction == Direction::Forward ? 2 : n;
  if (topology.input_count != in || topology.output_count != out)
    throw DomainError("model: topology " + std::to_string(topology.input_count) + "->" +
                      std::to_string(topology.output_count) + " does not fit a " + to_string(direction) +
                      " model on a " + std::to_string(n) + "-point grid");
}

namespace {

ordered_json matrix_json(const Matrix& m) {
  return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from(const ordered_json& j) {
  Matrix m;
  m.rows = j.at("rows").get<std::size_t>();
  m.cols = j.at("cols").get<std::size_t>();
  m.data = j.at("data").get<std::vector<double>>();
  if (m.data.size() != m.rows * m.cols) throw FormatError("model: matrix data size does not match rows x cols");
  return m;
}

}  // namespace

ordered_json model_to_json(const Model& m) {
  ordered_json layers = ordered_json::array();
  for (const auto& l : m.weights.layers) layers.push_back({{"weights", matrix_json(l.weights)}, {"bias", l.bias}});
  return {
      {"format", kModelFormat},
      {"direction", to_string(m.direction)},
      {"grid", {{"start_nm", m.grid.start_nm}, {"end_nm", m.grid.end_nm}, {"step_nm", m.grid.step_nm}}},
      {"topology",
       {{"input_count", m.topology.input_count},
        {"hidden_widths", m.topology.hidden_widths},
        {"output_count", m.topology.output_count},
        {"jump_connections", m.topology.jump_connections},
        {"hidden_activation", to_string(m.topology.hidden_activation)},
        {"output_activation", to_string(m.topology.output_activation)}}},
      {"normalization", m.normalization},
      {"weights", {{"layers", layers}, {"jump", m.weights.jump ? matrix_json(*m.weights.jump) : ordered_json()}}},
      {"provenance", m.provenance},
  };
}

Model model_from_json(const ordered_json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat)
      throw FormatError("model: unsupported format tag '" + j.at("format").get<std::string>() + "'");
    Model m;
    m.direction = direction_from_string(j.at("direction").get<std::string>());
    const auto& g = j.at("grid");
    m.grid = {g.at("start_nm").get<double>(), g.at("end_nm").get<double>(), g.at("step_nm").get<double>()};
    const auto& t = j.at("topology");
    m.topology.input_count = t.at("input_count").get<std::size_t>();
    m.topology.hidden_widths = t.at("hidden_widths").get<std::vector<std::size_t>>();
    m.topology.output_count = t.at("output_count").get<std::size_t>();
    m.topology.jump_connections = t.at("jump_connections").get<bool>();
    m.topology.hidden_activation = activation_from_string(t.at("hidden_activation").get<std::string>());
    m.topology.output_activation = activation_from_string(t.at("output_activation").get<std::string>());
    m.normalization = j.at("normalization").get<NormalizationParams>();
    for (const auto& l : j.at("weights").at("layers"))
      m.weights.layers.push_back({matrix_from(l.at("weights")), l.at("bias").get<std::vector<double>>()});
    const auto& jump = j.at("weights").at("jump");
    if (!jump.is_null()) m.weights.jump = matrix_from(jump);
    if (j.contains("provenance")) m.provenance = j.at("provenance");
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model: ") + e.what());
  } catch (const DomainError& e) {
    throw FormatError(e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("write failed for " + path.string());
}

ordered_json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_model(const std::filesystem::path& path, const Model& m) {
  m.validate();
  write_json_file(path, model_to_json(m));
}

Model load_model(const std::filesystem::path& path) { return model_from_json(read_json_file(path)); }

std::vector<double> predict(const Model& m, std::span<const double> raw_input) {
  const auto in = m.input_normalization();
  if (raw_input.size() != in.size())
    throw DomainError("predict: expected " + std::to_string(in.size()) + " inputs, got " +
                      std::to_string(raw_input.size()));
  const auto y = forward(m.weights, m.topology, scale(raw_input, in));
  return denormalize(y, m.output_normalization());
}

}  // namespace vspec

#include "vspec/service.hpp"

#include <algorithm>
#include <cmath>

#include "httplib.h"
#include "vspec/errors.hpp"

namespace vspec {

using nlohmann::ordered_json;

ModelRegistry::ModelRegistry(std::optional<Model> forward, std::optional<Model> dual, SpectrumPair spectra)
    : forward_(std::move(forward)), dual_(std::move(dual)), spectra_(std::move(spectra)) {
  if (forward_ && forward_->direction != Direction::Forward) throw DomainError("registry: forward slot holds a dual model");
  if (dual_ && dual_->direction != Direction::Dual) throw DomainError("registry: dual slot holds a forward model");
  if (forward_) forward_->validate();
  if (dual_) dual_->validate();
  if (forward_ && dual_ && !(forward_->grid == dual_->grid))
    throw DomainError("registry: forward and dual models use different wavelength grids");
  grid_ = forward_ ? forward_->grid : dual_ ? dual_->grid : WavelengthGrid::standard();
}

ModelRegistry ModelRegistry::load(const std::filesystem::path& dir) {
  std::optional<Model> fwd, dual;
  if (std::filesystem::exists(dir / "forward.json")) fwd = load_model(dir / "forward.json");
  if (std::filesystem::exists(dir / "dual.json")) dual = load_model(dir / "dual.json");
  SpectrumPair spectra = std::filesystem::exists(dir / "bands.ini") ? load_spectra(dir / "bands.ini") : default_spectra();
  return ModelRegistry(std::move(fwd), std::move(dual), std::move(spectra));
}

PredictionService::PredictionService(std::shared_ptr<const ModelRegistry> registry) : registry_(std::move(registry)) {
  if (!registry_) throw DomainError("prediction service: null registry");
}

namespace {

std::string range_text() { return "[0, " + format_double(kMaxRequestConcentration) + "] M"; }

void check_concentration(const char* name, double v) {
  if (!std::isfinite(v) || v < 0.0 || v > kMaxRequestConcentration)
    throw ValidationError(std::string(name) + " = " + format_double(v) + " outside accepted range " + range_text());
}

}  // namespace

SpectrumPrediction PredictionService::predict_spectrum(double co_M, double ni_M) const {
  const auto& dual = registry_->dual_model();
  if (!dual) throw ServiceUnavailable("no dual model loaded");
  check_concentration("co_M", co_M);
  check_concentration("ni_M", ni_M);

  SpectrumPrediction out;
  out.wavelengths_nm = dual->grid.wavelengths();
  const double conc[2] = {co_M, ni_M};
  out.absorbance = predict(*dual, conc);

  const auto trained = dual->normalization.concentrations();
  std::vector<std::string> outside;
  for (std::size_t i = 0; i < 2; ++i)
    if (conc[i] < trained.columns[i].min || conc[i] > trained.columns[i].max)
      outside.push_back(trained.columns[i].name + " outside trained range [" + format_double(trained.columns[i].min) +
                        ", " + format_double(trained.columns[i].max) + "] M");
  if (!outside.empty()) {
    std::string w = "extrapolating: ";
    for (std::size_t i = 0; i < outside.size(); ++i) w += (i ? "; " : "") + outside[i];
    out.warning = w;
  }
  return out;
}

ConcentrationPrediction PredictionService::predict_concentrations(std::span<const double> absorbance) const {
  const auto& fwd = registry_->forward_model();
  if (!fwd) throw ServiceUnavailable("no forward model loaded");
  const std::size_t n = fwd->grid.count();
  if (absorbance.size() != n)
    throw ValidationError("expected " + std::to_string(n) + " absorbance values, found " + std::to_string(absorbance.size()));
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(absorbance[i])) throw ValidationError("absorbance[" + std::to_string(i) + "] is not finite");
  const auto c = predict(*fwd, absorbance);
  return {std::clamp(c[0], 0.0, kMaxRequestConcentration), std::clamp(c[1], 0.0, kMaxRequestConcentration)};
}

namespace {

ordered_json topology_json(const Model& m) {
  return {{"direction", to_string(m.direction)},
          {"input_count", m.topology.input_count},
          {"hidden_widths", m.topology.hidden_widths},
          {"output_count", m.topology.output_count},
          {"jump_connections", m.topology.jump_connections},
          {"hidden_activation", to_string(m.topology.hidden_activation)},
          {"output_activation", to_string(m.topology.output_activation)},
          {"parameter_count", m.topology.parameter_count()},
          {"provenance", m.provenance}};
}

ordered_json bands_json(const SpeciesSpectrum& s) {
  ordered_json arr = ordered_json::array();
  for (const auto& b : s.bands) arr.push_back({{"center_nm", b.center_nm}, {"sigma_nm", b.sigma_nm}, {"eps_peak", b.eps_peak}});
  return arr;
}

}  // namespace

ordered_json PredictionService::model_info() const {
  const auto& r = *registry_;
  const auto& g = r.grid();
  ordered_json j;
  j["grid"] = {{"start_nm", g.start_nm}, {"end_nm", g.end_nm}, {"step_nm", g.step_nm}, {"count", g.count()}};
  j["forward"] = r.forward_model() ? topology_json(*r.forward_model()) : ordered_json();
  j["dual"] = r.dual_model() ? topology_json(*r.dual_model()) : ordered_json();
  j["bands"] = {{"Co", bands_json(r.spectra().co)}, {"Ni", bands_json(r.spectra().ni)}};
  j["path_length_cm"] = 1.0;
  j["accepted_range_M"] = {0.0, kMaxRequestConcentration};
  return j;
}

namespace {

PredictionService::Response json_response(int status, const ordered_json& j) { return {status, j.dump()}; }
PredictionService::Response error_response(int status, const std::string& msg) {
  return json_response(status, {{"error", msg}});
}

double number_field(const ordered_json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  if (!j.at(key).is_number()) throw ValidationError(std::string("field '") + key + "' must be a number");
  return j.at(key).get<double>();
}

}  // namespace

PredictionService::Response PredictionService::handle(const std::string& method, const std::string& path,
                                                      const std::string& body) const {
  try {
    if (path == "/api/model") {
      if (method != "GET") return error_response(405, "use GET for /api/model");
      return json_response(200, model_info());
    }
    if (path != "/api/spectrum" && path != "/api/concentrations") return error_response(404, "no route for " + path);
    if (method != "POST") return error_response(405, "use POST for " + path);

    ordered_json req;
    try {
      req = ordered_json::parse(body);
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("request body is not valid JSON");
    }
    if (!req.is_object()) throw ValidationError("request body must be a JSON object");

    if (path == "/api/spectrum") {
      const auto p = predict_spectrum(number_field(req, "co_M"), number_field(req, "ni_M"));
      ordered_json out = {{"wavelengths_nm", p.wavelengths_nm}, {"absorbance", p.absorbance}};
      if (p.warning) out["warning"] = *p.warning;
      return json_response(200, out);
    }
    if (!req.contains("absorbance") || !req.at("absorbance").is_array())
      throw ValidationError("field 'absorbance' must be an array of numbers");
    std::vector<double> a;
    for (const auto& v : req.at("absorbance")) {
      if (!v.is_number()) throw ValidationError("absorbance[" + std::to_string(a.size()) + "] is not a number");
      a.push_back(v.get<double>());
    }
    const auto c = predict_concentrations(a);
    return json_response(200, {{"co_M", c.co_M}, {"ni_M", c.ni_M}});
  } catch (const ValidationError& e) {
    return error_response(400, e.what());
  } catch (const ServiceUnavailable& e) {
    return error_response(503, e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

struct HttpServer::Impl {
  std::shared_ptr<const PredictionService> service;
  httplib::Server server;
};

HttpServer::HttpServer(std::shared_ptr<const PredictionService> service, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  auto route = [svc = impl_->service](const httplib::Request& req, httplib::Response& res) {
    const auto r = svc->handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  impl_->server.Get("/api/.*", route);
  impl_->server.Post("/api/.*", route);
  if (static_dir) {
    if (!impl_->server.set_mount_point("/", static_dir->string()))
      throw DomainError("static directory " + static_dir->string() + " does not exist");
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  if (!impl_->server.bind_to_port(host, port)) throw DomainError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

std::pair<std::string, int> parse_address(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size())
    throw DomainError("address must be host:port, got '" + addr + "'");
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(addr.substr(colon + 1), &used);
    if (used != addr.size() - colon - 1) throw std::invalid_argument(addr);
  } catch (const std::exception&) {
    throw DomainError("bad port in address '" + addr + "'");
  }
  if (port < 0 || port > 65535) throw DomainError("port out of range in '" + addr + "'");
  return {addr.substr(0, colon), port};
}

}  // namespace vspec

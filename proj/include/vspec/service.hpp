#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vspec/model_io.hpp"
#include "vspec/spectral_model.hpp"

namespace vspec {

class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class ServiceUnavailable : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kMaxRequestConcentration = 0.12;

// Read-only after construction; every query is a pure function of the
// request and the loaded models.
class ModelRegistry {
public:
  ModelRegistry(std::optional<Model> forward, std::optional<Model> dual, SpectrumPair spectra = default_spectra());

  // Loads forward.json, dual.json and (optionally) bands.ini from `dir`.
  // Missing model files leave that slot empty.
  static ModelRegistry load(const std::filesystem::path& dir);

  const std::optional<Model>& forward_model() const { return forward_; }
  const std::optional<Model>& dual_model() const { return dual_; }
  const SpectrumPair& spectra() const { return spectra_; }
  const WavelengthGrid& grid() const { return grid_; }

private:
  std::optional<Model> forward_;
  std::optional<Model> dual_;
  SpectrumPair spectra_;
  WavelengthGrid grid_;
};

struct SpectrumPrediction {
  std::vector<double> wavelengths_nm;
  std::vector<double> absorbance;
  std::optional<std::string> warning;
};

struct ConcentrationPrediction {
  double co_M = 0.0;
  double ni_M = 0.0;
};

class PredictionService {
public:
  explicit PredictionService(std::shared_ptr<const ModelRegistry> registry);

  // Accepts concentrations in [0, 0.12] M; warns outside the trained range.
  SpectrumPrediction predict_spectrum(double co_M, double ni_M) const;
  // Needs exactly one finite absorbance per grid point. Output clamped to [0, 0.12] M.
  ConcentrationPrediction predict_concentrations(std::span<const double> absorbance) const;
  nlohmann::ordered_json model_info() const;

  struct Response {
    int status = 200;
    std::string body;
  };
  // Routes the JSON API without a socket; the HTTP server delegates here.
  Response handle(const std::string& method, const std::string& path, const std::string& body) const;

  const ModelRegistry& registry() const { return *registry_; }

private:
  std::shared_ptr<const ModelRegistry> registry_;
};

// Thin cpp-httplib wrapper around PredictionService.
class HttpServer {
public:
  HttpServer(std::shared_ptr<const PredictionService> service, std::optional<std::filesystem::path> static_dir);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 binds any free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// "host:port" -> pair; throws DomainError when malformed.
std::pair<std::string, int> parse_address(const std::string& addr);

}  // namespace vspec

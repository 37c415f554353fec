#include "vspec/spectral_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vspec/errors.hpp"
#include "vspec/random.hpp"

namespace vspec {

std::size_t WavelengthGrid::count() const {
  validate();
  const double n = (end_nm - start_nm) / step_nm;
  return static_cast<std::size_t>(std::floor(n + 1e-9)) + 1;
}

std::vector<double> WavelengthGrid::wavelengths() const {
  std::vector<double> out(count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i);
  return out;
}

void WavelengthGrid::validate() const {
  if (!std::isfinite(start_nm) || !std::isfinite(end_nm) || !std::isfinite(step_nm))
    throw DomainError("wavelength grid: non-finite bound");
  if (step_nm <= 0.0) throw DomainError("wavelength grid: step must be positive");
  if (end_nm < start_nm) throw DomainError("wavelength grid: end before start");
}

std::string to_string(Species s) { return s == Species::Co ? "Co" : "Ni"; }

Species species_from_string(const std::string& s) {
  if (s == "Co" || s == "co") return Species::Co;
  if (s == "Ni" || s == "ni") return Species::Ni;
  throw DomainError("unknown species '" + s + "'");
}

void SpeciesSpectrum::validate() const {
  for (const auto& b : bands) {
    if (!(b.sigma_nm > 0.0)) throw DomainError(to_string(species) + " band: sigma_nm must be > 0");
    if (!(b.eps_peak >= 0.0)) throw DomainError(to_string(species) + " band: eps_peak must be >= 0");
    if (!std::isfinite(b.center_nm)) throw DomainError(to_string(species) + " band: center_nm not finite");
  }
}

SpectrumPair default_spectra() {
  return {
      SpeciesSpectrum{Species::Co, {BandModel{510.0, 25.0, 4.8}}},
      SpeciesSpectrum{Species::Ni, {BandModel{394.0, 30.0, 5.0}}},
  };
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw FormatError("band config line " + std::to_string(line) + ": bad number '" + v + "'");
  }
}

}  // namespace

SpectrumPair parse_spectra(const std::string& text) {
  SpectrumPair out{{Species::Co, {}}, {Species::Ni, {}}};
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  BandModel* current = nullptr;
  // Tracks which keys the open section has set; all three are required.
  unsigned seen = 0;
  auto close_section = [&]() {
    if (current && seen != 0b111)
      throw FormatError("band config: section ending before line " + std::to_string(line) +
                        " is missing center_nm, sigma_nm or eps_peak");
  };
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw.substr(0, raw.find_first_of("#;")));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw FormatError("band config line " + std::to_string(line) + ": unterminated section");
      close_section();
      Species sp;
      try {
        sp = species_from_string(trim(s.substr(1, s.size() - 2)));
      } catch (const DomainError& e) {
        throw FormatError("band config line " + std::to_string(line) + ": " + e.what());
      }
      auto& bands = sp == Species::Co ? out.co.bands : out.ni.bands;
      bands.emplace_back();
      current = &bands.back();
      seen = 0;
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw FormatError("band config line " + std::to_string(line) + ": expected key = value");
    if (!current) throw FormatError("band config line " + std::to_string(line) + ": key outside a section");
    const std::string key = trim(s.substr(0, eq));
    const double value = parse_number(trim(s.substr(eq + 1)), line);
    if (key == "center_nm") {
      current->center_nm = value;
      seen |= 1u;
    } else if (key == "sigma_nm") {
      current->sigma_nm = value;
      seen |= 2u;
    } else if (key == "eps_peak") {
      current->eps_peak = value;
      seen |= 4u;
    } else {
      throw FormatError("band config line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }
  ++line;
  close_section();
  try {
    out.co.validate();
    out.ni.validate();
  } catch (const DomainError& e) {
    throw FormatError(std::string("band config: ") + e.what());
  }
  return out;
}

SpectrumPair load_spectra(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open band config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_spectra(ss.str());
}

std::string format_spectra(const SpectrumPair& spectra) {
  std::ostringstream out;
  out.precision(17);
  for (const auto* sp : {&spectra.co, &spectra.ni}) {
    for (const auto& b : sp->bands) {
      out << '[' << to_string(sp->species) << "]\n"
          << "center_nm = " << b.center_nm << '\n'
          << "sigma_nm = " << b.sigma_nm << '\n'
          << "eps_peak = " << b.eps_peak << "\n\n";
    }
  }
  return out.str();
}

double molar_absorptivity(const SpeciesSpectrum& spectrum, double lambda_nm) {
  double eps = 0.0;
  for (const auto& b : spectrum.bands) {
    const double d = lambda_nm - b.center_nm;
    eps += b.eps_peak * std::exp(-(d * d) / (2.0 * b.sigma_nm * b.sigma_nm));
  }
  return eps;
}

std::vector<double> absorbance_profile(double co_M, double ni_M, const SpectrumPair& spectra,
                                       const WavelengthGrid& grid, double path_length_cm) {
  if (!(co_M >= 0.0) || !(ni_M >= 0.0)) throw DomainError("absorbance_profile: concentrations must be >= 0");
  if (!(path_length_cm > 0.0)) throw DomainError("absorbance_profile: path length must be > 0");
  const std::size_t n = grid.count();
  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lambda = grid.at(i);
    const double eps_co = molar_absorptivity(spectra.co, lambda);
    const double eps_ni = molar_absorptivity(spectra.ni, lambda);
    a[i] = (eps_co * co_M + eps_ni * ni_M) * path_length_cm;
  }
  return a;
}

namespace {

void validate_range(const ConcentrationRange& r, const char* name) {
  const std::string who = std::string("generation spec: ") + name;
  if (r.levels.empty()) {
    if (!(r.min_M >= 0.0) || !(r.max_M >= r.min_M) || !std::isfinite(r.max_M))
      throw DomainError(who + " requires 0 <= conc_min <= conc_max");
  } else {
    for (double v : r.levels)
      if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(who + " levels must be finite and >= 0");
  }
}

double draw_concentration(const ConcentrationRange& r, Rng& rng) {
  if (!r.levels.empty()) return r.levels[rng.index(r.levels.size())];
  return rng.uniform(r.min_M, r.max_M);
}

}  // namespace

void GenerationSpec::validate() const {
  grid.validate();
  validate_range(co, "co");
  validate_range(ni, "ni");
  if (count == 0) throw DomainError("generation spec: count must be > 0");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw DomainError("generation spec: noise_sigma must be >= 0");
  if (!(path_length_cm > 0.0) || !std::isfinite(path_length_cm))
    throw DomainError("generation spec: path_length_cm must be > 0");
  spectra.co.validate();
  spectra.ni.validate();
}

SampleSet generate_dataset(const GenerationSpec& spec) {
  spec.validate();
  SampleSet set;
  set.grid = spec.grid;
  set.samples.resize(spec.count);
  const std::size_t n = spec.grid.count();

  // Absorptivities are concentration independent; tabulate once.
  std::vector<double> eps_co(n), eps_ni(n);
  for (std::size_t i = 0; i < n; ++i) {
    eps_co[i] = molar_absorptivity(spec.spectra.co, spec.grid.at(i));
    eps_ni[i] = molar_absorptivity(spec.spectra.ni, spec.grid.at(i));
  }

  for (std::size_t r = 0; r < spec.count; ++r) {
    Rng rng(mix_seed(spec.seed, r));
    Sample& s = set.samples[r];
    s.co_M = draw_concentration(spec.co, rng);
    s.ni_M = draw_concentration(spec.ni, rng);
    s.absorbances.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double a = (eps_co[i] * s.co_M + eps_ni[i] * s.ni_M) * spec.path_length_cm;
      if (spec.noise_sigma > 0.0) a += rng.normal(0.0, spec.noise_sigma);
      s.absorbances[i] = std::max(a, 0.0);
    }
  }
  return set;
}

}  // namespace vspec

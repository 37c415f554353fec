#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vspec {

struct WavelengthGrid {
  double start_nm = 350.0;
  double end_nm = 600.0;
  double step_nm = 2.0;

  // floor((end - start) / step) + 1, with a small tolerance for decimal steps.
  std::size_t count() const;
  double at(std::size_t i) const { return start_nm + step_nm * static_cast<double>(i); }
  std::vector<double> wavelengths() const;
  void validate() const;

  static WavelengthGrid standard() { return {}; }
  bool operator==(const WavelengthGrid&) const = default;
};

struct BandModel {
  double center_nm = 0.0;
  double sigma_nm = 1.0;
  double eps_peak = 0.0;  // M^-1 cm^-1
};

enum class Species { Co, Ni };

std::string to_string(Species s);
Species species_from_string(const std::string& s);

struct SpeciesSpectrum {
  Species species = Species::Ni;
  std::vector<BandModel> bands;

  void validate() const;
};

struct SpectrumPair {
  SpeciesSpectrum co;
  SpeciesSpectrum ni;
};

// Ni: one band at 394 nm; Co: one band at 510 nm.
SpectrumPair default_spectra();

// Reads the INI-style band file: one [Co] or [Ni] section per band with
// center_nm, sigma_nm and eps_peak keys. A repeated section adds a band.
SpectrumPair load_spectra(const std::filesystem::path& path);
SpectrumPair parse_spectra(const std::string& text);
std::string format_spectra(const SpectrumPair& spectra);

double molar_absorptivity(const SpeciesSpectrum& spectrum, double lambda_nm);

// Beer's law over the grid: A = (eps_co * co + eps_ni * ni) * path.
std::vector<double> absorbance_profile(double co_M, double ni_M, const SpectrumPair& spectra,
                                       const WavelengthGrid& grid, double path_length_cm = 1.0);

struct ConcentrationRange {
  double min_M = 0.02;
  double max_M = 0.10;
  // Optional discrete standards; when non-empty, draws pick uniformly from these.
  std::vector<double> levels;
};

struct GenerationSpec {
  WavelengthGrid grid;
  ConcentrationRange co;
  ConcentrationRange ni;
  std::size_t count = 6000;
  double noise_sigma = 0.005;
  double path_length_cm = 1.0;
  std::uint64_t seed = 42;
  SpectrumPair spectra = default_spectra();

  void validate() const;
};

struct Sample {
  double co_M = 0.0;
  double ni_M = 0.0;
  std::vector<double> absorbances;

  bool operator==(const Sample&) const = default;
};

struct SampleSet {
  WavelengthGrid grid;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  bool operator==(const SampleSet&) const = default;
};

// Draws concentrations per record from a seed derived from (spec.seed, index),
// so the output does not depend on evaluation order.
SampleSet generate_dataset(const GenerationSpec& spec);

}  // namespace vspec

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "qftk/pipeline.hpp"

namespace qftk {

// Hourly irradiance-like station: a daily sinusoid with two harmonics and a
// slow seasonal envelope, plus AR(1) cloud noise.
//   glo_rad    target, positive mean
//   clear_sky  noiseless envelope
//   air_temp   lagged daily cycle with its own noise
struct SynthSpec {
  Eigen::Index steps = 5000;
  std::uint64_t seed = 0;
  int step_minutes = 60;
  std::string station_code = "SYN";
};

StationSeries synthesize_station(const SynthSpec& spec);

// timestamp,glo_rad,clear_sky,air_temp with ISO-8601 UTC timestamps from 2020-01-01.
void write_series_csv(const std::filesystem::path& path, const StationSeries& series);

}  // namespace qftk

#include "qftk/synth.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "qftk/errors.hpp"
#include "qftk/rng.hpp"

namespace qftk {

StationSeries synthesize_station(const SynthSpec& spec) {
  if (spec.steps < 1 || spec.step_minutes < 1) throw Error(ErrorCode::ConfigError, "synthetic series needs steps and spacing");
  using std::numbers::pi;
  Rng rng(spec.seed);
  const double day_phase = rng.uniform(0.0, 2 * pi);
  const double w = 2 * pi / (24.0 * 60.0);
  const double year = 365.0 * 24.0 * 60.0;

  StationSeries s;
  s.station_code = spec.station_code;
  s.koppen_class = "C";
  s.feature_names = {"glo_rad", "clear_sky", "air_temp"};
  s.values.resize(spec.steps, 3);
  s.timestamps.resize(static_cast<std::size_t>(spec.steps));

  double cloud = 0.0, temp_noise = 0.0;
  for (Eigen::Index i = 0; i < spec.steps; ++i) {
    const double t = static_cast<double>(i) * spec.step_minutes;
    s.timestamps[static_cast<std::size_t>(i)] = static_cast<long long>(t);
    const double season = 1.0 + 0.15 * std::sin(2 * pi * t / year);
    const double a = w * t + day_phase;
    const double clear = 600.0 + 350.0 * season * (std::sin(a) + 0.25 * std::sin(2 * a + 0.4) + 0.08 * std::sin(3 * a + 1.1));
    cloud = 0.8 * cloud + 30.0 * rng.normal();
    temp_noise = 0.9 * temp_noise + 0.4 * rng.normal();
    s.values(i, 0) = 0.85 * clear + cloud + 10.0 * rng.normal();
    s.values(i, 1) = clear;
    s.values(i, 2) = 15.0 + 3.0 * season + 6.0 * std::sin(a - 0.8) + temp_noise;
  }
  return s;
}

void write_series_csv(const std::filesystem::path& path, const StationSeries& series) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "timestamp";
  for (const auto& f : series.feature_names) out << ',' << f;
  out << '\n';
  using namespace std::chrono;
  const sys_seconds origin = sys_days{year{2020} / January / 1};
  char buf[64];
  for (Eigen::Index i = 0; i < series.length(); ++i) {
    const auto tp = origin + minutes{series.timestamps[static_cast<std::size_t>(i)]};
    const auto day = floor<days>(tp);
    const year_month_day ymd{day};
    const hh_mm_ss hms{tp - day};
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:00Z", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()));
    out << buf;
    for (Eigen::Index f = 0; f < series.values.cols(); ++f) {
      std::snprintf(buf, sizeof buf, ",%.6f", series.values(i, f));
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace qftk

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qftk {

// Multivariate series on a shared, equally spaced minute axis.
struct StationSeries {
  std::string station_code;
  std::string koppen_class;
  std::vector<long long> timestamps;    // minute index, strictly increasing
  std::vector<std::string> feature_names;
  Eigen::MatrixXd values;               // rows = timesteps, cols = features
  std::size_t dropped_rows = 0;         // rows removed for missing values
  std::size_t spacing_violations = 0;   // steps whose spacing differs from the first step

  Eigen::Index length() const { return values.rows(); }
  Eigen::Index feature_index(const std::string& name) const;
  Eigen::VectorXd column(const std::string& name) const { return values.col(feature_index(name)); }
};

struct SplitSpec {
  double train_frac = 0.8;
  double val_frac = 0.1;
  double test_frac = 0.1;
  int window = 32;
  int stride = 1;
  int horizon = 1;

  void validate() const;
  int qubits() const;
};

enum class Split { Train = 0, Val = 1, Test = 2 };
std::string_view to_string(Split split);

// Half-open timestep ranges of the three chronological splits.
struct SplitBounds {
  std::array<Eigen::Index, 3> begin{};
  std::array<Eigen::Index, 3> end{};

  Eigen::Index length(Split s) const { return end[static_cast<int>(s)] - begin[static_cast<int>(s)]; }
};

SplitBounds split_bounds(Eigen::Index length, const SplitSpec& spec);

// Per-feature (mean, std) fitted on the training slice only.
struct Scaler {
  std::vector<std::string> feature_names;
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  double transform(Eigen::Index feature, double value) const { return (value - mean(feature)) / stddev(feature); }
  double inverse(Eigen::Index feature, double value) const { return value * stddev(feature) + mean(feature); }
  Eigen::VectorXd inverse(Eigen::Index feature, const Eigen::VectorXd& z) const {
    return (z.array() * stddev(feature) + mean(feature)).matrix();
  }
};

struct StandardizedSeries {
  StationSeries series;
  Scaler scaler;
};

// z-scores every feature with train-slice statistics (population std).
StandardizedSeries standardize(const StationSeries& series, const SplitSpec& spec);

struct WindowSet {
  Split split = Split::Train;
  int window = 0;
  int stride = 1;
  int horizon = 1;
  std::vector<std::string> feature_names;
  std::vector<Eigen::MatrixXd> windows;  // per feature; row i = L2-normalised window i
  Eigen::VectorXd targets;               // standardised target, x[start + W - 1 + H]
  std::vector<Eigen::Index> start_indices;
  Eigen::Index target_feature = 0;
  std::size_t degenerate_windows = 0;    // near-zero windows replaced by the uniform vector

  Eigen::Index count() const { return static_cast<Eigen::Index>(start_indices.size()); }
  const Eigen::MatrixXd& feature(const std::string& name) const;
};

struct SplitWindows {
  WindowSet train;
  WindowSet val;
  WindowSet test;
  Scaler scaler;
  SplitBounds bounds;

  const WindowSet& get(Split s) const;
};

// Number of windows a slice of `length` steps yields.
Eigen::Index window_count(Eigen::Index length, int window, int stride, int horizon);

SplitWindows make_windows(const StationSeries& series, const std::string& target, const SplitSpec& spec);

// True when every timestep touched by `earlier` (windows and targets) lies
// strictly before the first window start in `later`.
bool leak_free(std::span<const Eigen::Index> earlier, std::span<const Eigen::Index> later, int window, int horizon);
bool leak_free(const SplitWindows& windows);

struct FeatureCorrelation {
  std::string feature;
  double correlation = 0.0;
};

struct ScreenResult {
  std::vector<FeatureCorrelation> ranked;
  std::vector<std::string> notes;
};

// Pearson correlation of feature[t] with target[t+1] on the training slice,
// ranked by |corr|; zero-variance features are skipped with a note.
ScreenResult lag1_screen(const StationSeries& series, const std::string& target, std::size_t top_k, const SplitSpec& spec);

StationSeries ingest_csv(const std::filesystem::path& path, const std::vector<std::string>& features, const std::string& target,
                         const std::string& station_code = {});

// Integer minute index or ISO-8601 "YYYY-MM-DD[T ]HH:MM[:SS][Z]".
long long parse_timestamp(const std::string& text);

struct StationInfo {
  std::string code;
  std::string name;
  double lat = 0.0;
  double lon = 0.0;
  double elev_m = 0.0;
  std::string koppen;
};

std::vector<StationInfo> load_station_metadata(const std::filesystem::path& path);

}  // namespace qftk

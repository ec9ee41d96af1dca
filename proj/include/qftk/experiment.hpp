#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qftk/bayesopt.hpp"
#include "qftk/gram.hpp"
#include "qftk/krr.hpp"
#include "qftk/metrics.hpp"
#include "qftk/mixopt.hpp"
#include "qftk/pipeline.hpp"

namespace qftk {

enum class KernelFamily { Qft, Rbf, Poly };

std::string_view to_string(KernelFamily f);
KernelFamily parse_kernel_family(std::string_view name);
Branch branch_of(KernelFamily f);

// Flat JSON document; relative paths are resolved against the config file.
struct ExperimentConfig {
  std::filesystem::path data_dir;  // <data_dir>/<station>.csv
  std::vector<std::string> stations;
  std::filesystem::path metadata;  // optional station table (code, ..., koppen)
  std::vector<std::string> features;
  std::string target;
  SplitSpec split;
  std::vector<KernelFamily> kernels{KernelFamily::Qft, KernelFamily::Rbf, KernelFamily::Poly};
  std::optional<double> rbf_gamma;   // default 1/W
  std::optional<double> poly_gamma;  // default 1/W
  double poly_offset = 1.0;
  int poly_degree = 3;
  int outer_calls = 20;
  double alpha_min = 1e-6;
  double alpha_max = 1e3;
  int alpha_count = 100;
  std::uint64_t seed = 0;
  ProposalStrategy optimizer = ProposalStrategy::GpExpectedImprovement;
  std::filesystem::path output_dir = "qftk_out";
  bool cache = true;

  static constexpr int kMaxQubits = 12;

  void validate() const;
  ClassicalKernelParams<double> classical_params(KernelFamily f) const;
  OptimizationBudget budget() const;
};

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
// Canonical JSON of every field that affects results (not output_dir or cache).
std::string canonical_config(const ExperimentConfig& config);

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash = kFnvOffset);
std::string hex64(std::uint64_t v);
std::string config_hash(const ExperimentConfig& config);

// Per-feature Gram matrices of one kernel family, in config feature order.
struct KernelSet {
  KernelFamily family = KernelFamily::Qft;
  std::vector<KernelMatrix> train, val, test;
  std::size_t cache_hits = 0;
  std::size_t computed = 0;
  double seconds = 0.0;
  std::vector<std::filesystem::path> files;
};

// QFTK_CACHE_DIR overrides <output_dir>/cache.
std::filesystem::path cache_root(const ExperimentConfig& config);
// cache/<station>/<key>/ where key hashes the kernel-relevant config and the station file.
std::filesystem::path station_cache_dir(const ExperimentConfig& config, const std::string& station);

// Gram of eval windows against train windows for one feature.
Eigen::MatrixXd family_gram(KernelFamily family, const ExperimentConfig& config, const Eigen::MatrixXd& eval,
                            const Eigen::MatrixXd& train, bool symmetric, int jobs);

KernelSet build_kernels(const ExperimentConfig& config, const std::string& station, const SplitWindows& windows,
                        KernelFamily family, int jobs, bool use_cache);

struct FamilyForecast {
  KernelFamily family = KernelFamily::Qft;
  MixtureResult mixture;
  KrrModel model;
  Eigen::VectorXd predicted;  // physical units
  Eigen::VectorXd observed;
  MetricsReport report;
};

// Mixture search on val, final fit on train, metrics on test in physical units.
FamilyForecast forecast_family(const ExperimentConfig& config, const std::string& station, const SplitWindows& windows,
                               const KernelSet& kernels);

SplitWindows station_windows(const ExperimentConfig& config, const StationSeries& series);
StationSeries load_station(const ExperimentConfig& config, const std::string& station);

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

int cmd_run(const ExperimentConfig& config, int jobs, std::ostream& log);
int cmd_kernels(const ExperimentConfig& config, const std::string& station, int jobs, std::ostream& log);
int cmd_report(const std::filesystem::path& dir, std::ostream& log);

// Drops "elapsed_ms" members from trace lines so two runs can be compared.
std::string strip_timing(const std::string& jsonl);

}  // namespace qftk

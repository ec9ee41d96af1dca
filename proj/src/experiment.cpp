#include "qftk/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qftk/errors.hpp"
#include "qftk/qkernel.hpp"

namespace qftk {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string_view to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::Qft: return "qft";
    case KernelFamily::Rbf: return "rbf";
    case KernelFamily::Poly: return "poly";
  }
  return "?";
}

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "qft") return KernelFamily::Qft;
  if (name == "rbf") return KernelFamily::Rbf;
  if (name == "poly") return KernelFamily::Poly;
  throw Error(ErrorCode::ConfigError, "unknown kernel '" + std::string(name) + "'");
}

Branch branch_of(KernelFamily f) { return f == KernelFamily::Qft ? Branch::Quantum : Branch::Classical; }

// ---------------------------------------------------------------- config

void ExperimentConfig::validate() const {
  split.validate();
  if (split.qubits() > kMaxQubits)
    throw Error(ErrorCode::ConfigError, "window " + std::to_string(split.window) + " needs more than 12 qubits");
  if (stations.empty()) throw Error(ErrorCode::ConfigError, "no stations selected");
  if (features.empty()) throw Error(ErrorCode::ConfigError, "no features selected");
  if (std::set<std::string>(features.begin(), features.end()).size() != features.size())
    throw Error(ErrorCode::ConfigError, "duplicate feature names");
  if (target.empty()) throw Error(ErrorCode::ConfigError, "no target selected");
  if (kernels.empty()) throw Error(ErrorCode::ConfigError, "no kernels selected");
  if (std::set<KernelFamily>(kernels.begin(), kernels.end()).size() != kernels.size())
    throw Error(ErrorCode::ConfigError, "duplicate kernel names");
  classical_params(KernelFamily::Rbf).validate();
  classical_params(KernelFamily::Poly).validate();
  budget().validate();
}

ClassicalKernelParams<double> ExperimentConfig::classical_params(KernelFamily f) const {
  if (f == KernelFamily::Qft) throw Error(ErrorCode::ConfigError, "qft has no classical parameters");
  auto p = ClassicalKernelParams<double>::defaults(f == KernelFamily::Rbf ? ClassicalKind::RBF : ClassicalKind::Poly, split.window);
  if (f == KernelFamily::Rbf && rbf_gamma) p.gamma = *rbf_gamma;
  if (f == KernelFamily::Poly) {
    if (poly_gamma) p.gamma = *poly_gamma;
    p.offset_r = poly_offset;
    p.degree_d = poly_degree;
  }
  return p;
}

OptimizationBudget ExperimentConfig::budget() const {
  OptimizationBudget b;
  b.outer_calls = outer_calls;
  b.alpha_grid = log_grid(alpha_min, alpha_max, alpha_count);
  b.seed = seed;
  b.strategy = optimizer;
  return b;
}

namespace {

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::ConfigError, std::string("config field '") + key + "' has the wrong type");
  }
}

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal();
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "data_dir",    "stations",   "metadata",   "features",    "target",      "train_frac", "val_frac",
      "test_frac",   "window",     "stride",     "horizon",     "kernels",     "rbf_gamma",  "poly_gamma",
      "poly_offset", "poly_degree", "outer_calls", "alpha_min",  "alpha_max",   "alpha_count", "seed",
      "optimizer",   "output_dir", "cache"};
  return keys;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known_keys().count(key)) throw Error(ErrorCode::ConfigError, "unknown config field '" + key + "'");

  ExperimentConfig c;
  auto opt = [&](const char* key, auto& field) {
    if (j.contains(key)) field = get_as<std::decay_t<decltype(field)>>(j[key], key);
  };
  for (const char* key : {"data_dir", "stations", "features", "target"})
    if (!j.contains(key)) throw Error(ErrorCode::ConfigError, std::string("config field '") + key + "' is required");

  c.data_dir = resolve(get_as<std::string>(j["data_dir"], "data_dir"), base_dir);
  c.stations = get_as<std::vector<std::string>>(j["stations"], "stations");
  c.features = get_as<std::vector<std::string>>(j["features"], "features");
  c.target = get_as<std::string>(j["target"], "target");
  if (j.contains("metadata")) c.metadata = resolve(get_as<std::string>(j["metadata"], "metadata"), base_dir);
  opt("train_frac", c.split.train_frac);
  opt("val_frac", c.split.val_frac);
  opt("test_frac", c.split.test_frac);
  opt("window", c.split.window);
  opt("stride", c.split.stride);
  opt("horizon", c.split.horizon);
  if (j.contains("kernels")) {
    c.kernels.clear();
    for (const auto& k : get_as<std::vector<std::string>>(j["kernels"], "kernels")) c.kernels.push_back(parse_kernel_family(k));
  }
  if (j.contains("rbf_gamma") && !j["rbf_gamma"].is_null()) c.rbf_gamma = get_as<double>(j["rbf_gamma"], "rbf_gamma");
  if (j.contains("poly_gamma") && !j["poly_gamma"].is_null()) c.poly_gamma = get_as<double>(j["poly_gamma"], "poly_gamma");
  opt("poly_offset", c.poly_offset);
  opt("poly_degree", c.poly_degree);
  opt("outer_calls", c.outer_calls);
  opt("alpha_min", c.alpha_min);
  opt("alpha_max", c.alpha_max);
  opt("alpha_count", c.alpha_count);
  opt("seed", c.seed);
  if (j.contains("optimizer")) {
    const auto name = get_as<std::string>(j["optimizer"], "optimizer");
    if (name == "gp_ei") c.optimizer = ProposalStrategy::GpExpectedImprovement;
    else if (name == "random") c.optimizer = ProposalStrategy::RandomSearch;
    else throw Error(ErrorCode::ConfigError, "optimizer must be 'gp_ei' or 'random'");
  }
  if (j.contains("output_dir")) c.output_dir = resolve(get_as<std::string>(j["output_dir"], "output_dir"), base_dir);
  opt("cache", c.cache);
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fs::absolute(path).parent_path());
}

std::string canonical_config(const ExperimentConfig& c) {
  json j;
  j["data_dir"] = c.data_dir.generic_string();
  j["stations"] = c.stations;
  j["metadata"] = c.metadata.generic_string();
  j["features"] = c.features;
  j["target"] = c.target;
  j["train_frac"] = c.split.train_frac;
  j["val_frac"] = c.split.val_frac;
  j["test_frac"] = c.split.test_frac;
  j["window"] = c.split.window;
  j["stride"] = c.split.stride;
  j["horizon"] = c.split.horizon;
  std::vector<std::string> kernels;
  for (auto k : c.kernels) kernels.emplace_back(to_string(k));
  j["kernels"] = kernels;
  j["rbf_gamma"] = c.classical_params(KernelFamily::Rbf).gamma;
  const auto poly = c.classical_params(KernelFamily::Poly);
  j["poly_gamma"] = poly.gamma;
  j["poly_offset"] = poly.offset_r;
  j["poly_degree"] = poly.degree_d;
  j["outer_calls"] = c.outer_calls;
  j["alpha_min"] = c.alpha_min;
  j["alpha_max"] = c.alpha_max;
  j["alpha_count"] = c.alpha_count;
  j["seed"] = c.seed;
  j["optimizer"] = c.optimizer == ProposalStrategy::RandomSearch ? "random" : "gp_ei";
  return j.dump();
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash) {
  for (unsigned char ch : bytes) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string config_hash(const ExperimentConfig& c) { return hex64(fnv1a(canonical_config(c))); }

// ---------------------------------------------------------------- kernels

fs::path cache_root(const ExperimentConfig& c) {
  if (const char* env = std::getenv("QFTK_CACHE_DIR"); env && *env) return env;
  return c.output_dir / "cache";
}

namespace {

fs::path station_file(const ExperimentConfig& c, const std::string& station) { return c.data_dir / (station + ".csv"); }

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

fs::path station_cache_dir(const ExperimentConfig& c, const std::string& station) {
  json j;
  j["features"] = c.features;
  j["target"] = c.target;
  j["split"] = {c.split.train_frac, c.split.val_frac, c.split.test_frac, c.split.window, c.split.stride, c.split.horizon};
  const auto rbf = c.classical_params(KernelFamily::Rbf);
  const auto poly = c.classical_params(KernelFamily::Poly);
  j["rbf"] = {rbf.gamma};
  j["poly"] = {poly.gamma, poly.offset_r, poly.degree_d};
  std::uint64_t h = fnv1a(j.dump());
  h = fnv1a(read_bytes(station_file(c, station)), h);
  return cache_root(c) / station / hex64(h);
}

Eigen::MatrixXd family_gram(KernelFamily family, const ExperimentConfig& c, const Eigen::MatrixXd& eval, const Eigen::MatrixXd& train,
                            bool symmetric, int jobs) {
  if (family == KernelFamily::Qft) {
    const auto layout = build_protective_layout(c.split.qubits());
    const Eigen::MatrixXcd train_states = embed_windows(train, layout, jobs);
    if (symmetric) return fidelity_gram(train_states, train_states, true, jobs);
    return fidelity_gram(embed_windows(eval, layout, jobs), train_states, false, jobs);
  }
  return classical_gram(eval, train, c.classical_params(family), symmetric, jobs);
}

KernelSet build_kernels(const ExperimentConfig& c, const std::string& station, const SplitWindows& windows, KernelFamily family,
                        int jobs, bool use_cache) {
  const auto t0 = std::chrono::steady_clock::now();
  KernelSet set;
  set.family = family;
  const fs::path dir = use_cache ? station_cache_dir(c, station) : fs::path{};
  if (use_cache) fs::create_directories(dir);

  struct Pair {
    const char* name;
    const WindowSet* eval;
    MatrixKind kind;
    std::vector<KernelMatrix>* out;
  };
  const Pair pairs[] = {{"train_train", &windows.train, MatrixKind::TrainTrain, &set.train},
                        {"val_train", &windows.val, MatrixKind::EvalTrain, &set.val},
                        {"test_train", &windows.test, MatrixKind::EvalTrain, &set.test}};
  for (const auto& feature : c.features) {
    const Eigen::MatrixXd& train = windows.train.feature(feature);
    for (const auto& pair : pairs) {
      const std::string source = std::string(to_string(family)) + ":" + feature;
      const Eigen::MatrixXd& eval = pair.eval->feature(feature);
      const fs::path file = dir / (std::string(to_string(family)) + "_" + feature + "_" + pair.name + ".qkrn");
      bool loaded = false;
      if (use_cache && fs::exists(file)) {
        try {
          KernelMatrix k = read_kernel_cache(file);
          if (k.kind == pair.kind && k.rows() == eval.rows() && k.cols() == train.rows()) {
            k.source = source;
            pair.out->push_back(std::move(k));
            loaded = true;
            ++set.cache_hits;
          }
        } catch (const Error& e) {
          if (e.code() != ErrorCode::CacheCorrupt) throw;
        }
      }
      if (!loaded) {
        KernelMatrix k{family_gram(family, c, eval, train, pair.kind == MatrixKind::TrainTrain, jobs), pair.kind, source};
        if (use_cache) write_kernel_cache(file, k);
        pair.out->push_back(std::move(k));
        ++set.computed;
      }
      if (use_cache) set.files.push_back(file);
    }
  }
  set.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return set;
}

// ---------------------------------------------------------------- forecasting

StationSeries load_station(const ExperimentConfig& c, const std::string& station) {
  return ingest_csv(station_file(c, station), c.features, c.target, station);
}

SplitWindows station_windows(const ExperimentConfig& c, const StationSeries& series) { return make_windows(series, c.target, c.split); }

FamilyForecast forecast_family(const ExperimentConfig& c, const std::string& station, const SplitWindows& windows, const KernelSet& kernels) {
  FamilyForecast f;
  f.family = kernels.family;
  const Branch branch = branch_of(kernels.family);
  f.mixture = optimize_mixture(kernels.train, kernels.val, windows.train.targets, windows.val.targets, branch, c.budget());

  KernelMatrix k_train = mix_kernels(kernels.train, f.mixture.weights);
  if (branch == Branch::Classical) k_train = add_jitter(k_train);
  f.model = krr_fit(k_train, windows.train.targets, f.mixture.lambda);
  const Eigen::VectorXd z = krr_predict(f.model, mix_kernels(kernels.test, f.mixture.weights));

  const Eigen::Index target = windows.test.target_feature;
  f.predicted = windows.scaler.inverse(target, z);
  f.observed = windows.scaler.inverse(target, windows.test.targets);
  f.report = compute_report(station, std::string(to_string(kernels.family)), f.predicted, f.observed);
  return f;
}

// ---------------------------------------------------------------- artifacts

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "short write to " + p.string());
  }
  fs::rename(tmp, p);
}

json report_json(const MetricsReport& r, const std::string& koppen, const FamilyForecast& f, const ExperimentConfig& c) {
  json j;
  j["station_code"] = r.station_code;
  j["koppen_class"] = koppen;
  j["model"] = r.model;
  j["branch"] = to_string(branch_of(f.family));
  j["n_points"] = r.n_points;
  json m;
  for (const auto& name : metric_names()) m[name] = number_or_null(metric_value(r, name));
  j["metrics"] = m;
  j["ermax_definition"] = kErmaxDefinition;
  j["flags"] = r.flags;
  j["features"] = c.features;
  j["weights"] = std::vector<double>(f.mixture.weights.weights.data(), f.mixture.weights.weights.data() + f.mixture.weights.weights.size());
  j["weights_degenerate"] = f.mixture.weights.degenerate;
  j["lambda"] = f.mixture.lambda;
  j["val_r2"] = f.mixture.val_r2;
  j["config_hash"] = config_hash(c);
  return j;
}

json model_json(const FamilyForecast& f) {
  json j;
  j["model"] = to_string(f.family);
  j["weights"] = std::vector<double>(f.mixture.weights.weights.data(), f.mixture.weights.weights.data() + f.mixture.weights.weights.size());
  j["ridge_lambda"] = f.model.ridge_lambda;
  j["applied_jitter"] = f.model.applied_jitter;
  j["residual_norm"] = f.model.residual_norm;
  j["dual_coefficients"] =
      std::vector<double>(f.model.dual_coefficients.data(), f.model.dual_coefficients.data() + f.model.dual_coefficients.size());
  return j;
}

std::string predictions_csv(const SplitWindows& w, const FamilyForecast& f) {
  std::string out = "start_index,observed,predicted\n";
  char buf[96];
  for (Eigen::Index i = 0; i < f.predicted.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g\n", static_cast<long long>(w.test.start_indices[static_cast<std::size_t>(i)]),
                  f.observed(i), f.predicted(i));
    out += buf;
  }
  return out;
}

std::map<std::string, std::string> koppen_lookup(const ExperimentConfig& c) {
  std::map<std::string, std::string> out;
  if (c.metadata.empty()) return out;
  for (const auto& s : load_station_metadata(c.metadata)) out[s.code] = s.koppen;
  return out;
}

struct StationJob {
  std::string station;
  bool ok = false;
  std::string error;
  json manifest;
};

StationJob run_station(const ExperimentConfig& c, const std::string& station, const std::string& koppen, int jobs, std::ostream& log,
                       std::mutex& log_mutex) {
  StationJob job;
  job.station = station;
  auto say = [&](const std::string& msg) {
    std::lock_guard lock(log_mutex);
    log << "[" << station << "] " << msg << '\n';
  };
  using Clock = std::chrono::steady_clock;
  try {
    const auto t0 = Clock::now();
    const StationSeries series = load_station(c, station);
    const SplitWindows windows = station_windows(c, series);
    const double prep = std::chrono::duration<double>(Clock::now() - t0).count();
    say("windows train/val/test = " + std::to_string(windows.train.count()) + "/" + std::to_string(windows.val.count()) + "/" +
        std::to_string(windows.test.count()));

    json artifacts = {{"reports", json::array()}, {"traces", json::array()}, {"models", json::array()},
                      {"predictions", json::array()}, {"kernel_cache", json::array()}};
    json timings;
    timings["prepare_s"] = prep;
    const fs::path rel = station;
    for (KernelFamily family : c.kernels) {
      const std::string name(to_string(family));
      const KernelSet kernels = build_kernels(c, station, windows, family, jobs, c.cache);
      const auto t1 = Clock::now();
      const FamilyForecast f = forecast_family(c, station, windows, kernels);
      const double opt = std::chrono::duration<double>(Clock::now() - t1).count();

      const fs::path report = fs::path("reports") / rel / (name + ".json");
      const fs::path trace = fs::path("traces") / rel / (name + ".jsonl");
      const fs::path model = fs::path("models") / rel / (name + ".json");
      const fs::path preds = fs::path("predictions") / rel / (name + ".csv");
      write_text(c.output_dir / report, report_json(f.report, koppen, f, c).dump(2) + "\n");
      write_text(c.output_dir / trace, trace_to_jsonl(f.mixture.trace));
      write_text(c.output_dir / model, model_json(f).dump() + "\n");
      write_text(c.output_dir / preds, predictions_csv(windows, f));
      artifacts["reports"].push_back(report.generic_string());
      artifacts["traces"].push_back(trace.generic_string());
      artifacts["models"].push_back(model.generic_string());
      artifacts["predictions"].push_back(preds.generic_string());
      for (const auto& p : kernels.files) artifacts["kernel_cache"].push_back(p.generic_string());
      timings["kernels"][name] = {{"seconds", kernels.seconds}, {"cache_hits", kernels.cache_hits}, {"computed", kernels.computed}};
      timings["optimize_s"][name] = opt;

      char buf[160];
      std::snprintf(buf, sizeof buf, "%s: nrmse %.3f%%  r2_score %.4f  lambda %.3g  (kernels %zu cached, %zu computed)", name.c_str(),
                    f.report.nrmse_pct, f.report.r2_score, f.mixture.lambda, kernels.cache_hits, kernels.computed);
      say(buf);
    }
    job.manifest = {{"status", "ok"},
                    {"koppen_class", koppen},
                    {"rows", series.length()},
                    {"dropped_rows", series.dropped_rows},
                    {"spacing_violations", series.spacing_violations},
                    {"degenerate_windows", windows.train.degenerate_windows + windows.val.degenerate_windows + windows.test.degenerate_windows},
                    {"artifacts", artifacts},
                    {"timings", timings}};
    job.ok = true;
  } catch (const std::exception& e) {
    job.error = e.what();
    job.manifest = {{"status", "failed"}, {"error", job.error}};
    say(std::string("failed: ") + e.what());
  }
  return job;
}

}  // namespace

int cmd_run(const ExperimentConfig& c, int jobs, std::ostream& log) {
  c.validate();
  jobs = std::max(1, jobs);
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(c.output_dir);
  const auto koppen = koppen_lookup(c);
  std::mutex log_mutex;

  const int station_workers = std::min<int>(jobs, static_cast<int>(c.stations.size()));
  const int gram_jobs = std::max(1, jobs / station_workers);
  std::vector<StationJob> results(c.stations.size());
  parallel_rows(static_cast<Eigen::Index>(c.stations.size()), station_workers, [&](Eigen::Index i) {
    const auto& code = c.stations[static_cast<std::size_t>(i)];
    const auto it = koppen.find(code);
    results[static_cast<std::size_t>(i)] = run_station(c, code, it == koppen.end() ? "unknown" : it->second, gram_jobs, log, log_mutex);
  });

  json manifest;
  manifest["software"] = "qftk";
  manifest["version"] = QFTK_VERSION;
  manifest["config_hash"] = config_hash(c);
  manifest["config"] = json::parse(canonical_config(c));
  manifest["stations"] = json::object();
  int ok = 0;
  for (const auto& r : results) {
    manifest["stations"][r.station] = r.manifest;
    ok += r.ok ? 1 : 0;
  }
  manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text(c.output_dir / "manifest.json", manifest.dump(2) + "\n");
  log << ok << "/" << results.size() << " stations completed; manifest at " << (c.output_dir / "manifest.json").string() << '\n';
  return ok == 0 ? kExitFailure : kExitOk;
}

int cmd_kernels(const ExperimentConfig& c, const std::string& station, int jobs, std::ostream& log) {
  c.validate();
  const SplitWindows windows = station_windows(c, load_station(c, station));
  std::size_t written = 0;
  for (KernelFamily family : c.kernels) {
    const KernelSet set = build_kernels(c, station, windows, family, std::max(1, jobs), true);
    written += set.files.size();
    log << to_string(family) << ": " << set.computed << " computed, " << set.cache_hits << " cached\n";
  }
  log << written << " kernel files under " << station_cache_dir(c, station).string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- aggregation

namespace {

std::string climate_group(const std::string& koppen) {
  if (koppen.empty() || koppen == "unknown") return "unknown";
  const char ch = koppen.front();
  if (ch >= 'A' && ch <= 'E') return std::string(1, ch);
  return "unknown";
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

int cmd_report(const fs::path& dir, std::ostream& log) {
  const fs::path reports_dir = dir / "reports";
  std::vector<fs::path> files;
  if (fs::is_directory(reports_dir))
    for (const auto& e : fs::recursive_directory_iterator(reports_dir))
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  if (files.empty()) throw Error(ErrorCode::NoReportsFound, "no station reports under " + reports_dir.string());
  std::sort(files.begin(), files.end());

  std::vector<MetricsReport> reports;
  std::map<std::string, std::string> koppen, group;
  std::set<std::string> model_set;
  for (const auto& p : files) {
    json j;
    try {
      j = json::parse(read_bytes(p));
      MetricsReport r;
      r.station_code = j.at("station_code").get<std::string>();
      r.model = j.at("model").get<std::string>();
      r.n_points = j.at("n_points").get<long>();
      const auto& m = j.at("metrics");
      auto val = [&](const char* k) { return m.at(k).is_null() ? std::nan("") : m.at(k).get<double>(); };
      r.nrmse_pct = val("nrmse_pct");
      r.nmbe_pct = val("nmbe_pct");
      r.r2_pearson = val("r2_pearson");
      r.r2_score = val("r2_score");
      r.mae = val("mae");
      r.ermax_pct = val("ermax_pct");
      koppen[r.station_code] = j.value("koppen_class", "unknown");
      group[r.station_code] = climate_group(koppen[r.station_code]);
      model_set.insert(r.model);
      reports.push_back(std::move(r));
    } catch (const json::exception& e) {
      log << "skipping " << p.string() << ": " << e.what() << '\n';
    }
  }
  if (reports.empty()) throw Error(ErrorCode::NoReportsFound, "no readable station reports under " + reports_dir.string());

  std::vector<std::string> models;
  for (const char* m : {"qft", "rbf", "poly"})
    if (model_set.count(m)) models.emplace_back(m);
  for (const auto& m : model_set)
    if (std::find(models.begin(), models.end(), m) == models.end()) models.push_back(m);

  std::map<std::string, std::map<std::string, const MetricsReport*>> by_station;
  for (const auto& r : reports) by_station[r.station_code][r.model] = &r;

  // station table, one row per station
  std::string table = "station,koppen_class,class";
  for (const auto& m : models)
    for (const auto& metric : metric_names()) table += "," + m + "_" + metric;
  table += '\n';
  std::vector<std::string> footer;
  json stations = json::array();
  for (const auto& [code, row] : by_station) {
    table += code + "," + koppen[code] + "," + group[code];
    json sj = {{"station_code", code}, {"koppen_class", koppen[code]}, {"class", group[code]}, {"models", json::object()}};
    for (const auto& m : models) {
      const auto it = row.find(m);
      if (it == row.end()) footer.push_back("station " + code + " has no " + m + " report");
      json mj;
      for (const auto& metric : metric_names()) {
        const double v = it == row.end() ? std::nan("") : metric_value(*it->second, metric);
        table += "," + csv_number(v);
        mj[metric] = number_or_null(v);
      }
      if (it != row.end()) sj["models"][m] = mj;
    }
    table += '\n';
    stations.push_back(sj);
  }
  for (const auto& note : footer) table += "# " + note + '\n';
  write_text(dir / "station_table.csv", table);

  const ClassAggregate agg = aggregate_by_class(reports, group);
  std::string classes = "class,model,metric,median,q1,q3,min,max,count\n";
  json class_rows = json::array();
  for (const auto& [cls, per_model] : agg.summaries)
    for (const auto& m : models) {
      const auto mit = per_model.find(m);
      if (mit == per_model.end()) continue;
      for (const auto& metric : metric_names()) {
        const auto sit = mit->second.find(metric);
        if (sit == mit->second.end()) continue;
        const auto& s = sit->second;
        classes += cls + "," + m + "," + metric + "," + csv_number(s.median) + "," + csv_number(s.q1) + "," + csv_number(s.q3) + "," +
                   csv_number(s.min) + "," + csv_number(s.max) + "," + std::to_string(s.count) + '\n';
        class_rows.push_back({{"class", cls}, {"model", m}, {"metric", metric}, {"median", s.median}, {"q1", s.q1},
                              {"q3", s.q3}, {"min", s.min}, {"max", s.max}, {"count", s.count}});
      }
    }
  write_text(dir / "class_summary.csv", classes);

  json summary;
  summary["ermax_definition"] = kErmaxDefinition;
  summary["quantile_method"] = "linear";
  summary["models"] = models;
  summary["stations"] = stations;
  summary["classes"] = class_rows;
  std::vector<std::string> notes = footer;
  notes.insert(notes.end(), agg.notes.begin(), agg.notes.end());
  summary["notes"] = notes;
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  log << reports.size() << " reports from " << by_station.size() << " stations aggregated into " << agg.summaries.size()
      << " classes\n";
  return kExitOk;
}

std::string strip_timing(const std::string& jsonl) {
  std::string out;
  std::istringstream in(jsonl);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    j.erase("elapsed_ms");
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace qftk

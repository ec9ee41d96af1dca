#include "qftk/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "qftk/errors.hpp"

namespace qftk {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  for (auto& s : cells) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  }
  return cells;
}

bool parse_value(const std::string& text, double& out) {
  if (text.empty()) return false;
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "nan" || lower == "na" || lower == "null" || lower == "none") return false;
  char* end = nullptr;
  out = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') throw Error(ErrorCode::ConfigError, "unparseable value '" + text + "'");
  return std::isfinite(out);
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  return (da * db).sum() / std::sqrt((da * da).sum() * (db * db).sum());
}

bool near_zero_variance(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  const double var = (v.array() - mean).square().mean();
  return !(var > 1e-24 * std::max(1.0, mean * mean));
}

}  // namespace

Eigen::Index StationSeries::feature_index(const std::string& name) const {
  const auto it = std::find(feature_names.begin(), feature_names.end(), name);
  if (it == feature_names.end()) throw Error(ErrorCode::MissingColumn, "feature '" + name + "' not present");
  return static_cast<Eigen::Index>(it - feature_names.begin());
}

void SplitSpec::validate() const {
  for (double f : {train_frac, val_frac, test_frac}) {
    if (!(f > 0.0 && f < 1.0)) throw Error(ErrorCode::ConfigError, "split fractions must lie in (0, 1)");
  }
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) throw Error(ErrorCode::ConfigError, "split fractions must sum to 1");
  if (window < 2 || (window & (window - 1)) != 0) {
    throw Error(ErrorCode::ConfigError, "window " + std::to_string(window) + " is not a power of two");
  }
  if (stride < 1) throw Error(ErrorCode::ConfigError, "stride must be >= 1");
  if (horizon < 1) throw Error(ErrorCode::ConfigError, "horizon must be >= 1");
}

int SplitSpec::qubits() const { return std::countr_zero(static_cast<unsigned>(window)); }

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

SplitBounds split_bounds(Eigen::Index length, const SplitSpec& spec) {
  const auto n_train = static_cast<Eigen::Index>(std::floor(spec.train_frac * static_cast<double>(length)));
  const auto n_val = static_cast<Eigen::Index>(std::floor(spec.val_frac * static_cast<double>(length)));
  SplitBounds b;
  b.begin = {0, n_train, n_train + n_val};
  b.end = {n_train, n_train + n_val, length};
  return b;
}

StandardizedSeries standardize(const StationSeries& series, const SplitSpec& spec) {
  const auto bounds = split_bounds(series.length(), spec);
  const Eigen::Index n_train = bounds.length(Split::Train);
  if (n_train < 1) throw Error(ErrorCode::SplitTooShort, "train split is empty");
  Scaler scaler;
  scaler.feature_names = series.feature_names;
  const Eigen::Index nf = series.values.cols();
  scaler.mean.resize(nf);
  scaler.stddev.resize(nf);
  StandardizedSeries out{series, {}};
  for (Eigen::Index f = 0; f < nf; ++f) {
    const Eigen::VectorXd train = series.values.col(f).head(n_train);
    if (near_zero_variance(train)) throw Error(ErrorCode::ZeroVariance, "feature '" + series.feature_names[static_cast<std::size_t>(f)] + "'");
    const double mean = train.mean();
    const double sd = std::sqrt((train.array() - mean).square().mean());
    scaler.mean(f) = mean;
    scaler.stddev(f) = sd;
    out.series.values.col(f) = ((series.values.col(f).array() - mean) / sd).matrix();
  }
  out.scaler = std::move(scaler);
  return out;
}

Eigen::Index window_count(Eigen::Index length, int window, int stride, int horizon) {
  const Eigen::Index span = static_cast<Eigen::Index>(window) + horizon;
  if (length < span) return 0;
  return (length - span) / stride + 1;
}

const Eigen::MatrixXd& WindowSet::feature(const std::string& name) const {
  const auto it = std::find(feature_names.begin(), feature_names.end(), name);
  if (it == feature_names.end()) throw Error(ErrorCode::MissingColumn, "feature '" + name + "' not windowed");
  return windows[static_cast<std::size_t>(it - feature_names.begin())];
}

const WindowSet& SplitWindows::get(Split s) const {
  switch (s) {
    case Split::Train: return train;
    case Split::Val: return val;
    case Split::Test: return test;
  }
  return train;
}

SplitWindows make_windows(const StationSeries& series, const std::string& target, const SplitSpec& spec) {
  spec.validate();
  const Eigen::Index target_index = series.feature_index(target);
  auto standardized = standardize(series, spec);
  const auto& z = standardized.series.values;
  SplitWindows out;
  out.bounds = split_bounds(series.length(), spec);
  out.scaler = standardized.scaler;

  const Eigen::Index w = spec.window;
  const double uniform = 1.0 / std::sqrt(static_cast<double>(w));
  for (Split split : {Split::Train, Split::Val, Split::Test}) {
    const Eigen::Index begin = out.bounds.begin[static_cast<int>(split)];
    const Eigen::Index count = window_count(out.bounds.length(split), spec.window, spec.stride, spec.horizon);
    if (count < 1) throw Error(ErrorCode::SplitTooShort, std::string(to_string(split)) + " split has no complete window");

    WindowSet& set = split == Split::Train ? out.train : split == Split::Val ? out.val : out.test;
    set.split = split;
    set.window = spec.window;
    set.stride = spec.stride;
    set.horizon = spec.horizon;
    set.feature_names = series.feature_names;
    set.target_feature = target_index;
    set.targets.resize(count);
    set.start_indices.resize(static_cast<std::size_t>(count));
    for (Eigen::Index i = 0; i < count; ++i) {
      const Eigen::Index start = begin + i * spec.stride;
      set.start_indices[static_cast<std::size_t>(i)] = start;
      set.targets(i) = z(start + w - 1 + spec.horizon, target_index);
    }
    for (Eigen::Index f = 0; f < z.cols(); ++f) {
      Eigen::MatrixXd rows(count, w);
      for (Eigen::Index i = 0; i < count; ++i) {
        const Eigen::Index start = set.start_indices[static_cast<std::size_t>(i)];
        const Eigen::VectorXd seg = z.col(f).segment(start, w);
        const double norm = seg.norm();
        if (norm < 1e-12) {
          rows.row(i).setConstant(uniform);
          ++set.degenerate_windows;
        } else {
          rows.row(i) = (seg / norm).transpose();
        }
      }
      set.windows.push_back(std::move(rows));
    }
  }
  return out;
}

bool leak_free(std::span<const Eigen::Index> earlier, std::span<const Eigen::Index> later, int window, int horizon) {
  if (earlier.empty() || later.empty()) return true;
  const Eigen::Index last_touched = *std::max_element(earlier.begin(), earlier.end()) + window - 1 + horizon;
  const Eigen::Index first_start = *std::min_element(later.begin(), later.end());
  return last_touched < first_start;
}

bool leak_free(const SplitWindows& w) {
  const int win = w.train.window;
  const int h = w.train.horizon;
  return leak_free(w.train.start_indices, w.val.start_indices, win, h) && leak_free(w.val.start_indices, w.test.start_indices, win, h) &&
         leak_free(w.train.start_indices, w.test.start_indices, win, h);
}

ScreenResult lag1_screen(const StationSeries& series, const std::string& target, std::size_t top_k, const SplitSpec& spec) {
  const auto bounds = split_bounds(series.length(), spec);
  const Eigen::Index n = bounds.length(Split::Train);
  if (n < 3) throw Error(ErrorCode::SplitTooShort, "lag-1 screen needs at least 3 training steps");
  const Eigen::VectorXd future = series.column(target).segment(1, n - 1);
  ScreenResult result;
  if (near_zero_variance(future)) {
    result.notes.push_back("target '" + target + "' has zero variance on the training split");
    return result;
  }
  for (std::size_t f = 0; f < series.feature_names.size(); ++f) {
    const Eigen::VectorXd now = series.values.col(static_cast<Eigen::Index>(f)).head(n - 1);
    if (near_zero_variance(now)) {
      result.notes.push_back("skipped '" + series.feature_names[f] + "': zero variance");
      continue;
    }
    result.ranked.push_back({series.feature_names[f], pearson(now, future)});
  }
  std::stable_sort(result.ranked.begin(), result.ranked.end(),
                   [](const auto& a, const auto& b) { return std::abs(a.correlation) > std::abs(b.correlation); });
  if (result.ranked.size() > top_k) result.ranked.resize(top_k);
  return result;
}

long long parse_timestamp(const std::string& text) {
  if (text.empty()) throw Error(ErrorCode::ConfigError, "empty timestamp");
  const bool integral = std::all_of(text.begin() + (text[0] == '-' ? 1 : 0), text.end(), [](unsigned char c) { return std::isdigit(c); });
  if (integral) return std::stoll(text);

  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  const int got = std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &s);
  if (got < 6 || (sep != 'T' && sep != ' ')) throw Error(ErrorCode::ConfigError, "unparseable timestamp '" + text + "'");
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw Error(ErrorCode::ConfigError, "invalid date '" + text + "'");
  const long long days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return days * 1440 + h * 60 + mi;
}

StationSeries ingest_csv(const std::filesystem::path& path, const std::vector<std::string>& features, const std::string& target,
                         const std::string& station_code) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::EmptyAfterCleaning, path.string() + " is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);

  std::vector<std::string> wanted{target};
  for (const auto& f : features)
    if (f != target) wanted.push_back(f);
  std::vector<std::size_t> cols;
  for (const auto& name : wanted) {
    const auto it = std::find(header.begin() + 1, header.end(), name);
    if (header.empty() || it == header.end()) throw Error(ErrorCode::MissingColumn, "column '" + name + "' missing in " + path.string());
    cols.push_back(static_cast<std::size_t>(it - header.begin()));
  }

  StationSeries series;
  series.station_code = station_code.empty() ? path.stem().string() : station_code;
  series.feature_names = wanted;
  std::vector<double> flat;
  std::vector<double> row(wanted.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    bool complete = true;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] >= cells.size() || !parse_value(cells[cols[k]], row[k])) {
        complete = false;
        break;
      }
    }
    if (!complete) {
      ++series.dropped_rows;
      continue;
    }
    const long long t = parse_timestamp(cells[0]);
    if (!series.timestamps.empty() && t <= series.timestamps.back()) {
      throw Error(ErrorCode::NonMonotonicTime, "line " + std::to_string(line_no) + " of " + path.string());
    }
    series.timestamps.push_back(t);
    flat.insert(flat.end(), row.begin(), row.end());
  }
  if (series.timestamps.empty()) throw Error(ErrorCode::EmptyAfterCleaning, path.string() + " has no complete rows");

  const auto n = static_cast<Eigen::Index>(series.timestamps.size());
  const auto nf = static_cast<Eigen::Index>(wanted.size());
  series.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(flat.data(), n, nf);
  for (std::size_t i = 2; i < series.timestamps.size(); ++i) {
    if (series.timestamps[i] - series.timestamps[i - 1] != series.timestamps[1] - series.timestamps[0]) ++series.spacing_violations;
  }
  return series;
}

std::vector<StationInfo> load_station_metadata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  const auto header = split_csv_line(line);
  const std::vector<std::string> required{"code", "name", "lat", "lon", "elev_m", "koppen"};
  std::vector<std::size_t> idx;
  for (const auto& r : required) {
    const auto it = std::find(header.begin(), header.end(), r);
    if (it == header.end()) throw Error(ErrorCode::MissingColumn, "metadata column '" + r + "'");
    idx.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  std::vector<StationInfo> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() < header.size()) throw Error(ErrorCode::ConfigError, "short metadata row: " + line);
    out.push_back({c[idx[0]], c[idx[1]], std::stod(c[idx[2]]), std::stod(c[idx[3]]), std::stod(c[idx[4]]), c[idx[5]]});
  }
  return out;
}

}  // namespace qftk

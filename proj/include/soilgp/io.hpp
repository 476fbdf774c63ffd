#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "soilgp/domain.hpp"
#include "soilgp/error.hpp"
#include "soilgp/gp.hpp"
#include "soilgp/mapping.hpp"
#include "soilgp/mission.hpp"

namespace soilgp::io {

inline constexpr std::string_view kObservationHeader =
    "sample_id,x_m,y_m,task,value";
inline constexpr std::string_view kMapHeader = "task,x_m,y_m,mean,variance";
inline constexpr std::string_view kPlanHeader = "sample_id,x_m,y_m";
inline constexpr std::string_view kBoundaryHeader = "ring,x_m,y_m";
inline constexpr std::string_view kQueryHeader = "task,x_m,y_m";
inline constexpr std::string_view kModelFormat = "soilgp-model/1";
inline constexpr std::size_t kMaxTasks = 16;

/// Shortest decimal text that parses back to exactly `value`.
inline std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view text) {
  if (!text.empty() && text.front() == '+') {
    text.remove_prefix(1);
  }
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() ||
      text.empty()) {
    return std::nullopt;
  }
  return value;
}

inline std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary sibling file and renames it into place.
inline void write_file_atomic(const std::filesystem::path &path,
                              std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw DataError("cannot write '" + path.string() + "'");
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
      throw DataError("write failed for '" + path.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw DataError("cannot move '" + tmp.string() + "' into place: " +
                    ec.message());
  }
}

/// Non-empty lines of a text file with their 1-based line numbers.
struct Row {
  std::size_t number = 0;
  std::vector<std::string> fields;
};

inline std::vector<Row> csv_rows(std::string_view text) {
  std::vector<Row> rows;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    ++number;
    const auto line = text.substr(start, end - start);
    if (!trim(line).empty()) {
      rows.push_back({number, split(line, ',')});
    }
    start = end + 1;
  }
  return rows;
}

namespace detail {

inline void expect_header(const std::vector<Row> &rows, std::string_view header,
                          const std::string &what) {
  if (rows.empty()) {
    throw DataError("empty dataset");
  }
  const auto expected = split(header, ',');
  if (rows.front().fields != expected) {
    throw DataError(what + " row " + std::to_string(rows.front().number) +
                    ": malformed header, expected '" + std::string(header) +
                    "'");
  }
}

inline double field_number(const Row &row, std::size_t index,
                           const std::vector<std::string> &columns) {
  const auto v = parse_double(row.fields[index]);
  if (!v || !std::isfinite(*v)) {
    throw DataError("row " + std::to_string(row.number) + ", column " +
                    columns[index] + ": '" + row.fields[index] +
                    "' is not a finite number");
  }
  return *v;
}

inline void expect_width(const Row &row, std::size_t width) {
  if (row.fields.size() != width) {
    throw DataError("row " + std::to_string(row.number) + ": expected " +
                    std::to_string(width) + " fields, found " +
                    std::to_string(row.fields.size()));
  }
}

}  // namespace detail

/// Parses `sample_id,x_m,y_m,task,value` CSV. Task indices follow label
/// first appearance; observation order follows the file.
inline Dataset parse_observations_text(std::string_view text) {
  const auto rows = csv_rows(text);
  detail::expect_header(rows, kObservationHeader, "observations");
  const auto columns = split(kObservationHeader, ',');

  std::vector<std::string> labels;
  std::unordered_map<std::string, std::size_t> label_index;
  std::unordered_set<std::string> closed_samples;
  std::string current_sample;
  std::vector<Observation> obs;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto &row = rows[i];
    detail::expect_width(row, columns.size());
    const std::string &sample = row.fields[0];
    if (sample.empty()) {
      throw DataError("row " + std::to_string(row.number) +
                      ", column sample_id: empty");
    }
    if (sample != current_sample) {
      if (closed_samples.contains(sample)) {
        throw DataError("row " + std::to_string(row.number) +
                        ": rows for sample '" + sample + "' are not contiguous");
      }
      if (!current_sample.empty()) {
        closed_samples.insert(current_sample);
      }
      current_sample = sample;
    }
    const double x = detail::field_number(row, 1, columns);
    const double y = detail::field_number(row, 2, columns);
    const std::string &label = row.fields[3];
    if (label.empty()) {
      throw DataError("row " + std::to_string(row.number) +
                      ", column task: empty label");
    }
    auto it = label_index.find(label);
    if (it == label_index.end()) {
      if (labels.size() == kMaxTasks) {
        throw DataError("row " + std::to_string(row.number) +
                        ": more than 16 task labels");
      }
      it = label_index.emplace(label, labels.size()).first;
      labels.push_back(label);
    }
    const double value = detail::field_number(row, 4, columns);
    obs.push_back({sample, {x, y}, it->second, value});
  }
  if (obs.empty()) {
    throw DataError("empty dataset");
  }
  const std::size_t n = labels.size();
  return make_dataset(std::move(obs), n, std::move(labels));
}

inline Dataset parse_observations(const std::filesystem::path &path) {
  return parse_observations_text(read_file(path));
}

inline std::string write_observations(const Dataset &data) {
  std::string out(kObservationHeader);
  out += '\n';
  for (const auto &o : data.observations()) {
    out += o.sample_id + ',' + format_double(o.location.x) + ',' +
           format_double(o.location.y) + ',' + data.labels()[o.task] + ',' +
           format_double(o.value) + '\n';
  }
  return out;
}

/// 64-bit FNV-1a digest of the canonical observation serialization.
inline std::string dataset_digest(const Dataset &data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : write_observations(data)) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

// ---------------------------------------------------------------------------
// Run configuration: flat key=value, '#' comments.

struct RunConfig {
  FitConfig fit;
  double resolution = 5.0;
  bool denormalize = false;
};

inline bool parse_bool(const std::string &text, const std::string &key) {
  if (text == "true" || text == "1" || text == "yes") {
    return true;
  }
  if (text == "false" || text == "0" || text == "no") {
    return false;
  }
  throw DataError("config key '" + key + "': expected a boolean");
}

inline RunConfig parse_run_config_text(std::string_view text) {
  RunConfig cfg;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    ++number;
    std::string line(text.substr(start, end - start));
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("config line " + std::to_string(number) +
                      ": expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto number_of = [&](bool integral) {
      const auto v = parse_double(value);
      if (!v || (integral && (*v < 0 || *v != std::floor(*v)))) {
        throw DataError("config line " + std::to_string(number) + ": bad " +
                        key + " value '" + value + "'");
      }
      return *v;
    };
    if (key == "mode") {
      cfg.fit.mode = parse_kernel_mode(value);
    } else if (key == "restarts") {
      cfg.fit.restarts = static_cast<std::size_t>(number_of(true));
    } else if (key == "seed") {
      std::uint64_t seed = 0;
      const auto res =
          std::from_chars(value.data(), value.data() + value.size(), seed);
      if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        throw DataError("config line " + std::to_string(number) +
                        ": bad seed value '" + value + "'");
      }
      cfg.fit.seed = seed;
    } else if (key == "max_iters") {
      cfg.fit.max_iters = static_cast<std::size_t>(number_of(true));
    } else if (key == "tol") {
      cfg.fit.tol = number_of(false);
    } else if (key == "resolution") {
      cfg.resolution = number_of(false);
    } else if (key == "denormalize") {
      cfg.denormalize = parse_bool(value, key);
    } else if (key == "noise_floor") {
      cfg.fit.noise_floor = number_of(false);
    } else if (key == "gradient") {
      if (value == "analytic") {
        cfg.fit.gradient = GradientMethod::Analytic;
      } else if (value == "finite_difference" || value == "fd") {
        cfg.fit.gradient = GradientMethod::FiniteDifference;
      } else {
        throw DataError("config line " + std::to_string(number) +
                        ": unknown gradient method '" + value + "'");
      }
    } else {
      throw DataError("config line " + std::to_string(number) +
                      ": unknown key '" + key + "'");
    }
  }
  validate(cfg.fit);
  if (!(cfg.resolution > 0.0)) {
    throw DataError("resolution must be positive");
  }
  return cfg;
}

inline RunConfig parse_run_config(const std::filesystem::path &path) {
  return parse_run_config_text(read_file(path));
}

// ---------------------------------------------------------------------------
// Model files.

inline std::string join_numbers(const double *begin, std::size_t count) {
  std::string out;
  for (std::size_t i = 0; i < count; ++i) {
    if (i > 0) {
      out += ' ';
    }
    out += format_double(begin[i]);
  }
  return out;
}

inline std::string join_labels(const std::vector<std::string> &labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out += (i > 0 ? "," : "") + labels[i];
  }
  return out;
}

/// `raw_training` is the un-normalized dataset the model was fit on; its
/// digest is recorded so the model refuses to load against other data.
inline std::string write_model(const FittedModel &model,
                               const Dataset &raw_training) {
  std::string out;
  out += "format " + std::string(kModelFormat) + '\n';
  out += "n_tasks " + std::to_string(model.n_tasks()) + '\n';
  out += "labels " + join_labels(model.training.labels()) + '\n';
  out += "mode " + to_string(model.mode()) + '\n';
  out += "noise_floor " + format_double(model.noise_floor) + '\n';
  out += "theta " + join_numbers(model.params.theta().data(),
                                 static_cast<std::size_t>(
                                     model.params.theta().size())) +
         '\n';
  out += "norm_mean " +
         join_numbers(model.stats.mean.data(), model.stats.mean.size()) + '\n';
  out += "norm_std " +
         join_numbers(model.stats.stddev.data(), model.stats.stddev.size()) +
         '\n';
  out += "lml " + format_double(model.lml) + '\n';
  out += "observations " + std::to_string(raw_training.size()) + '\n';
  out += "training_digest fnv1a64:" + dataset_digest(raw_training) + '\n';
  return out;
}

struct ModelFile {
  std::size_t n_tasks = 0;
  std::vector<std::string> labels;
  KernelMode mode = KernelMode::Convolved;
  double noise_floor = kDefaultNoiseFloor;
  std::vector<double> theta;
  NormStats stats;
  double lml = 0.0;
  std::size_t observations = 0;
  std::string digest;
};

inline ModelFile parse_model_text(std::string_view text) {
  std::map<std::string, std::string> fields;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    const std::string line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') {
      continue;
    }
    const auto sp = line.find(' ');
    fields[line.substr(0, sp)] =
        sp == std::string::npos ? std::string() : trim(line.substr(sp + 1));
  }
  const auto get = [&fields](const std::string &key) -> const std::string & {
    const auto it = fields.find(key);
    if (it == fields.end()) {
      throw DataError("model file: missing '" + key + "'");
    }
    return it->second;
  };
  const auto numbers = [&get](const std::string &key) {
    std::vector<double> out;
    std::istringstream ss(get(key));
    std::string tok;
    while (ss >> tok) {
      const auto v = parse_double(tok);
      if (!v) {
        throw DataError("model file: bad number '" + tok + "' in " + key);
      }
      out.push_back(*v);
    }
    return out;
  };
  if (get("format") != kModelFormat) {
    throw DataError("model file: unsupported format '" + get("format") + "'");
  }
  ModelFile m;
  m.n_tasks = static_cast<std::size_t>(std::stoul(get("n_tasks")));
  m.labels = split(get("labels"), ',');
  m.mode = parse_kernel_mode(get("mode"));
  m.noise_floor = numbers("noise_floor").at(0);
  m.theta = numbers("theta");
  m.stats.mean = numbers("norm_mean");
  m.stats.stddev = numbers("norm_std");
  m.lml = numbers("lml").at(0);
  m.observations = static_cast<std::size_t>(std::stoul(get("observations")));
  m.digest = get("training_digest");
  if (m.labels.size() != m.n_tasks || m.stats.mean.size() != m.n_tasks ||
      m.stats.stddev.size() != m.n_tasks ||
      m.theta.size() != HyperParams::size(m.n_tasks, m.mode)) {
    throw DataError("model file: inconsistent dimensions");
  }
  return m;
}

/// Rebuilds the fitted model from its file and the raw training data; throws
/// when the data's digest does not match the one recorded at fit time.
inline FittedModel load_model(const ModelFile &file,
                              const Dataset &raw_training) {
  if ("fnv1a64:" + dataset_digest(raw_training) != file.digest) {
    throw DataError("training data digest does not match the model file");
  }
  if (raw_training.labels() != file.labels) {
    throw DataError("training data labels do not match the model file");
  }
  const HyperParams params(file.n_tasks, file.mode,
                           soilgp::detail::to_vector(file.theta));
  FittedModel model =
      condition(params, apply_normalization(raw_training, file.stats),
                file.stats, file.noise_floor);
  return model;
}

// ---------------------------------------------------------------------------
// Map export.

inline std::string write_map_csv(const std::vector<PropertyMap> &maps,
                                 const std::vector<std::string> &labels) {
  std::string out(kMapHeader);
  out += '\n';
  for (const auto &map : maps) {
    const auto centers = map.grid.cell_centers();
    for (std::size_t i = 0; i < centers.size(); ++i) {
      out += labels.at(map.task) + ',' + format_double(centers[i].x) + ',' +
             format_double(centers[i].y) + ',' + format_double(map.mean[i]) +
             ',' + format_double(map.variance[i]) + '\n';
    }
  }
  return out;
}

inline constexpr double kNoData = -9999.0;

/// ESRI ASCII grid; rows are written north to south.
inline std::string write_esri_ascii(const GridSpec &grid,
                                    const std::vector<double> &values) {
  if (values.size() != grid.cell_count()) {
    throw DataError("grid value count does not match cell count");
  }
  std::string out;
  out += "ncols " + std::to_string(grid.ncols()) + '\n';
  out += "nrows " + std::to_string(grid.nrows()) + '\n';
  out += "xllcorner " + format_double(grid.bounds().min_x) + '\n';
  out += "yllcorner " + format_double(grid.bounds().min_y) + '\n';
  out += "cellsize " + format_double(grid.resolution()) + '\n';
  out += "NODATA_value " + format_double(kNoData) + '\n';
  for (std::size_t r = grid.nrows(); r-- > 0;) {
    for (std::size_t c = 0; c < grid.ncols(); ++c) {
      if (c > 0) {
        out += ' ';
      }
      const double v = values[r * grid.ncols() + c];
      out += format_double(std::isfinite(v) ? v : kNoData);
    }
    out += '\n';
  }
  return out;
}

struct AsciiGrid {
  std::size_t ncols = 0;
  std::size_t nrows = 0;
  double xllcorner = 0.0;
  double yllcorner = 0.0;
  double cellsize = 0.0;
  double nodata = kNoData;
  // Row-major from the north row, as stored in the file.
  std::vector<double> values;
};

inline AsciiGrid parse_esri_ascii(std::string_view text) {
  std::istringstream ss{std::string(text)};
  AsciiGrid g;
  const char *keys[] = {"ncols", "nrows", "xllcorner", "yllcorner", "cellsize",
                        "NODATA_value"};
  double header[6];
  for (int i = 0; i < 6; ++i) {
    std::string key;
    std::string value;
    ss >> key >> value;
    const auto v = parse_double(value);
    if (key != keys[i] || !v) {
      throw DataError("ascii grid: bad header line " + std::to_string(i + 1));
    }
    header[i] = *v;
  }
  g.ncols = static_cast<std::size_t>(header[0]);
  g.nrows = static_cast<std::size_t>(header[1]);
  g.xllcorner = header[2];
  g.yllcorner = header[3];
  g.cellsize = header[4];
  g.nodata = header[5];
  std::string tok;
  while (ss >> tok) {
    const auto v = parse_double(tok);
    if (!v) {
      throw DataError("ascii grid: bad value '" + tok + "'");
    }
    g.values.push_back(*v);
  }
  if (g.values.size() != g.ncols * g.nrows) {
    throw DataError("ascii grid: value count does not match header");
  }
  return g;
}

/// Reads long-format map CSV as ground truth (mean column), mapping labels
/// onto the task indices of `labels`.
inline TruthSet parse_truth_text(std::string_view text,
                                 const std::vector<std::string> &labels) {
  const auto rows = csv_rows(text);
  detail::expect_header(rows, kMapHeader, "truth");
  const auto columns = split(kMapHeader, ',');
  TruthSet truth;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto &row = rows[i];
    detail::expect_width(row, columns.size());
    const auto it = std::find(labels.begin(), labels.end(), row.fields[0]);
    if (it == labels.end()) {
      throw DataError("row " + std::to_string(row.number) +
                      ", column task: unknown label '" + row.fields[0] + "'");
    }
    truth.points.push_back(
        {static_cast<std::size_t>(it - labels.begin()),
         {detail::field_number(row, 1, columns),
          detail::field_number(row, 2, columns)}});
    truth.values.push_back(detail::field_number(row, 3, columns));
  }
  return truth;
}

inline std::string write_truth(const TruthSet &truth,
                               const std::vector<std::string> &labels) {
  std::string out(kMapHeader);
  out += '\n';
  for (std::size_t i = 0; i < truth.points.size(); ++i) {
    const auto &p = truth.points[i];
    out += labels.at(p.task) + ',' + format_double(p.location.x) + ',' +
           format_double(p.location.y) + ',' + format_double(truth.values[i]) +
           ",0\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Queries, predictions, plans, boundaries, curves.

inline std::vector<TaskPoint> parse_queries_text(
    std::string_view text, const std::vector<std::string> &labels) {
  const auto rows = csv_rows(text);
  detail::expect_header(rows, kQueryHeader, "queries");
  const auto columns = split(kQueryHeader, ',');
  std::vector<TaskPoint> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto &row = rows[i];
    detail::expect_width(row, columns.size());
    const auto it = std::find(labels.begin(), labels.end(), row.fields[0]);
    if (it == labels.end()) {
      throw DataError("row " + std::to_string(row.number) +
                      ", column task: unknown label '" + row.fields[0] + "'");
    }
    out.push_back({static_cast<std::size_t>(it - labels.begin()),
                   {detail::field_number(row, 1, columns),
                    detail::field_number(row, 2, columns)}});
  }
  return out;
}

inline std::string write_predictions(std::span<const TaskPoint> queries,
                                     const PredictionResult &pred,
                                     const std::vector<std::string> &labels) {
  std::string out(kMapHeader);
  out += '\n';
  for (std::size_t i = 0; i < queries.size(); ++i) {
    out += labels.at(queries[i].task) + ',' +
           format_double(queries[i].location.x) + ',' +
           format_double(queries[i].location.y) + ',' +
           format_double(pred.mean[i]) + ',' +
           format_double(pred.variance[i]) + '\n';
  }
  return out;
}

inline std::string write_plan(const SamplePlan &plan) {
  std::string out(kPlanHeader);
  out += '\n';
  for (std::size_t i = 0; i < plan.points.size(); ++i) {
    out += soilgp::detail::sample_name(i, plan.points.size()) + ',' +
           format_double(plan.points[i].x) + ',' +
           format_double(plan.points[i].y) + '\n';
  }
  return out;
}

inline std::vector<Location> parse_plan_text(std::string_view text) {
  const auto rows = csv_rows(text);
  detail::expect_header(rows, kPlanHeader, "plan");
  const auto columns = split(kPlanHeader, ',');
  std::vector<Location> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    detail::expect_width(rows[i], columns.size());
    out.push_back({detail::field_number(rows[i], 1, columns),
                   detail::field_number(rows[i], 2, columns)});
  }
  return out;
}

/// Ring 0 is the field boundary; every other ring id is an exclusion zone,
/// in order of first appearance.
inline FieldBoundary parse_boundary_text(std::string_view text) {
  const auto rows = csv_rows(text);
  detail::expect_header(rows, kBoundaryHeader, "boundary");
  const auto columns = split(kBoundaryHeader, ',');
  FieldBoundary boundary;
  std::vector<std::string> ring_ids;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto &row = rows[i];
    detail::expect_width(row, columns.size());
    const Location p{detail::field_number(row, 1, columns),
                     detail::field_number(row, 2, columns)};
    if (row.fields[0] == "0") {
      boundary.outer.push_back(p);
      continue;
    }
    auto it = std::find(ring_ids.begin(), ring_ids.end(), row.fields[0]);
    if (it == ring_ids.end()) {
      ring_ids.push_back(row.fields[0]);
      boundary.exclusions.emplace_back();
      it = ring_ids.end() - 1;
    }
    boundary.exclusions[static_cast<std::size_t>(it - ring_ids.begin())]
        .push_back(p);
  }
  return boundary;
}

inline std::string method_name(EvalMethod m) {
  return m == EvalMethod::MTGP ? "mtgp" : "stgp";
}

inline std::string write_rmse_curves(const std::vector<RmseCurve> &curves,
                                     const std::vector<std::string> &labels) {
  std::string out = "method,task,k,rmse\n";
  for (const auto &curve : curves) {
    for (std::size_t t = 0; t < curve.rmse.size(); ++t) {
      for (std::size_t s = 0; s < curve.k.size(); ++s) {
        out += method_name(curve.method) + ',' + labels.at(t) + ',' +
               std::to_string(curve.k[s]) + ',' +
               format_double(curve.rmse[t][s]) + '\n';
      }
    }
  }
  return out;
}

inline std::string write_correlation_matrix(
    const Eigen::MatrixXd &r, const std::vector<std::string> &labels) {
  std::string out = "task";
  for (const auto &l : labels) {
    out += ',' + l;
  }
  out += '\n';
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    out += labels.at(static_cast<std::size_t>(i));
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
      out += ',' + format_double(r(i, j));
    }
    out += '\n';
  }
  return out;
}

inline std::string write_trajectory(const CorrelationTrajectory &traj,
                                    const std::vector<std::string> &labels) {
  std::string out = "task_i,task_j,k,r\n";
  for (std::size_t p = 0; p < traj.pairs.size(); ++p) {
    for (std::size_t s = 0; s < traj.k.size(); ++s) {
      out += labels.at(traj.pairs[p].first) + ',' +
             labels.at(traj.pairs[p].second) + ',' +
             std::to_string(traj.k[s]) + ',' + format_double(traj.r[p][s]) +
             '\n';
    }
  }
  return out;
}

}  // namespace soilgp::io

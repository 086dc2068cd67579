#include "gdp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace gdp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(b, e - b + 1);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
      cur += ch;
    } else if (ch == ',' && !quoted) {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) {
    return false;
  }
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') {
    ++first;
  }
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open '" + path + "'");
  }
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write '" + path + "'");
  }
  return out;
}

// Header and data rows of a CSV file, blank lines skipped. Row numbers are 1-based file lines.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

CsvTable read_csv(const std::string& path) {
  auto in = open_in(path);
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) {
      continue;
    }
    auto cells = split_csv(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw std::runtime_error(path + ": line " + std::to_string(lineno) + " has " +
                               std::to_string(cells.size()) + " cells, header has " +
                               std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(lineno);
  }
  if (t.header.empty()) {
    throw std::runtime_error(path + ": missing header row");
  }
  return t;
}

} // namespace

std::string format_double(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Dataset load_dataset(const std::string& path, const std::optional<std::string>& label_column,
                     const std::optional<std::string>& positive_label) {
  const CsvTable t = read_csv(path);
  std::optional<std::size_t> label_idx;
  if (label_column) {
    const auto it = std::find(t.header.begin(), t.header.end(), *label_column);
    if (it == t.header.end()) {
      throw std::runtime_error(path + ": no column named '" + *label_column + "'");
    }
    label_idx = static_cast<std::size_t>(it - t.header.begin());
  } else if (positive_label) {
    throw std::invalid_argument("load_dataset: positive label given without a label column");
  }

  Dataset data;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c != label_idx) {
      data.feature_names.push_back(t.header[c]);
    }
  }
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  data.features.resize(n, static_cast<Eigen::Index>(data.feature_names.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    Eigen::Index col = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == label_idx) {
        data.labels.push_back(row[c]);
        continue;
      }
      double v = 0.0;
      if (!parse_double(row[c], v) || !std::isfinite(v)) {
        throw std::runtime_error(path + ": line " +
                                 std::to_string(t.line_numbers[static_cast<std::size_t>(i)]) +
                                 ", column '" + t.header[c] + "': not a finite number: '" +
                                 row[c] + "'");
      }
      data.features(i, col++) = v;
    }
  }

  if (positive_label) {
    const std::set<std::string> distinct(data.labels.begin(), data.labels.end());
    if (!distinct.empty() && distinct.count(*positive_label) == 0) {
      throw std::runtime_error(path + ": unknown label value '" + *positive_label + "'");
    }
    if (distinct.size() > 2) {
      throw std::runtime_error(path + ": label column has " + std::to_string(distinct.size()) +
                               " distinct values; a binary label needs at most two");
    }
    std::vector<int> bin;
    bin.reserve(data.labels.size());
    for (const auto& l : data.labels) {
      bin.push_back(l == *positive_label ? 1 : 0);
    }
    data.binary_labels = std::move(bin);
  }
  return data;
}

void write_dataset(const std::string& path, const Dataset& data) {
  auto out = open_out(path);
  for (std::size_t c = 0; c < data.feature_names.size(); ++c) {
    out << (c ? "," : "") << data.feature_names[c];
  }
  const bool labelled = !data.labels.empty();
  out << (labelled ? ",label" : "") << '\n';
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index c = 0; c < data.dim(); ++c) {
      out << (c ? "," : "") << format_double(data.features(i, c));
    }
    if (labelled) {
      out << ',' << data.labels[static_cast<std::size_t>(i)];
    }
    out << '\n';
  }
}

nlohmann::json window_to_json(const Window& window) {
  if (const auto* box = std::get_if<BoxWindow>(&window)) {
    return {{"type", "box"}, {"side", box->side}, {"dim", box->dim}};
  }
  const auto& ball = std::get<BallWindow>(window);
  return {{"type", "ball"}, {"radius", ball.radius}, {"dim", ball.dim}};
}

Window window_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "box") {
    return BoxWindow{j.at("side").get<double>(), j.at("dim").get<int>()};
  }
  if (type == "ball") {
    return BallWindow{j.at("radius").get<double>(), j.at("dim").get<int>()};
  }
  throw std::runtime_error("unknown window type '" + type + "'");
}

void write_pattern(const std::string& prefix, const PointPattern& pattern) {
  auto out = open_out(prefix + ".csv");
  const int d = pattern.dim();
  for (int c = 0; c < d; ++c) {
    out << (c ? "," : "") << 'x' << (c + 1);
  }
  out << '\n';
  for (Eigen::Index i = 0; i < pattern.size(); ++i) {
    for (int c = 0; c < d; ++c) {
      out << (c ? "," : "") << format_double(pattern.points(i, c));
    }
    out << '\n';
  }
  write_json(prefix + ".json",
             {{"window", window_to_json(pattern.window)}, {"count", pattern.size()}});
}

PointPattern read_pattern(const std::string& prefix) {
  const auto meta = read_json(prefix + ".json");
  PointPattern p;
  p.window = window_from_json(meta.at("window"));
  const Dataset data = load_dataset(prefix + ".csv");
  if (data.dim() != p.dim() && data.size() > 0) {
    throw std::runtime_error(prefix + ".csv: column count does not match the window dimension");
  }
  p.points = data.features;
  if (p.points.cols() != p.dim()) {
    p.points.resize(0, p.dim());
  }
  return p;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  const auto m = n ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != m) {
      throw std::runtime_error("matrix rows differ in length");
    }
    for (Eigen::Index c = 0; c < m; ++c) {
      out(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
  }
  return out;
}

nlohmann::json to_json(const EstimateResult& r) {
  return {{"sigma_hat", matrix_to_json(r.sigma_hat)},
          {"N", r.N},
          {"n", r.n},
          {"r_used", r.r_used},
          {"R_used", r.R_used},
          {"pair_count", r.pair_count}};
}

nlohmann::json to_json(const DetectionResult& r) {
  return {{"statistic", r.statistic}, {"threshold", r.threshold}, {"reject", r.reject},
          {"t", r.t},                 {"rate", r.rate}};
}

nlohmann::json to_json(const SpikeEstimate& r) {
  return {{"u_hat", std::vector<double>(r.u_hat.data(), r.u_hat.data() + r.u_hat.size())},
          {"lambda_hat", r.lambda_hat},
          {"gap", r.gap}};
}

nlohmann::json to_json(const NullCalibration& r) {
  return {{"statistics", r.statistics}, {"quantile", r.quantile}, {"delta", r.delta},
          {"R", r.R},                   {"side", r.side},         {"dim", r.dim}};
}

nlohmann::json make_envelope(const std::string& command, const nlohmann::json& config,
                             const nlohmann::json& payload, double wall_seconds) {
  return {{"schema_version", kSchemaVersion},
          {"tool", "gdp"},
          {"version", kToolVersion},
          {"command", command},
          {"config", config},
          {"wall_clock_seconds", wall_seconds},
          {"payload", payload}};
}

void write_json(const std::string& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_roc_csv(const std::string& path, const RocCurve& roc) {
  auto out = open_out(path);
  out << "threshold,fpr,tpr\n";
  for (std::size_t i = 0; i < roc.fpr.size(); ++i) {
    out << format_double(roc.thresholds[i]) << ',' << format_double(roc.fpr[i]) << ','
        << format_double(roc.tpr[i]) << '\n';
  }
}

void write_embedding_csv(const std::string& path, const ProjectionResult& proj,
                         const Dataset& data) {
  auto out = open_out(path);
  out << "row";
  for (Eigen::Index c = 0; c < proj.coords.cols(); ++c) {
    out << ",coord" << (c + 1);
  }
  const bool labelled = !data.labels.empty();
  out << (labelled ? ",label" : "") << '\n';
  for (Eigen::Index i = 0; i < proj.coords.rows(); ++i) {
    out << i;
    for (Eigen::Index c = 0; c < proj.coords.cols(); ++c) {
      out << ',' << format_double(proj.coords(i, c));
    }
    if (labelled) {
      out << ',' << data.labels[static_cast<std::size_t>(i)];
    }
    out << '\n';
  }
}

void write_scree_csv(const std::string& path, const Eigen::VectorXd& eigvals) {
  auto out = open_out(path);
  out << "rank,eigenvalue\n";
  for (const auto& [rank, value] : scree(eigvals)) {
    out << rank << ',' << format_double(value) << '\n';
  }
}

} // namespace gdp

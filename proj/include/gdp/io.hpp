#pragma once

#include "gdp/dimred.hpp"
#include "gdp/estimator.hpp"
#include "gdp/sampler.hpp"
#include "gdp/spiked.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace gdp {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// CSV with a header row. Without `label_column` every column is a feature.
/// With `positive_label`, rows carrying it get binary label 1 and the others 0;
/// the column must then hold at most two distinct values.
Dataset load_dataset(const std::string& path, const std::optional<std::string>& label_column = {},
                     const std::optional<std::string>& positive_label = {});

/// Writes features (and the raw label column "label" when present).
void write_dataset(const std::string& path, const Dataset& data);

/// `<prefix>.csv` holds x1..xd, `<prefix>.json` the window.
void write_pattern(const std::string& prefix, const PointPattern& pattern);
PointPattern read_pattern(const std::string& prefix);

nlohmann::json window_to_json(const Window& window);
Window window_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EstimateResult& r);
nlohmann::json to_json(const DetectionResult& r);
nlohmann::json to_json(const SpikeEstimate& r);
nlohmann::json to_json(const NullCalibration& r);

/// {schema_version, tool, version, command, config, wall_clock_seconds, payload}.
nlohmann::json make_envelope(const std::string& command, const nlohmann::json& config,
                             const nlohmann::json& payload, double wall_seconds);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

void write_roc_csv(const std::string& path, const RocCurve& roc);
void write_embedding_csv(const std::string& path, const ProjectionResult& proj,
                         const Dataset& data);
void write_scree_csv(const std::string& path, const Eigen::VectorXd& eigvals);

} // namespace gdp

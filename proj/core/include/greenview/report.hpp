#pragma once

#include <nlohmann/json.hpp>
#include <span>
#include <string>

#include "greenview/metrics.hpp"

namespace greenview {

struct TableRow {
  std::string model;
  EvaluationReport report;
};

/// Renders a metric with three significant digits, or four when three would
/// not reproduce the value exactly. Integer digits are never dropped.
std::string format_metric(double value);

/// Plain-text comparison table. Column order: Model, Mean IoU, MAE,
/// Pearson's r, error bounds, running time. Missing values print as "NA".
std::string render_table(std::span<const TableRow> rows);

nlohmann::json to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& json);

}  // namespace greenview

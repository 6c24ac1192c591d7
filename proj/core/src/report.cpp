#include "greenview/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <vector>

#include "greenview/error.hpp"

namespace greenview {

std::string format_metric(double value) {
  if (!std::isfinite(value)) return "NA";
  if (value == 0.0) return "0.00";
  std::string text;
  for (int significant : {3, 4}) {
    const int exponent = static_cast<int>(std::floor(std::log10(std::abs(value))));
    const int decimals = std::max(0, significant - 1 - exponent);
    std::array<char, 64> buf{};
    std::snprintf(buf.data(), buf.size(), "%.*f", decimals, value);
    text = buf.data();
    if (std::strtod(text.c_str(), nullptr) == value) break;
  }
  if (text.front() == '-' && std::strtod(text.c_str(), nullptr) == 0.0) text.erase(0, 1);
  return text;
}

namespace {

std::string optional_metric(const std::optional<double>& v) {
  return v ? format_metric(*v) : std::string("NA");
}

}  // namespace

std::string render_table(std::span<const TableRow> rows) {
  const std::vector<std::string> headers = {
      "Model",
      "Mean IoU (%)",
      "Mean Absolute Error (%)",
      "Pearson's Correlation Coefficient",
      "5%-95% of GVI Estimation Error (%)",
      "Running Time for 10000 images (seconds)",
  };
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : rows) {
    const auto& r = row.report;
    cells.push_back({
        row.model,
        optional_metric(r.mean_iou),
        format_metric(r.mae),
        optional_metric(r.pearson_r),
        format_metric(r.err_lo) + ", " + format_metric(r.err_hi),
        optional_metric(r.running_time_s_per_10k),
    });
  }

  std::vector<std::size_t> widths(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) {
    widths[c] = headers[c].size();
    for (const auto& line : cells) widths[c] = std::max(widths[c], line[c].size());
  }

  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c > 0) out << " | ";
      const std::string pad(widths[c] - line[c].size(), ' ');
      // Model names align left, numbers right.
      if (c == 0)
        out << line[c] << pad;
      else
        out << pad << line[c];
    }
    out << '\n';
  };
  emit(headers);
  for (std::size_t c = 0; c < widths.size(); ++c) {
    if (c > 0) out << "-+-";
    out << std::string(widths[c], '-');
  }
  out << '\n';
  for (const auto& line : cells) emit(line);
  return out.str();
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

nlohmann::json to_json(const EvaluationReport& report) {
  nlohmann::json j;
  j["n"] = report.n;
  j["split"] = report.split;
  j["mean_iou"] = optional_json(report.mean_iou);
  j["iou_mode"] = report.iou_mode;
  j["mae"] = report.mae;
  j["pearson_r"] = optional_json(report.pearson_r);
  j["error_bounds"] = {
      {"lo_quantile", report.quantile_lo},
      {"hi_quantile", report.quantile_hi},
      {"lo", report.err_lo},
      {"hi", report.err_hi},
  };
  j["running_time_s_per_10k"] = optional_json(report.running_time_s_per_10k);
  return j;
}

EvaluationReport report_from_json(const nlohmann::json& j) {
  try {
    EvaluationReport r;
    r.n = j.at("n").get<std::size_t>();
    r.split = j.at("split").get<std::string>();
    r.mean_iou = optional_from(j, "mean_iou");
    r.iou_mode = j.at("iou_mode").get<std::string>();
    r.mae = j.at("mae").get<double>();
    r.pearson_r = optional_from(j, "pearson_r");
    const auto& b = j.at("error_bounds");
    r.quantile_lo = b.at("lo_quantile").get<double>();
    r.quantile_hi = b.at("hi_quantile").get<double>();
    r.err_lo = b.at("lo").get<double>();
    r.err_hi = b.at("hi").get<double>();
    r.running_time_s_per_10k = optional_from(j, "running_time_s_per_10k");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed report JSON: ") + e.what());
  }
}

}  // namespace greenview

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

// gnuplot scripts written next to the CSVs they read. The artifact never
// runs them.
namespace udc::cli {

struct Series {
  std::string y_column;
  std::string title;
  // Row filters as {column, value}; rows whose column text differs are skipped.
  std::vector<std::pair<std::string, std::string>> filters;
  std::string style = "linespoints";
};

struct PlotSpec {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::string x_column;
  std::vector<Series> series;
  std::vector<std::string> preamble;  // extra set commands
};

// Header row of a CSV, skipping leading "#" lines.
std::vector<std::string> csv_columns(const std::filesystem::path& csv);

// Throws ValidationError naming any column the CSV lacks.
void emit_plot(const std::filesystem::path& csv, const std::filesystem::path& script,
               const PlotSpec& spec);

// Event timeline: node status trace from metrics.csv with event labels from events.csv.
void emit_timeline(const std::filesystem::path& metrics_csv, const std::filesystem::path& events_csv,
                   const std::filesystem::path& script, const std::vector<std::string>& nodes);

// ROC points, one labeled point per row.
void emit_roc(const std::filesystem::path& csv, const std::filesystem::path& script,
              const std::string& fpr_column, const std::string& tpr_column,
              const std::string& label_column);

}  // namespace udc::cli

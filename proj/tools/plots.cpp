#include "plots.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "udcsim/error.hpp"

namespace udc::cli {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_header(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::size_t column_index(const std::vector<std::string>& cols, const std::string& name,
                         const fs::path& csv) {
  auto it = std::find(cols.begin(), cols.end(), name);
  if (it == cols.end()) {
    throw ValidationError(fmt::format("{}: missing column '{}'", csv.filename().string(), name));
  }
  return static_cast<std::size_t>(it - cols.begin()) + 1;  // gnuplot columns are 1-based
}

void header(std::ofstream& out, const std::string& title) {
  out << "# gnuplot script; run from this directory.\n"
      << "set datafile separator ','\n"
      << "set datafile commentschars '#'\n"
      << "set key outside right\n"
      << "set grid\n"
      << fmt::format("set title \"{}\"\n", title);
}

std::ofstream open_script(const fs::path& script) {
  std::ofstream out(script, std::ios::binary);
  if (!out) throw Error("cannot write " + script.string());
  return out;
}

}  // namespace

std::vector<std::string> csv_columns(const fs::path& csv) {
  std::ifstream in(csv, std::ios::binary);
  if (!in) throw Error("cannot read " + csv.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    return split_header(line);
  }
  return {};
}

void emit_plot(const fs::path& csv, const fs::path& script, const PlotSpec& spec) {
  const auto cols = csv_columns(csv);
  const std::size_t x = column_index(cols, spec.x_column, csv);
  std::vector<std::string> clauses;
  for (const auto& s : spec.series) {
    const std::size_t y = column_index(cols, s.y_column, csv);
    std::string using_y = fmt::format("{}", y);
    if (!s.filters.empty()) {
      std::string cond;
      for (const auto& [col, value] : s.filters) {
        if (!cond.empty()) cond += " && ";
        cond += fmt::format("strcol({}) eq \"{}\"", column_index(cols, col, csv), value);
      }
      using_y = fmt::format("({} ? column({}) : 1/0)", cond, y);
    }
    clauses.push_back(fmt::format("'{}' using {}:{} with {} title \"{}\"", csv.filename().string(), x,
                                  using_y, s.style, s.title));
  }

  auto out = open_script(script);
  header(out, spec.title);
  out << fmt::format("set xlabel \"{}\"\nset ylabel \"{}\"\n", spec.xlabel, spec.ylabel);
  for (const auto& p : spec.preamble) out << p << '\n';
  out << "plot ";
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    out << (i ? ", \\\n     " : "") << clauses[i];
  }
  out << '\n';
}

void emit_timeline(const fs::path& metrics_csv, const fs::path& events_csv, const fs::path& script,
                   const std::vector<std::string>& nodes) {
  const auto mcols = csv_columns(metrics_csv);
  const std::size_t mt = column_index(mcols, "time", metrics_csv);
  const std::size_t mm = column_index(mcols, "metric", metrics_csv);
  const std::size_t mv = column_index(mcols, "value", metrics_csv);
  const std::size_t mg = column_index(mcols, "tags", metrics_csv);
  const auto ecols = csv_columns(events_csv);
  const std::size_t et = column_index(ecols, "time", events_csv);
  const std::size_t es = column_index(ecols, "subject", events_csv);
  const std::size_t ee = column_index(ecols, "event", events_csv);

  auto out = open_script(script);
  header(out, "node status and storage events");
  out << "set xlabel \"time (s)\"\n"
      << "set ylabel \"status (0 live, 1 blocked, 2 removed)\"\n"
      << "set yrange [-0.5:3]\n"
      << "set ytics (\"live\" 0, \"blocked\" 1, \"removed\" 2)\n"
      << "plot ";
  std::size_t i = 0;
  for (const auto& n : nodes) {
    out << (i++ ? ", \\\n     " : "")
        << fmt::format("'{}' using {}:(strcol({}) eq \"node_status\" && strcol({}) eq \"node={}\" ? "
                       "column({}) : 1/0) with steps title \"{}\"",
                       metrics_csv.filename().string(), mt, mm, mg, n, mv, n);
  }
  out << (i ? ", \\\n     " : "")
      << fmt::format("'{}' using {}:(2.5):(sprintf(\"%s %s\", strcol({}), strcol({}))) "
                     "with labels rotate by 90 left font \",7\" notitle",
                     events_csv.filename().string(), et, es, ee)
      << '\n';
}

void emit_roc(const fs::path& csv, const fs::path& script, const std::string& fpr_column,
              const std::string& tpr_column, const std::string& label_column) {
  const auto cols = csv_columns(csv);
  const std::size_t f = column_index(cols, fpr_column, csv);
  const std::size_t t = column_index(cols, tpr_column, csv);
  const std::size_t l = column_index(cols, label_column, csv);
  auto out = open_script(script);
  header(out, "detector operating points");
  out << "set xlabel \"false positive rate\"\nset ylabel \"true positive rate\"\n"
      << "set xrange [0:1]\nset yrange [0:1.05]\n"
      << fmt::format("plot '{0}' using {1}:{2} with points pt 7 title \"per level\", \\\n"
                     "     '{0}' using {1}:{2}:(sprintf(\"%s dB\", strcol({3}))) with labels offset 2,0 notitle\n",
                     csv.filename().string(), f, t, l);
}

}  // namespace udc::cli

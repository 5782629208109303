#pragma once

// Result-table emission for campaign reports: the per-matrix benchmark tables
// (fig1/fig2), the N-sweep tables (fig3..fig6), and the generic campaign
// table. Files are written atomically (write to a temp name, then rename) and
// nothing is written until every requested table has been assembled, so error
// paths leave no partial output.

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "spdop/montecarlo.hpp"
#include "spdop/textfmt.hpp"

namespace spdop {

inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    os.flush();
    if (!os) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("failed while writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ec2;
    fs::remove(tmp, ec2);
    throw std::runtime_error("failed to rename '" + tmp.string() + "' to '" + path.string() +
                             "': " + ec.message());
  }
}

namespace fig_detail {

// A cell lookup that collects the (matrix, n) pairs it failed to resolve so
// the caller can report them all at once.
struct CellLookup {
  const CampaignReport& report;
  std::vector<std::string> missing;

  const CampaignCell* get(const std::string& matrix, std::size_t n, EstimatorKind kind) {
    const CampaignCell* cell = report.find(matrix, n, kind);
    if (!cell || cell->realization_count < 2) {
      missing.push_back("(" + matrix + ", N=" + std::to_string(n) + ", " +
                        estimator_label(kind) + ")");
      return nullptr;
    }
    return cell;
  }

  void check() const {
    if (missing.empty()) return;
    std::string what = "report is missing grid cells:";
    for (const std::string& m : missing) what += " " + m;
    throw std::runtime_error(what);
  }
};

struct Table {
  std::string name;  // "fig1", ...
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;  // formatted values

  std::string to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
    out += '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
      out += '\n';
    }
    return out;
  }

  std::string to_json() const {
    nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
      nlohmann::ordered_json obj;
      for (std::size_t i = 0; i < columns.size(); ++i) obj[columns[i]] = row[i];
      rows_json.push_back(std::move(obj));
    }
    nlohmann::ordered_json doc;
    doc["table"] = name;
    doc["rows"] = std::move(rows_json);
    return doc.dump(2) + "\n";
  }
};

inline std::string fmt(double v) { return format_sig10(v); }

// fig1: estimator means per matrix; fig2: standard deviations per matrix
inline std::pair<Table, Table> per_matrix_tables(const CampaignReport& report, std::size_t n) {
  CellLookup lookup{report, {}};
  Table means{"fig1", {"matrix_id", "true_p2", "mean_A", "mean_I", "mean_OSCI"}, {}};
  Table sds{"fig2", {"matrix_id", "sd_A", "sd_I", "sd_OSCI"}, {}};
  for (std::size_t mi = 0; mi < report.spec.matrices.size(); ++mi) {
    const std::string& name = report.spec.matrices[mi].name;
    const CampaignCell* a = lookup.get(name, n, EstimatorKind::FourImage);
    const CampaignCell* i = lookup.get(name, n, EstimatorKind::CorrelatedPair);
    const CampaignCell* o = lookup.get(name, n, EstimatorKind::Osci);
    if (!a || !i || !o) continue;
    const std::string id = std::to_string(mi + 1);
    means.rows.push_back({id, fmt(a->true_p2), fmt(a->mean_p2), fmt(i->mean_p2), fmt(o->mean_p2)});
    sds.rows.push_back(
        {id, fmt(std::sqrt(a->var_p2)), fmt(std::sqrt(i->var_p2)), fmt(std::sqrt(o->var_p2))});
  }
  lookup.check();
  return {std::move(means), std::move(sds)};
}

// figM: estimator means over the N sweep; figV: N * variance over the sweep
inline std::pair<Table, Table> sweep_tables(const CampaignReport& report,
                                            const std::string& matrix, const std::string& mean_name,
                                            const std::string& var_name) {
  CellLookup lookup{report, {}};
  Table means{mean_name, {"n", "true_p2", "mean_A", "mean_I", "mean_OSCI"}, {}};
  Table vars{var_name, {"n", "n_var_A", "n_var_I", "n_var_OSCI"}, {}};
  for (std::size_t n : report.spec.n_values) {
    const CampaignCell* a = lookup.get(matrix, n, EstimatorKind::FourImage);
    const CampaignCell* i = lookup.get(matrix, n, EstimatorKind::CorrelatedPair);
    const CampaignCell* o = lookup.get(matrix, n, EstimatorKind::Osci);
    if (!a || !i || !o) continue;
    const std::string id = std::to_string(n);
    means.rows.push_back({id, fmt(a->true_p2), fmt(a->mean_p2), fmt(i->mean_p2), fmt(o->mean_p2)});
    vars.rows.push_back({id, fmt(a->n_times_var), fmt(i->n_times_var), fmt(o->n_times_var)});
  }
  lookup.check();
  return {std::move(means), std::move(vars)};
}

}  // namespace fig_detail

/// Builds the figure datasets the report's grid supports: a single-N report
/// yields fig1/fig2 (per-matrix means and standard deviations); a multi-N
/// report yields fig3/fig4 for the first matrix and fig5/fig6 for the second.
/// Throws (before writing anything) if required cells are absent.
inline std::vector<fig_detail::Table> build_figure_tables(const CampaignReport& report) {
  std::vector<fig_detail::Table> tables;
  if (report.spec.n_values.size() == 1) {
    auto [means, sds] = fig_detail::per_matrix_tables(report, report.spec.n_values[0]);
    tables.push_back(std::move(means));
    tables.push_back(std::move(sds));
  } else {
    if (report.spec.matrices.empty() || report.spec.matrices.size() > 2)
      throw std::runtime_error("N-sweep figure datasets support one or two matrices, got " +
                               std::to_string(report.spec.matrices.size()));
    auto [m3, v4] = fig_detail::sweep_tables(report, report.spec.matrices[0].name, "fig3", "fig4");
    tables.push_back(std::move(m3));
    tables.push_back(std::move(v4));
    if (report.spec.matrices.size() == 2) {
      auto [m5, v6] =
          fig_detail::sweep_tables(report, report.spec.matrices[1].name, "fig5", "fig6");
      tables.push_back(std::move(m5));
      tables.push_back(std::move(v6));
    }
  }
  return tables;
}

/// The generic campaign table: one row per (matrix, n, estimator) cell.
inline fig_detail::Table build_campaign_table(const CampaignReport& report) {
  fig_detail::Table table{"campaign",
                          {"matrix", "n", "estimator", "true_p2", "mean_p2", "var_p2",
                           "n_times_var", "realizations", "failures"},
                          {}};
  for (const CampaignCell& cell : report.cells) {
    table.rows.push_back({cell.matrix_name, std::to_string(cell.n), estimator_label(cell.kind),
                          fig_detail::fmt(cell.true_p2), fig_detail::fmt(cell.mean_p2),
                          fig_detail::fmt(cell.var_p2), fig_detail::fmt(cell.n_times_var),
                          std::to_string(cell.realization_count),
                          std::to_string(cell.failure_count)});
  }
  return table;
}

/// Emits the figure datasets (and nothing else) into out_dir; returns the
/// paths written. All tables are assembled before the first write.
inline std::vector<std::filesystem::path> emit_figure_datasets(const CampaignReport& report,
                                                               const std::filesystem::path& out_dir,
                                                               bool as_json) {
  const std::vector<fig_detail::Table> tables = build_figure_tables(report);
  std::vector<std::pair<std::filesystem::path, std::string>> files;
  for (const fig_detail::Table& t : tables)
    files.emplace_back(out_dir / (t.name + (as_json ? ".json" : ".csv")),
                       as_json ? t.to_json() : t.to_csv());
  std::vector<std::filesystem::path> written;
  for (const auto& [path, content] : files) {
    write_file_atomic(path, content);
    written.push_back(path);
  }
  return written;
}

}  // namespace spdop

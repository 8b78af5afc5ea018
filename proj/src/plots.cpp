#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <tuple>

#include "stackfed/csv.hpp"
#include "stackfed/error.hpp"
#include "stackfed/runner.hpp"

namespace stackfed {
namespace {

using Keys = std::vector<std::string>;

// Numeric-aware ordering so "10" sorts after "9".
bool key_less(const Keys& a, const Keys& b) {
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (a[i] == b[i]) continue;
    char* ea = nullptr;
    char* eb = nullptr;
    const double va = std::strtod(a[i].c_str(), &ea);
    const double vb = std::strtod(b[i].c_str(), &eb);
    const bool na = !a[i].empty() && *ea == '\0';
    const bool nb = !b[i].empty() && *eb == '\0';
    if (na && nb && va != vb) return va < vb;
    if (na != nb) return na;
    return a[i] < b[i];
  }
  return a.size() < b.size();
}

struct Accumulator {
  std::map<Keys, std::vector<double>, decltype(&key_less)> groups{&key_less};

  void add(Keys keys, double value) { groups[std::move(keys)].push_back(value); }
};

PlotTable finish(std::string_view panel, Keys key_names, const Accumulator& acc) {
  PlotTable table;
  table.panel = panel;
  table.key_names = std::move(key_names);
  for (const auto& [keys, values] : acc.groups) {
    PlotLine line;
    line.keys = keys;
    line.n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    line.mean = sum / static_cast<double>(line.n);
    if (line.n > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - line.mean) * (v - line.mean);
      line.stderr_ = std::sqrt(ss / static_cast<double>(line.n - 1) / static_cast<double>(line.n));
    }
    table.lines.push_back(std::move(line));
  }
  if (table.lines.empty()) {
    table.warnings.push_back("panel " + std::string(panel) + " has no matching rows");
  }
  return table;
}

std::string bin_label(double v, double width) {
  const double lo = std::floor(v / width + 1e-9) * width;
  return format_real(std::max(0.0, lo));
}

std::string param_value(const ResultRow& r, std::string_view name) {
  const auto v = r.parameters.get(name);
  return v ? format_real(*v) : std::string();
}

// Share of the cell's private rows held by each client.
std::vector<double> data_shares(const std::vector<ResultRow>& rows) {
  std::map<std::tuple<std::string, std::string, std::size_t, std::size_t, std::string>, double>
      totals;
  auto key = [](const ResultRow& r) {
    return std::make_tuple(r.regime, r.parameters.label(), r.partition_seed, r.repeat, r.mode);
  };
  for (const auto& r : rows) totals[key(r)] += static_cast<double>(r.n_private_rows);
  std::vector<double> shares;
  shares.reserve(rows.size());
  for (const auto& r : rows) {
    const double total = totals[key(r)];
    shares.push_back(total > 0.0 ? static_cast<double>(r.n_private_rows) / total : 0.0);
  }
  return shares;
}

using RowValue = std::function<double(const ResultRow&)>;

PlotTable per_param(const std::vector<ResultRow>& rows, std::string_view panel,
                    const RowValue& value) {
  Accumulator acc;
  for (const auto& r : rows) acc.add({r.regime, r.parameters.label(), r.mode}, value(r));
  return finish(panel, {"regime", "parameters", "mode"}, acc);
}

PlotTable per_share(const std::vector<ResultRow>& rows, std::string_view panel,
                    const RowValue& value) {
  const auto shares = data_shares(rows);
  Accumulator acc;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.regime != "quantity") continue;
    acc.add({r.mode, bin_label(shares[i], 0.05)}, value(r));
  }
  return finish(panel, {"mode", "share_bin"}, acc);
}

PlotTable per_balance(const std::vector<ResultRow>& rows, std::string_view panel,
                      const RowValue& value) {
  Accumulator acc;
  for (const auto& r : rows) {
    if (r.regime != "label") continue;
    acc.add({r.mode, bin_label(r.label_balance, 0.05)}, value(r));
  }
  return finish(panel, {"mode", "label_balance_bin"}, acc);
}

PlotTable per_client(const std::vector<ResultRow>& rows, std::string_view panel,
                     const RowValue& value) {
  Accumulator acc;
  for (const auto& r : rows) {
    if (r.regime != "natural") continue;
    acc.add({r.parameters.column, std::to_string(r.client_id), r.mode}, value(r));
  }
  return finish(panel, {"column", "client_id", "mode"}, acc);
}

double gain_of(const ResultRow& r) { return r.gain; }
double importance_of(const ResultRow& r) { return r.importance; }
double self_of(const ResultRow& r) { return r.self_importance; }

}  // namespace

const std::vector<std::string>& plot_panels() {
  static const std::vector<std::string> panels{
      "gain_vs_param",          "self_importance_vs_param",
      "gain_vs_share",          "importance_vs_share",
      "self_importance_vs_share", "gain_vs_label_balance",
      "importance_vs_label_balance", "importance_vs_jaccard",
      "self_importance_vs_p",   "self_importance_vs_epsilon",
      "natural_gain",           "natural_self_importance",
      "natural_share"};
  return panels;
}

PlotTable plot_data(const std::vector<ResultRow>& rows,
                    const std::vector<ContributionRecord>& contributions,
                    std::string_view panel) {
  if (panel == "gain_vs_param") return per_param(rows, panel, gain_of);
  if (panel == "self_importance_vs_param") return per_param(rows, panel, self_of);
  if (panel == "gain_vs_share") return per_share(rows, panel, gain_of);
  if (panel == "importance_vs_share") return per_share(rows, panel, importance_of);
  if (panel == "self_importance_vs_share") return per_share(rows, panel, self_of);
  if (panel == "gain_vs_label_balance") return per_balance(rows, panel, gain_of);
  if (panel == "importance_vs_label_balance") return per_balance(rows, panel, importance_of);
  if (panel == "importance_vs_jaccard") {
    Accumulator acc;
    for (const auto& c : contributions) {
      if (!c.jaccard || c.from == c.to) continue;
      acc.add({c.mode, bin_label(*c.jaccard, 0.1)}, c.weight);
    }
    return finish(panel, {"mode", "jaccard_bin"}, acc);
  }
  if (panel == "self_importance_vs_p") {
    Accumulator acc;
    for (const auto& r : rows) {
      if (r.regime != "vertical" || r.parameters.get("epsilon").value_or(0.0) != 0.0) continue;
      acc.add({r.mode, param_value(r, "p")}, r.self_importance);
    }
    return finish(panel, {"mode", "p"}, acc);
  }
  if (panel == "self_importance_vs_epsilon") {
    Accumulator acc;
    for (const auto& r : rows) {
      if (r.regime != "vertical") continue;
      acc.add({r.mode, param_value(r, "p"), param_value(r, "epsilon")}, r.self_importance);
    }
    return finish(panel, {"mode", "p", "epsilon"}, acc);
  }
  if (panel == "natural_gain") return per_client(rows, panel, gain_of);
  if (panel == "natural_self_importance") return per_client(rows, panel, self_of);
  if (panel == "natural_share") {
    const auto shares = data_shares(rows);
    Accumulator acc;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.regime != "natural") continue;
      acc.add({r.parameters.column, std::to_string(r.client_id), r.mode}, shares[i]);
    }
    return finish(panel, {"column", "client_id", "mode"}, acc);
  }
  std::string valid;
  for (const auto& p : plot_panels()) valid += (valid.empty() ? "" : ", ") + p;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown panel '" + std::string(panel) + "'; valid panels: " + valid);
}

void write_plot_table(const PlotTable& table, std::ostream& out) {
  for (const auto& k : table.key_names) out << k << ',';
  out << "n,mean,stderr\n";
  for (const auto& line : table.lines) {
    for (const auto& k : line.keys) out << csv::escape(k) << ',';
    out << line.n << ',' << format_real(line.mean) << ',' << format_real(line.stderr_) << '\n';
  }
}

std::filesystem::path emit_plot_data(const std::vector<ResultRow>& rows,
                                     const std::vector<ContributionRecord>& contributions,
                                     std::string_view panel, const std::filesystem::path& out_dir) {
  const PlotTable table = plot_data(rows, contributions, panel);
  std::filesystem::create_directories(out_dir);
  const auto path = out_dir / (std::string(panel) + ".csv");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  write_plot_table(table, out);
  return path;
}

}  // namespace stackfed

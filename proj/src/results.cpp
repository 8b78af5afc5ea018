#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <tuple>

#include "stackfed/csv.hpp"
#include "stackfed/error.hpp"
#include "stackfed/runner.hpp"

namespace stackfed {
namespace {

constexpr const char* kResultsHeader =
    "regime,parameters,partition_seed,repeat,client_id,mode,n_private_rows,private_ba,"
    "meta_ba,gain,self_importance,importance,label_balance,jaccard_mean";
constexpr const char* kContributionsHeader =
    "regime,parameters,partition_seed,repeat,mode,from,to,weight,jaccard";

int compare_points(const ParamPoint& a, const ParamPoint& b) {
  const std::size_t n = std::min(a.values.size(), b.values.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a.values[i].first != b.values[i].first) {
      return a.values[i].first < b.values[i].first ? -1 : 1;
    }
    if (a.values[i].second != b.values[i].second) {
      return a.values[i].second < b.values[i].second ? -1 : 1;
    }
  }
  if (a.values.size() != b.values.size()) return a.values.size() < b.values.size() ? -1 : 1;
  if (a.column != b.column) return a.column < b.column ? -1 : 1;
  return 0;
}

ParamPoint parse_point(const std::string& label) {
  ParamPoint p;
  std::size_t start = 0;
  while (start <= label.size() && !label.empty()) {
    const std::size_t end = std::min(label.find(';', start), label.size());
    const std::string item = label.substr(start, end - start);
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kMalformedInput, "bad parameter entry '" + item + "'");
    }
    const std::string name = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (name == "column") {
      p.column = value;
    } else {
      char* endp = nullptr;
      const double v = std::strtod(value.c_str(), &endp);
      if (endp == value.c_str() || *endp != '\0') {
        throw Error(ErrorCode::kMalformedInput, "bad parameter value '" + item + "'");
      }
      p.values.emplace_back(name, v);
    }
    start = end + 1;
  }
  return p;
}

double parse_real(const std::string& s) {
  char* endp = nullptr;
  const double v = std::strtod(s.c_str(), &endp);
  if (s.empty() || *endp != '\0') throw Error(ErrorCode::kMalformedInput, "bad number '" + s + "'");
  return v;
}

std::size_t parse_count(const std::string& s) {
  char* endp = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &endp, 10);
  if (s.empty() || *endp != '\0') throw Error(ErrorCode::kMalformedInput, "bad integer '" + s + "'");
  return static_cast<std::size_t>(v);
}

int parse_int(const std::string& s) {
  char* endp = nullptr;
  const long v = std::strtol(s.c_str(), &endp, 10);
  if (s.empty() || *endp != '\0') throw Error(ErrorCode::kMalformedInput, "bad integer '" + s + "'");
  return static_cast<int>(v);
}

std::string precise(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void check_header(std::istream& in, const char* expected) {
  std::vector<std::string> fields;
  if (!csv::read_record(in, fields)) throw Error(ErrorCode::kEmptyFile, "empty CSV file");
  std::string joined;
  for (std::size_t i = 0; i < fields.size(); ++i) joined += (i ? "," : "") + fields[i];
  if (joined != expected) {
    throw Error(ErrorCode::kMalformedInput, "unexpected header '" + joined + "'");
  }
}

auto contribution_key(const ContributionRecord& r) {
  return std::tie(r.regime, r.partition_seed, r.repeat, r.mode, r.from, r.to);
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void sort_rows(std::vector<ResultRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.regime != b.regime) return a.regime < b.regime;
    if (const int c = compare_points(a.parameters, b.parameters); c != 0) return c < 0;
    return std::tie(a.partition_seed, a.repeat, a.client_id, a.mode) <
           std::tie(b.partition_seed, b.repeat, b.client_id, b.mode);
  });
}

void write_results(std::vector<ResultRow> rows, std::ostream& out) {
  if (rows.empty()) throw Error(ErrorCode::kInvalidArgument, "no result rows to write");
  sort_rows(rows);
  out << kResultsHeader << '\n';
  for (const auto& r : rows) {
    out << csv::escape(r.regime) << ',' << csv::escape(r.parameters.label()) << ','
        << r.partition_seed << ',' << r.repeat << ',' << r.client_id << ',' << r.mode << ','
        << r.n_private_rows << ',' << format_real(r.private_ba) << ','
        << format_real(r.meta_ba) << ',' << format_real(r.gain) << ','
        << format_real(r.self_importance) << ',' << format_real(r.importance) << ','
        << format_real(r.label_balance) << ','
        << (r.jaccard_mean ? format_real(*r.jaccard_mean) : std::string()) << '\n';
  }
}

void write_results(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  write_results(rows, out);
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

std::vector<ResultRow> read_results(std::istream& in) {
  check_header(in, kResultsHeader);
  std::vector<ResultRow> rows;
  std::vector<std::string> f;
  while (csv::read_record(in, f)) {
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != 14) throw Error(ErrorCode::kMalformedInput, "results row must have 14 fields");
    ResultRow r;
    r.regime = f[0];
    r.parameters = parse_point(f[1]);
    r.partition_seed = parse_count(f[2]);
    r.repeat = parse_count(f[3]);
    r.client_id = parse_int(f[4]);
    r.mode = f[5];
    r.n_private_rows = parse_count(f[6]);
    r.private_ba = parse_real(f[7]);
    r.meta_ba = parse_real(f[8]);
    r.gain = parse_real(f[9]);
    r.self_importance = parse_real(f[10]);
    r.importance = parse_real(f[11]);
    r.label_balance = parse_real(f[12]);
    if (!f[13].empty()) r.jaccard_mean = parse_real(f[13]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> read_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open '" + path.string() + "'");
  return read_results(in);
}

void write_contributions(std::vector<ContributionRecord> records, std::ostream& out) {
  std::stable_sort(records.begin(), records.end(),
                   [](const ContributionRecord& a, const ContributionRecord& b) {
                     if (a.regime != b.regime) return a.regime < b.regime;
                     if (const int c = compare_points(a.parameters, b.parameters); c != 0) {
                       return c < 0;
                     }
                     return contribution_key(a) < contribution_key(b);
                   });
  out << kContributionsHeader << '\n';
  for (const auto& r : records) {
    out << csv::escape(r.regime) << ',' << csv::escape(r.parameters.label()) << ','
        << r.partition_seed << ',' << r.repeat << ',' << r.mode << ',' << r.from << ',' << r.to
        << ',' << precise(r.weight) << ',' << (r.jaccard ? precise(*r.jaccard) : std::string())
        << '\n';
  }
}

std::vector<ContributionRecord> read_contributions(std::istream& in) {
  check_header(in, kContributionsHeader);
  std::vector<ContributionRecord> records;
  std::vector<std::string> f;
  while (csv::read_record(in, f)) {
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != 9) throw Error(ErrorCode::kMalformedInput, "contribution row must have 9 fields");
    ContributionRecord r;
    r.regime = f[0];
    r.parameters = parse_point(f[1]);
    r.partition_seed = parse_count(f[2]);
    r.repeat = parse_count(f[3]);
    r.mode = f[4];
    r.from = parse_int(f[5]);
    r.to = parse_int(f[6]);
    r.weight = parse_real(f[7]);
    if (!f[8].empty()) r.jaccard = parse_real(f[8]);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<std::filesystem::path> export_graphs(const std::vector<ContributionRecord>& records,
                                                 const std::filesystem::path& dir) {
  std::map<std::string, std::vector<const ContributionRecord*>> cells;
  for (const auto& r : records) {
    std::string name = r.regime + "_" + r.parameters.label() + "_seed" +
                       std::to_string(r.partition_seed) + "_repeat" + std::to_string(r.repeat) +
                       "_" + r.mode;
    for (char& c : name) {
      if (c == ';' || c == '/' || c == ' ' || c == ',') c = '_';
      if (c == '=') c = '-';
    }
    cells[name].push_back(&r);
  }
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (auto& [name, edges] : cells) {
    std::sort(edges.begin(), edges.end(), [](const auto* a, const auto* b) {
      return std::tie(a->from, a->to) < std::tie(b->from, b->to);
    });
    const auto path = dir / (name + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
    out << "from,to,weight\n";
    for (const auto* e : edges) out << e->from << ',' << e->to << ',' << precise(e->weight) << '\n';
    written.push_back(path);
  }
  return written;
}

}  // namespace stackfed

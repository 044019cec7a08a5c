#include "esma/io.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "esma/error.hpp"

namespace esma::io {

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorKind::io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::io, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{}", v);
}

std::string format_number(const std::optional<double>& v) { return v ? format_number(*v) : "nan"; }

std::string metrics_csv_fields(const sdt::MetricsSummary& m) {
  return fmt::format("{},{},{},{},{},{},{},{},{}", format_number(m.d_type2), format_number(m.raw_alignment),
                     format_number(m.accuracy), format_number(m.yes_ratio), format_number(m.yfr),
                     format_number(m.nfr), format_number(m.auc), m.n_records, m.n_unparseable);
}

std::string metrics_csv(const sdt::MetricsSummary& m) {
  return std::string(kMetricsHeader) + "\n" + metrics_csv_fields(m) + "\n";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

namespace {

std::optional<double> parse_optional(const std::string& s) {
  if (s == "nan" || s.empty()) return std::nullopt;
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw Error(ErrorKind::data, "bad number in metrics CSV: '" + s + "'");
  }
}

double parse_required(const std::string& s) {
  auto v = parse_optional(s);
  if (!v) throw Error(ErrorKind::data, "missing required metric value");
  return *v;
}

}  // namespace

sdt::MetricsSummary parse_metrics_fields(std::span<const std::string> f) {
  if (f.size() != 9) throw Error(ErrorKind::data, fmt::format("metrics row has {} fields, expected 9", f.size()));
  sdt::MetricsSummary m;
  m.d_type2 = parse_optional(f[0]);
  m.raw_alignment = parse_required(f[1]);
  m.accuracy = parse_required(f[2]);
  m.yes_ratio = parse_required(f[3]);
  m.yfr = parse_optional(f[4]);
  m.nfr = parse_optional(f[5]);
  m.auc = parse_optional(f[6]);
  m.n_records = static_cast<std::size_t>(parse_required(f[7]));
  m.n_unparseable = static_cast<std::size_t>(parse_required(f[8]));
  return m;
}

sdt::MetricsSummary read_metrics_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  if (header != kMetricsHeader) throw Error(ErrorKind::data, "unexpected metrics header in " + path.string());
  return parse_metrics_fields(split_csv_line(row));
}

std::string roc_csv(const sdt::RocCurve& curve) {
  std::string out = "threshold,fpr,tpr\n";
  for (std::size_t k = 0; k < curve.points.size(); ++k) {
    out += fmt::format("{},{},{}\n", format_number(curve.thresholds[k]), format_number(curve.points[k].fpr),
                       format_number(curve.points[k].tpr));
  }
  return out;
}

std::string density_csv(const sdt::ConfidenceDensity& h) {
  std::string out = "bin_lo,bin_hi,correct,incorrect\n";
  for (std::size_t k = 0; k < h.correct_counts.size(); ++k) {
    out += fmt::format("{},{},{},{}\n", format_number(h.edges[k]), format_number(h.edges[k + 1]),
                       h.correct_counts[k], h.incorrect_counts[k]);
  }
  return out;
}

std::string idk_csv(const sdt::IdkMetrics& m) {
  return fmt::format("idk_accuracy,idk_alignment,all_alignment,n\n{},{},{},{}\n", format_number(m.idk_accuracy),
                     format_number(m.idk_alignment), format_number(m.all_alignment), m.n);
}

std::string records_jsonl(std::span<const EvalRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += nlohmann::json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<EvalRecord> read_records_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<EvalRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(nlohmann::json::parse(line).get<EvalRecord>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::data, fmt::format("{} line {}: {}", path.string(), line_no, e.what()));
    }
  }
  return records;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace esma::io

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "esma/sdt.hpp"
#include "esma/types.hpp"

namespace esma::io {

/// Writes via a temporary sibling then renames over `path`. Creates parent
/// directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Shortest round-trippable rendering of a double; "nan" for missing values.
std::string format_number(double v);
std::string format_number(const std::optional<double>& v);

/// Column order of every metrics CSV.
inline constexpr std::string_view kMetricsHeader =
    "d_type2,raw_alignment,accuracy,yes_ratio,yfr,nfr,auc,n,n_unparseable";

std::string metrics_csv_fields(const sdt::MetricsSummary& m);
/// Header line plus one row.
std::string metrics_csv(const sdt::MetricsSummary& m);
/// Parses the fields written by metrics_csv_fields.
sdt::MetricsSummary parse_metrics_fields(std::span<const std::string> fields);
sdt::MetricsSummary read_metrics_csv(const std::filesystem::path& path);

std::string roc_csv(const sdt::RocCurve& curve);
std::string density_csv(const sdt::ConfidenceDensity& h);
std::string idk_csv(const sdt::IdkMetrics& m);

std::string records_jsonl(std::span<const EvalRecord> records);
std::vector<EvalRecord> read_records_jsonl(const std::filesystem::path& path);

std::vector<std::string> split_csv_line(std::string_view line);

/// Current UTC time as 2026-01-31T12:00:00Z.
std::string utc_timestamp();

}  // namespace esma::io

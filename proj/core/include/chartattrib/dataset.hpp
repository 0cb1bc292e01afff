#pragma once

// Attribution datasets: charts, question/answer pairs with answer-supporting
// regions, and per-step reasoning with its own regions.
//
// Manifest JSON (boxes are half-open [x1, y1, x2, y2] pixel integers):
//
//   { "version": "1", "box_convention": "half-open",
//     "charts":    [{"id", "file", "type": "line"|"bar"|"pie", "width", "height"}],
//     "qa":        [{"id", "chart_id", "question", "answer", "answer_regions": [[...]]}],
//     "reasoning": [{"qa_id", "step", "text", "valid", "error_category"?, "regions": [[...]]}] }

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chartattrib/geometry.hpp"

namespace chartattrib {

enum class ChartType { Line, Bar, Pie };
inline constexpr std::array<ChartType, 3> kChartTypes = {ChartType::Line, ChartType::Bar,
                                                          ChartType::Pie};

std::string to_string(ChartType t);
std::optional<ChartType> parse_chart_type(const std::string& s);

struct ChartRecord {
  std::string id;
  std::string file;  // relative to the manifest's directory
  ChartType type = ChartType::Line;
  std::int64_t width = 0;
  std::int64_t height = 0;

  Frame frame() const noexcept { return {width, height}; }
};

struct QAPair {
  std::string id;
  std::string chart_id;
  std::string question;
  std::string answer;
  std::vector<PixelBox> answer_regions;
};

struct ReasoningStep {
  std::string qa_id;
  int step = 1;  // 1-based, contiguous per QA pair
  std::string text;
  std::vector<PixelBox> regions;
  bool valid = true;
  std::optional<std::string> error_category;
};

struct DatasetManifest {
  std::string version = "1";
  std::vector<ChartRecord> charts;
  std::vector<QAPair> qa_pairs;
  std::vector<ReasoningStep> reasoning_steps;
  std::filesystem::path base_dir;  // where chart files resolve; not serialized

  const ChartRecord* find_chart(const std::string& id) const;
  const QAPair* find_qa(const std::string& id) const;
};

struct LoadOptions {
  /// Require every chart image to exist with dims matching the record.
  bool check_images = true;
  /// Clamp out-of-frame boxes (dropping those left empty) instead of
  /// rejecting them. Meant for model predictions, never for ground truth.
  bool clamp_boxes = false;
};

/// Parses and validates a manifest. Throws Io, Format (with field path),
/// Integrity (naming the dangling id) or Validation (naming qa_id / step).
DatasetManifest load_manifest(const std::filesystem::path& path, const LoadOptions& opts = {});
DatasetManifest parse_manifest(const std::string& json_text,
                               const std::filesystem::path& base_dir,
                               const LoadOptions& opts = {});

/// Canonical JSON: fixed key order, two-space indentation.
std::string serialize_manifest(const DatasetManifest& m);

struct TypeCounts {
  std::int64_t charts = 0;
  std::int64_t qa_pairs = 0;
  std::int64_t reasoning_steps = 0;
  std::int64_t qa_regions = 0;
  std::int64_t reasoning_regions = 0;

  std::int64_t sum() const noexcept {
    return charts + qa_pairs + reasoning_steps + qa_regions + reasoning_regions;
  }
  TypeCounts& operator+=(const TypeCounts& o) noexcept;
  friend bool operator==(const TypeCounts&, const TypeCounts&) = default;
};

struct DatasetStats {
  std::array<TypeCounts, 3> per_type{};  // indexed by ChartType
  TypeCounts totals;
  std::int64_t grand_total = 0;  // sum of the five totals

  const TypeCounts& of(ChartType t) const noexcept { return per_type[static_cast<int>(t)]; }
  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

DatasetStats compute_stats(const DatasetManifest& m);
std::string stats_to_json(const DatasetStats& s);

}  // namespace chartattrib

#include "chartattrib/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "chartattrib/error.hpp"
#include "chartattrib/raster.hpp"
#include "json.hpp"

namespace chartattrib {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const json& field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(ErrorKind::Format, where + ": missing field \"" + key + "\"");
  return *it;
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_string()) fail(ErrorKind::Format, where + "." + key + ": expected string");
  return v.get<std::string>();
}

std::int64_t get_int(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number_integer()) fail(ErrorKind::Format, where + "." + key + ": expected integer");
  return v.get<std::int64_t>();
}

const json& get_array(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_array()) fail(ErrorKind::Format, where + "." + key + ": expected array");
  return v;
}

std::vector<PixelBox> parse_boxes(const json& arr, const std::string& where) {
  std::vector<PixelBox> out;
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const json& b = arr[k];
    const std::string here = where + "[" + std::to_string(k) + "]";
    if (!b.is_array() || b.size() != 4) {
      fail(ErrorKind::Format, here + ": expected [x1, y1, x2, y2]");
    }
    std::int64_t c[4];
    for (int n = 0; n < 4; ++n) {
      if (!b[n].is_number_integer()) fail(ErrorKind::Format, here + ": coordinates must be integers");
      c[n] = b[n].get<std::int64_t>();
    }
    out.push_back({c[0], c[1], c[2], c[3]});
  }
  return out;
}

std::string box_text(const PixelBox& b) {
  return "[" + std::to_string(b.x1) + "," + std::to_string(b.y1) + "," + std::to_string(b.x2) +
         "," + std::to_string(b.y2) + "]";
}

void check_boxes(std::vector<PixelBox>& boxes, const Frame& frame, bool clamp,
                 const std::string& owner) {
  if (clamp) {
    std::vector<PixelBox> kept;
    for (const auto& b : boxes) {
      if (auto c = clamp_to_frame(b, frame)) kept.push_back(*c);
    }
    boxes = std::move(kept);
    return;
  }
  for (const auto& b : boxes) {
    if (!within_frame(b, frame)) {
      fail(ErrorKind::Validation, owner + ": box " + box_text(b) + " is empty or outside the " +
                                      std::to_string(frame.width) + "x" +
                                      std::to_string(frame.height) + " chart");
    }
  }
}

int line_of(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) line += text[k] == '\n';
  return line;
}

ordered_json boxes_json(const std::vector<PixelBox>& boxes) {
  ordered_json arr = ordered_json::array();
  for (const auto& b : boxes) arr.push_back({b.x1, b.y1, b.x2, b.y2});
  return arr;
}

}  // namespace

std::string to_string(ChartType t) {
  switch (t) {
    case ChartType::Line: return "line";
    case ChartType::Bar: return "bar";
    case ChartType::Pie: return "pie";
  }
  return "unknown";
}

std::optional<ChartType> parse_chart_type(const std::string& s) {
  for (auto t : kChartTypes) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

const ChartRecord* DatasetManifest::find_chart(const std::string& id) const {
  for (const auto& c : charts) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

const QAPair* DatasetManifest::find_qa(const std::string& id) const {
  for (const auto& q : qa_pairs) {
    if (q.id == id) return &q;
  }
  return nullptr;
}

DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir,
                               const LoadOptions& opts) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Format,
         "manifest line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
  if (!root.is_object()) fail(ErrorKind::Format, "manifest: top level must be an object");

  DatasetManifest m;
  m.base_dir = base_dir;
  if (root.contains("version")) {
    const json& v = root["version"];
    m.version = v.is_string() ? v.get<std::string>() : v.dump();
  }
  if (root.contains("box_convention")) {
    const json& conv = root["box_convention"];
    if (!conv.is_string() || conv.get<std::string>() != "half-open") {
      fail(ErrorKind::Validation,
           "manifest declares box_convention " + conv.dump() + "; only \"half-open\" is supported");
    }
  }

  std::set<std::string> ids;
  const json& charts = get_array(root, "charts", "manifest");
  for (std::size_t k = 0; k < charts.size(); ++k) {
    const std::string where = "charts[" + std::to_string(k) + "]";
    const json& c = charts[k];
    if (!c.is_object()) fail(ErrorKind::Format, where + ": expected object");
    ChartRecord rec;
    rec.id = get_string(c, "id", where);
    rec.file = get_string(c, "file", where);
    const std::string type = get_string(c, "type", where);
    auto parsed = parse_chart_type(type);
    if (!parsed) fail(ErrorKind::Validation, where + ": unknown chart type \"" + type + "\"");
    rec.type = *parsed;
    rec.width = get_int(c, "width", where);
    rec.height = get_int(c, "height", where);
    if (rec.id.empty()) fail(ErrorKind::Validation, where + ": empty chart id");
    if (!ids.insert(rec.id).second) fail(ErrorKind::Validation, "duplicate chart id \"" + rec.id + "\"");
    if (rec.width < 1 || rec.height < 1) {
      fail(ErrorKind::Validation, "chart \"" + rec.id + "\": dims must be positive");
    }
    if (opts.check_images) {
      const auto image = base_dir / rec.file;
      if (!std::filesystem::exists(image)) {
        fail(ErrorKind::Io, "chart \"" + rec.id + "\": image " + image.string() + " not found");
      }
      const Frame actual = png_dimensions(image);
      if (!(actual == rec.frame())) {
        fail(ErrorKind::Validation,
             "chart \"" + rec.id + "\": declared " + std::to_string(rec.width) + "x" +
                 std::to_string(rec.height) + " but image is " + std::to_string(actual.width) +
                 "x" + std::to_string(actual.height));
      }
    }
    m.charts.push_back(std::move(rec));
  }

  std::set<std::string> qa_ids;
  std::set<std::string> charts_with_qa;
  const json& qas = get_array(root, "qa", "manifest");
  for (std::size_t k = 0; k < qas.size(); ++k) {
    const std::string where = "qa[" + std::to_string(k) + "]";
    const json& q = qas[k];
    if (!q.is_object()) fail(ErrorKind::Format, where + ": expected object");
    QAPair pair;
    pair.id = get_string(q, "id", where);
    pair.chart_id = get_string(q, "chart_id", where);
    pair.question = get_string(q, "question", where);
    pair.answer = get_string(q, "answer", where);
    pair.answer_regions = parse_boxes(get_array(q, "answer_regions", where), where + ".answer_regions");
    if (pair.id.empty()) fail(ErrorKind::Validation, where + ": empty qa id");
    if (!qa_ids.insert(pair.id).second) fail(ErrorKind::Validation, "duplicate qa id \"" + pair.id + "\"");
    const ChartRecord* chart = m.find_chart(pair.chart_id);
    if (!chart) {
      fail(ErrorKind::Integrity,
           "qa \"" + pair.id + "\" references missing chart_id \"" + pair.chart_id + "\"");
    }
    if (pair.question.empty() || pair.answer.empty()) {
      fail(ErrorKind::Validation, "qa \"" + pair.id + "\": question and answer must be nonempty");
    }
    check_boxes(pair.answer_regions, chart->frame(), opts.clamp_boxes, "qa \"" + pair.id + "\"");
    charts_with_qa.insert(pair.chart_id);
    m.qa_pairs.push_back(std::move(pair));
  }

  for (const auto& c : m.charts) {
    if (!charts_with_qa.count(c.id)) {
      fail(ErrorKind::Integrity, "chart \"" + c.id + "\" has no QA pair");
    }
  }

  std::map<std::string, std::vector<int>> steps_by_qa;
  if (root.contains("reasoning")) {
    const json& steps = get_array(root, "reasoning", "manifest");
    for (std::size_t k = 0; k < steps.size(); ++k) {
      const std::string where = "reasoning[" + std::to_string(k) + "]";
      const json& s = steps[k];
      if (!s.is_object()) fail(ErrorKind::Format, where + ": expected object");
      ReasoningStep step;
      step.qa_id = get_string(s, "qa_id", where);
      const std::int64_t index = get_int(s, "step", where);
      step.text = get_string(s, "text", where);
      const json& valid = field(s, "valid", where);
      if (!valid.is_boolean()) fail(ErrorKind::Format, where + ".valid: expected boolean");
      step.valid = valid.get<bool>();
      if (s.contains("error_category") && !s["error_category"].is_null()) {
        step.error_category = get_string(s, "error_category", where);
      }
      step.regions = parse_boxes(get_array(s, "regions", where), where + ".regions");

      const QAPair* qa = m.find_qa(step.qa_id);
      if (!qa) {
        fail(ErrorKind::Integrity,
             where + " references missing qa_id \"" + step.qa_id + "\"");
      }
      if (index < 1 || index > (std::int64_t{1} << 30)) {
        fail(ErrorKind::Validation, "qa \"" + step.qa_id + "\" step " + std::to_string(index) +
                                        ": step index must be >= 1");
      }
      step.step = static_cast<int>(index);
      const ChartRecord* chart = m.find_chart(qa->chart_id);
      check_boxes(step.regions, chart->frame(), opts.clamp_boxes,
                  "qa \"" + step.qa_id + "\" step " + std::to_string(step.step));
      steps_by_qa[step.qa_id].push_back(step.step);
      m.reasoning_steps.push_back(std::move(step));
    }
  }
  for (auto& [qa_id, indices] : steps_by_qa) {
    std::sort(indices.begin(), indices.end());
    for (std::size_t k = 0; k < indices.size(); ++k) {
      if (indices[k] != static_cast<int>(k) + 1) {
        fail(ErrorKind::Validation, "qa \"" + qa_id +
                                        "\": reasoning steps must be numbered 1.." +
                                        std::to_string(indices.size()) + " without gaps");
      }
    }
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open manifest " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.parent_path(), opts);
}

std::string serialize_manifest(const DatasetManifest& m) {
  ordered_json root;
  root["version"] = m.version;
  root["box_convention"] = "half-open";
  root["charts"] = ordered_json::array();
  for (const auto& c : m.charts) {
    ordered_json j;
    j["id"] = c.id;
    j["file"] = c.file;
    j["type"] = to_string(c.type);
    j["width"] = c.width;
    j["height"] = c.height;
    root["charts"].push_back(std::move(j));
  }
  root["qa"] = ordered_json::array();
  for (const auto& q : m.qa_pairs) {
    ordered_json j;
    j["id"] = q.id;
    j["chart_id"] = q.chart_id;
    j["question"] = q.question;
    j["answer"] = q.answer;
    j["answer_regions"] = boxes_json(q.answer_regions);
    root["qa"].push_back(std::move(j));
  }
  root["reasoning"] = ordered_json::array();
  for (const auto& s : m.reasoning_steps) {
    ordered_json j;
    j["qa_id"] = s.qa_id;
    j["step"] = s.step;
    j["text"] = s.text;
    j["valid"] = s.valid;
    if (s.error_category) j["error_category"] = *s.error_category;
    j["regions"] = boxes_json(s.regions);
    root["reasoning"].push_back(std::move(j));
  }
  return root.dump(2) + "\n";
}

TypeCounts& TypeCounts::operator+=(const TypeCounts& o) noexcept {
  charts += o.charts;
  qa_pairs += o.qa_pairs;
  reasoning_steps += o.reasoning_steps;
  qa_regions += o.qa_regions;
  reasoning_regions += o.reasoning_regions;
  return *this;
}

DatasetStats compute_stats(const DatasetManifest& m) {
  DatasetStats s;
  std::map<std::string, ChartType> chart_type;
  std::map<std::string, ChartType> qa_type;
  for (const auto& c : m.charts) {
    chart_type[c.id] = c.type;
    s.per_type[static_cast<int>(c.type)].charts += 1;
  }
  for (const auto& q : m.qa_pairs) {
    const ChartType t = chart_type.at(q.chart_id);
    qa_type[q.id] = t;
    auto& counts = s.per_type[static_cast<int>(t)];
    counts.qa_pairs += 1;
    counts.qa_regions += static_cast<std::int64_t>(q.answer_regions.size());
  }
  for (const auto& r : m.reasoning_steps) {
    auto& counts = s.per_type[static_cast<int>(qa_type.at(r.qa_id))];
    counts.reasoning_steps += 1;
    counts.reasoning_regions += static_cast<std::int64_t>(r.regions.size());
  }
  for (const auto& counts : s.per_type) s.totals += counts;
  s.grand_total = s.totals.sum();
  return s;
}

std::string stats_to_json(const DatasetStats& s) {
  auto counts_json = [](const TypeCounts& c) {
    ordered_json j;
    j["charts"] = c.charts;
    j["qa_pairs"] = c.qa_pairs;
    j["reasoning_steps"] = c.reasoning_steps;
    j["qa_regions"] = c.qa_regions;
    j["reasoning_regions"] = c.reasoning_regions;
    return j;
  };
  ordered_json root;
  root["per_type"] = ordered_json::object();
  for (auto t : kChartTypes) root["per_type"][to_string(t)] = counts_json(s.of(t));
  root["totals"] = counts_json(s.totals);
  root["grand_total"] = s.grand_total;
  return root.dump(2);
}

}  // namespace chartattrib

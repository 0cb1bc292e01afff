#include "chartattrib/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "chartattrib/attribution.hpp"
#include "chartattrib/dataset.hpp"
#include "chartattrib/error.hpp"
#include "chartattrib/metrics.hpp"
#include "chartattrib/raster.hpp"
#include "chartattrib/tensor_io.hpp"
#include "chartattrib/verification.hpp"
#include "json.hpp"

#ifndef CHARTATTRIB_VERSION
#define CHARTATTRIB_VERSION "dev"
#endif

namespace chartattrib::cli {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kVerifyScoreTolerance = 1e-5;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return kIoError;
    case ErrorKind::Verification: return kVerifyMismatch;
    default: return kContractError;
  }
}

std::vector<std::int64_t> parse_ints(const std::string& text, std::size_t n, const char* shape) {
  std::vector<std::int64_t> c;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      c.push_back(std::stoll(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      fail(ErrorKind::Contract, "\"" + text + "\" must be " + shape + " integers");
    }
  }
  if (c.size() != n) fail(ErrorKind::Contract, "\"" + text + "\" must be " + shape + " integers");
  return c;
}

PixelBox parse_box(const std::string& text) {
  const auto c = parse_ints(text, 4, "x1,y1,x2,y2");
  return {c[0], c[1], c[2], c[3]};
}

std::vector<PixelBox> load_boxes_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Format, path + ": " + e.what());
  }
  if (!j.is_array()) fail(ErrorKind::Format, path + ": expected an array of [x1,y1,x2,y2]");
  std::vector<PixelBox> out;
  for (const auto& b : j) {
    if (!b.is_array() || b.size() != 4 ||
        !std::all_of(b.begin(), b.end(), [](const auto& v) { return v.is_number_integer(); })) {
      fail(ErrorKind::Format, path + ": expected an array of [x1,y1,x2,y2]");
    }
    out.push_back({b[0].get<std::int64_t>(), b[1].get<std::int64_t>(), b[2].get<std::int64_t>(),
                   b[3].get<std::int64_t>()});
  }
  return out;
}

Rgb parse_color(const std::string& hex) {
  std::string h = hex;
  if (!h.empty() && h[0] == '#') h.erase(0, 1);
  if (h.size() != 6 || h.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos) {
    fail(ErrorKind::Contract, "color \"" + hex + "\" must be RRGGBB hex");
  }
  const auto v = std::stoul(h, nullptr, 16);
  return {static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 8),
          static_cast<std::uint8_t>(v)};
}

ordered_json box_json(const PixelBox& b) { return ordered_json::array({b.x1, b.y1, b.x2, b.y2}); }

void write_report(const std::string& path, const std::string& command, const ordered_json& config,
                  const ordered_json& items, const ordered_json& aggregates) {
  ordered_json report;
  report["tool"] = "chartattrib";
  report["version"] = CHARTATTRIB_VERSION;
  report["command"] = command;
  report["config"] = config;
  report["items"] = items;
  report["aggregates"] = aggregates;
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open report " + path);
  out << report.dump(2) << "\n";
  if (!out) fail(ErrorKind::Io, "cannot write report " + path);
}

// Mean over items in the order given; the caller fixes that order.
struct MeanAccumulator {
  double sum = 0.0;
  std::int64_t count = 0;
  void add(double v) {
    sum += v;
    ++count;
  }
  ordered_json json() const {
    ordered_json j;
    j["count"] = count;
    j["mean"] = count == 0 ? ordered_json(nullptr) : ordered_json(sum / static_cast<double>(count));
    return j;
  }
};

// ---------------------------------------------------------------- attribute

struct WindowFlags {
  std::size_t min_size = 3;
  std::size_t max_size = 35;
  bool square_only = true;
  std::size_t stride = 1;
  std::string pooling = "normalized";
  unsigned jobs = 1;

  WindowConfig config() const {
    WindowConfig cfg;
    cfg.min_size = min_size;
    cfg.max_size = max_size;
    cfg.square_only = square_only;
    cfg.stride = stride;
    // Checked here rather than by a CLI11 validator, which silently drops bad env values.
    if (pooling != "raw" && pooling != "normalized") {
      fail(ErrorKind::Contract, "pooling \"" + pooling + "\" must be normalized or raw");
    }
    cfg.pooling = pooling == "raw" ? Pooling::AverageOnly : Pooling::NormalizeThenAverage;
    return cfg;
  }
  ordered_json echo() const {
    ordered_json j;
    j["min_size"] = min_size;
    j["max_size"] = max_size;
    j["square_only"] = square_only;
    j["stride"] = stride;
    j["pooling"] = pooling;
    j["jobs"] = jobs;
    return j;
  }
};

void add_window_flags(CLI::App* cmd, WindowFlags& f) {
  cmd->add_option("--min-size", f.min_size, "Smallest window side in patches")
      ->envname("CHARTATTRIB_MIN_SIZE")
      ->capture_default_str();
  cmd->add_option("--max-size", f.max_size, "Largest window side (clamped to the grid)")
      ->envname("CHARTATTRIB_MAX_SIZE")
      ->capture_default_str();
  cmd->add_flag("--square-only,!--rectangles", f.square_only,
                "Square windows only; --rectangles admits every h x w")
      ->envname("CHARTATTRIB_SQUARE_ONLY");
  cmd->add_option("--stride", f.stride, "Window step in patches")
      ->envname("CHARTATTRIB_STRIDE")
      ->capture_default_str();
  cmd->add_option("--pooling", f.pooling,
                  "normalized: unit-normalize patches before averaging; raw: average as-is")
      ->envname("CHARTATTRIB_POOLING")
      ->capture_default_str();
  cmd->add_option("--jobs", f.jobs, "Worker threads (0 = all cores); never changes output")
      ->envname("CHARTATTRIB_JOBS")
      ->capture_default_str();
}

struct AttributeFlags {
  WindowFlags window;
  std::string grid;
  std::vector<std::string> queries;
  std::size_t k = 5;
  double nms_iou = 0.3;
  bool verify = false;
  std::string image;
  std::string image_size;
  std::string overlay;
  std::string stroke = "ff0000";
  std::size_t stroke_width = 2;
  std::string report;
};

int cmd_attribute(const AttributeFlags& f, std::ostream& out, std::ostream& err) {
  const EmbeddingGrid grid = grid_from_tensor(read_tensor_file(f.grid));

  std::optional<Frame> frame;
  std::optional<RasterImage> image;
  if (!f.image.empty()) {
    image = read_png(f.image);
    frame = image->frame();
  } else if (!f.image_size.empty()) {
    const auto x = f.image_size.find('x');
    try {
      if (x == std::string::npos) throw std::invalid_argument(f.image_size);
      frame = Frame{std::stoll(f.image_size.substr(0, x)), std::stoll(f.image_size.substr(x + 1))};
    } catch (const std::exception&) {
      fail(ErrorKind::Contract, "--image-size must look like 700x700");
    }
  }
  if (!f.overlay.empty() && !image) fail(ErrorKind::Contract, "--overlay needs --image");

  const WindowConfig cfg = f.window.config();
  const WindowScorer scorer(grid, cfg, ScanOptions{f.window.jobs});

  ordered_json items = ordered_json::array();
  std::vector<PixelBox> overlay_boxes_px;
  MeanAccumulator top_scores;
  bool mismatch = false;
  for (const auto& query_path : f.queries) {
    const QueryEmbedding query = query_from_tensor(read_tensor_file(query_path));
    const auto picked = scorer.topk(query, f.k, f.nms_iou);
    top_scores.add(picked.front().score);

    if (f.verify) {
      const ScoredRegion ref = brute_force_attribute(grid, query, cfg);
      const auto& got = picked.front();
      if (!(ref.region == got.region) || std::abs(ref.score - got.score) > kVerifyScoreTolerance) {
        mismatch = true;
        err << "verify: " << query_path << ": scanner picked (" << got.region.i << ","
            << got.region.j << "," << got.region.h << "," << got.region.w << ") score "
            << got.score << ", brute force picked (" << ref.region.i << "," << ref.region.j << ","
            << ref.region.h << "," << ref.region.w << ") score " << ref.score << "\n";
      }
    }

    for (std::size_t rank = 0; rank < picked.size(); ++rank) {
      const auto& sr = picked[rank];
      ordered_json rec;
      rec["query"] = query_path;
      rec["rank"] = rank + 1;
      rec["i"] = sr.region.i;
      rec["j"] = sr.region.j;
      rec["h"] = sr.region.h;
      rec["w"] = sr.region.w;
      rec["score"] = sr.score;
      if (frame) {
        const PixelBox box =
            grid_to_pixels(sr.region, grid.height(), grid.width(),
                           static_cast<std::size_t>(frame->width), static_cast<std::size_t>(frame->height));
        rec["box"] = box_json(box);
        overlay_boxes_px.push_back(box);
      }
      out << rec.dump() << "\n";
      items.push_back(std::move(rec));
    }
  }

  if (!f.overlay.empty()) {
    write_png(overlay_boxes(*image, BoxSet(overlay_boxes_px, image->frame()), parse_color(f.stroke),
                            f.stroke_width),
              f.overlay);
  }
  if (!f.report.empty()) {
    ordered_json config = f.window.echo();
    config["k"] = f.k;
    config["nms_iou"] = f.nms_iou;
    config["verify"] = f.verify;
    config["grid"] = f.grid;
    ordered_json agg;
    agg["queries"] = f.queries.size();
    agg["top_score"] = top_scores.json();
    write_report(f.report, "attribute", config, items, agg);
  }
  if (mismatch) return kVerifyMismatch;
  if (f.verify) err << "verify: " << f.queries.size() << " queries agree with brute force\n";
  return kOk;
}

// ---------------------------------------------------------------------- iou

struct IouFlags {
  std::string pred;
  std::string gt;
  bool no_image_check = false;
  unsigned jobs = 1;
  std::string report;
};

struct IouItem {
  std::string task;  // "vqa" (answer regions) or "vqr" (reasoning step regions)
  std::string qa_id;
  int step = 0;
  ChartType type = ChartType::Line;
  BoxSet pred;
  BoxSet gt;
  double iou = 0.0;
};

int cmd_iou(const IouFlags& f, std::ostream& out, std::ostream& err) {
  LoadOptions gt_opts;
  gt_opts.check_images = !f.no_image_check;
  LoadOptions pred_opts;
  pred_opts.check_images = false;
  pred_opts.clamp_boxes = true;
  const DatasetManifest gt = load_manifest(f.gt, gt_opts);
  const DatasetManifest pred = load_manifest(f.pred, pred_opts);

  std::set<std::string> gt_ids, pred_ids;
  for (const auto& q : gt.qa_pairs) gt_ids.insert(q.id);
  for (const auto& q : pred.qa_pairs) pred_ids.insert(q.id);
  std::vector<std::string> unmatched;
  for (const auto& id : gt_ids) {
    if (!pred_ids.count(id)) unmatched.push_back("qa " + id + " missing from predictions");
  }
  for (const auto& id : pred_ids) {
    if (!gt_ids.count(id)) unmatched.push_back("qa " + id + " not in ground truth");
  }

  using StepKey = std::pair<std::string, int>;
  std::map<StepKey, const ReasoningStep*> gt_steps, pred_steps;
  for (const auto& s : gt.reasoning_steps) gt_steps[{s.qa_id, s.step}] = &s;
  for (const auto& s : pred.reasoning_steps) pred_steps[{s.qa_id, s.step}] = &s;
  const bool score_steps = !pred_steps.empty();
  if (score_steps) {
    for (const auto& [key, s] : gt_steps) {
      if (!pred_steps.count(key)) {
        unmatched.push_back("qa " + key.first + " step " + std::to_string(key.second) +
                            " missing from predictions");
      }
    }
    for (const auto& [key, s] : pred_steps) {
      if (!gt_steps.count(key)) {
        unmatched.push_back("qa " + key.first + " step " + std::to_string(key.second) +
                            " not in ground truth");
      }
    }
  }
  if (!unmatched.empty()) {
    err << "iou: " << unmatched.size() << " unmatched item(s):\n";
    for (const auto& u : unmatched) err << "  " << u << "\n";
    return kContractError;
  }

  std::map<std::string, const QAPair*> gt_qa, pred_qa;
  for (const auto& q : gt.qa_pairs) gt_qa[q.id] = &q;
  for (const auto& q : pred.qa_pairs) pred_qa[q.id] = &q;

  auto frames_for = [&](const std::string& qa_id) {
    const ChartRecord* gc = gt.find_chart(gt_qa.at(qa_id)->chart_id);
    const ChartRecord* pc = pred.find_chart(pred_qa.at(qa_id)->chart_id);
    if (!(gc->frame() == pc->frame())) {
      fail(ErrorKind::Contract, "qa " + qa_id + ": predicted chart frame " +
                                    std::to_string(pc->width) + "x" + std::to_string(pc->height) +
                                    " differs from ground truth " + std::to_string(gc->width) +
                                    "x" + std::to_string(gc->height));
    }
    return std::pair{gc->frame(), gc->type};
  };

  // Ordered by (task, qa_id, step) through the sorted maps.
  std::vector<IouItem> items;
  for (const auto& [id, q] : gt_qa) {
    const auto [frame, type] = frames_for(id);
    items.push_back({"vqa", id, 0, type, BoxSet(pred_qa.at(id)->answer_regions, frame),
                     BoxSet(q->answer_regions, frame), 0.0});
  }
  if (score_steps) {
    for (const auto& [key, s] : gt_steps) {
      const auto [frame, type] = frames_for(key.first);
      items.push_back({"vqr", key.first, key.second, type,
                       BoxSet(pred_steps.at(key)->regions, frame), BoxSet(s->regions, frame), 0.0});
    }
  }

  std::vector<std::jthread> workers;
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next.fetch_add(1); k < items.size(); k = next.fetch_add(1)) {
      items[k].iou = multibox_iou(items[k].pred, items[k].gt);
    }
  };
  const unsigned jobs = f.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : f.jobs;
  if (jobs <= 1) {
    work();
  } else {
    for (unsigned t = 0; t < jobs; ++t) workers.emplace_back(work);
    workers.clear();
  }

  ordered_json records = ordered_json::array();
  std::map<std::string, std::map<std::string, MeanAccumulator>> means;
  for (const auto& it : items) {
    ordered_json rec;
    rec["task"] = it.task;
    rec["qa_id"] = it.qa_id;
    if (it.task == "vqr") rec["step"] = it.step;
    rec["chart_type"] = to_string(it.type);
    rec["iou"] = it.iou;
    out << rec.dump() << "\n";
    records.push_back(std::move(rec));
    means[it.task][to_string(it.type)].add(it.iou);
    means[it.task]["all"].add(it.iou);
  }

  ordered_json agg;
  for (const char* task : {"vqa", "vqr"}) {
    if (!means.count(task)) continue;
    ordered_json per;
    for (const char* key : {"line", "bar", "pie", "all"}) {
      if (means[task].count(key)) per[key] = means[task][key].json();
    }
    agg[task] = per;
    ordered_json summary;
    summary["task"] = task;
    summary["mean_iou"] = per;
    out << summary.dump() << "\n";
  }
  if (!f.report.empty()) {
    ordered_json config;
    config["pred"] = f.pred;
    config["gt"] = f.gt;
    config["image_check"] = !f.no_image_check;
    config["jobs"] = f.jobs;
    write_report(f.report, "iou", config, records, agg);
  }
  return kOk;
}

// ----------------------------------------------------------- mask / overlay

struct BoxSourceFlags {
  std::vector<std::string> boxes;
  std::string regions_json;
  std::string manifest;
  std::string qa;
  int step = 0;
};

void add_box_source_flags(CLI::App* cmd, BoxSourceFlags& f) {
  cmd->add_option("--box", f.boxes, "Pixel box x1,y1,x2,y2 (half-open); repeatable");
  cmd->add_option("--regions-json", f.regions_json, "JSON file holding [[x1,y1,x2,y2], ...]");
  cmd->add_option("--manifest", f.manifest, "Take regions from this manifest (with --qa)");
  cmd->add_option("--qa", f.qa, "QA id whose answer regions to use");
  cmd->add_option("--step", f.step, "Use this reasoning step's regions instead of the answer's");
}

std::vector<PixelBox> collect_boxes(const BoxSourceFlags& f) {
  std::vector<PixelBox> boxes;
  for (const auto& b : f.boxes) boxes.push_back(parse_box(b));
  if (!f.regions_json.empty()) {
    auto more = load_boxes_json(f.regions_json);
    boxes.insert(boxes.end(), more.begin(), more.end());
  }
  if (!f.manifest.empty()) {
    if (f.qa.empty()) fail(ErrorKind::Contract, "--manifest needs --qa");
    LoadOptions opts;
    opts.check_images = false;
    const DatasetManifest m = load_manifest(f.manifest, opts);
    const QAPair* qa = m.find_qa(f.qa);
    if (!qa) fail(ErrorKind::Integrity, "qa \"" + f.qa + "\" not in " + f.manifest);
    if (f.step == 0) {
      boxes.insert(boxes.end(), qa->answer_regions.begin(), qa->answer_regions.end());
    } else {
      auto it = std::find_if(m.reasoning_steps.begin(), m.reasoning_steps.end(),
                             [&](const ReasoningStep& s) { return s.qa_id == f.qa && s.step == f.step; });
      if (it == m.reasoning_steps.end()) {
        fail(ErrorKind::Integrity, "qa \"" + f.qa + "\" has no step " + std::to_string(f.step));
      }
      boxes.insert(boxes.end(), it->regions.begin(), it->regions.end());
    }
  }
  return boxes;
}

struct ImageFlags {
  std::string image;
  std::string out;
  BoxSourceFlags source;
  std::string color = "ff0000";
  std::size_t width = 2;
};

int cmd_mask(const ImageFlags& f, std::ostream& out) {
  const RasterImage img = read_png(f.image);
  const BoxSet set(collect_boxes(f.source), img.frame());
  const RasterImage masked = mask_outside(img, set);
  write_png(masked, f.out);
  ordered_json rec;
  rec["out"] = f.out;
  rec["boxes"] = set.boxes.size();
  rec["kept_pixels"] = rasterize(set).count();
  out << rec.dump() << "\n";
  return kOk;
}

int cmd_overlay(const ImageFlags& f, std::ostream& out) {
  const RasterImage img = read_png(f.image);
  const BoxSet set(collect_boxes(f.source), img.frame());
  write_png(overlay_boxes(img, set, parse_color(f.color), f.width), f.out);
  ordered_json rec;
  rec["out"] = f.out;
  rec["boxes"] = set.boxes.size();
  out << rec.dump() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- agreement

struct AgreementFlags {
  std::string table;
  std::string first;
  std::string second;
  bool no_image_check = false;
  std::string report;
};

ordered_json kappa_json(const AgreementTable& t) {
  ordered_json j;
  j["a"] = t.a;
  j["b"] = t.b;
  j["c"] = t.c;
  j["d"] = t.d;
  j["kappa"] = t.total() == 0 ? ordered_json(nullptr) : ordered_json(kappa(t));
  return j;
}

int cmd_agreement(const AgreementFlags& f, std::ostream& out, std::ostream& err) {
  ordered_json result;
  ordered_json items = ordered_json::array();
  if (!f.table.empty()) {
    const auto c = parse_ints(f.table, 4, "a,b,c,d");
    const AgreementTable t{c[0], c[1], c[2], c[3]};
    kappa(t);  // an explicit table must be usable
    result["overall"] = kappa_json(t);
  } else {
    if (f.first.empty() || f.second.empty()) {
      fail(ErrorKind::Contract, "agreement needs --table or both --first and --second");
    }
    LoadOptions opts;
    opts.check_images = !f.no_image_check;
    const DatasetManifest m1 = load_manifest(f.first, opts);
    const DatasetManifest m2 = load_manifest(f.second, opts);

    std::map<std::string, const QAPair*> qa1, qa2;
    for (const auto& q : m1.qa_pairs) qa1[q.id] = &q;
    for (const auto& q : m2.qa_pairs) qa2[q.id] = &q;
    std::map<std::pair<std::string, int>, const ReasoningStep*> st1, st2;
    for (const auto& s : m1.reasoning_steps) st1[{s.qa_id, s.step}] = &s;
    for (const auto& s : m2.reasoning_steps) st2[{s.qa_id, s.step}] = &s;

    std::vector<std::string> unmatched;
    for (const auto& [id, q] : qa1) {
      if (!qa2.count(id)) unmatched.push_back("qa " + id);
    }
    for (const auto& [id, q] : qa2) {
      if (!qa1.count(id)) unmatched.push_back("qa " + id);
    }
    for (const auto& [key, s] : st1) {
      if (!st2.count(key)) unmatched.push_back("qa " + key.first + " step " + std::to_string(key.second));
    }
    for (const auto& [key, s] : st2) {
      if (!st1.count(key)) unmatched.push_back("qa " + key.first + " step " + std::to_string(key.second));
    }
    if (!unmatched.empty()) {
      err << "agreement: " << unmatched.size() << " item(s) annotated by only one side:\n";
      for (const auto& u : unmatched) err << "  " << u << "\n";
      return kContractError;
    }

    struct PerType {
      AgreementTable table;
      MeanAccumulator qa_iou;
      MeanAccumulator step_iou;
    };
    std::map<std::string, PerType> per;
    auto chart_of = [&](const std::string& qa_id) {
      const ChartRecord* c1 = m1.find_chart(qa1.at(qa_id)->chart_id);
      const ChartRecord* c2 = m2.find_chart(qa2.at(qa_id)->chart_id);
      if (!(c1->frame() == c2->frame())) {
        fail(ErrorKind::Contract, "qa " + qa_id + ": annotators used different chart frames");
      }
      return c1;
    };
    for (const auto& [id, q] : qa1) {
      const ChartRecord* chart = chart_of(id);
      const double iou = multibox_iou(BoxSet(q->answer_regions, chart->frame()),
                                      BoxSet(qa2.at(id)->answer_regions, chart->frame()));
      for (const auto& key : {to_string(chart->type), std::string("all")}) per[key].qa_iou.add(iou);
      ordered_json rec;
      rec["stage"] = "qa";
      rec["qa_id"] = id;
      rec["iou"] = iou;
      items.push_back(rec);
    }
    for (const auto& [key, s1] : st1) {
      const ReasoningStep* s2 = st2.at(key);
      const ChartRecord* chart = chart_of(key.first);
      const double iou =
          multibox_iou(BoxSet(s1->regions, chart->frame()), BoxSet(s2->regions, chart->frame()));
      for (const auto& type : {to_string(chart->type), std::string("all")}) {
        auto& t = per[type].table;
        if (s1->valid && s2->valid) ++t.a;
        if (s1->valid && !s2->valid) ++t.b;
        if (!s1->valid && s2->valid) ++t.c;
        if (!s1->valid && !s2->valid) ++t.d;
        per[type].step_iou.add(iou);
      }
      ordered_json rec;
      rec["stage"] = "reasoning";
      rec["qa_id"] = key.first;
      rec["step"] = key.second;
      rec["valid"] = {s1->valid, s2->valid};
      rec["iou"] = iou;
      items.push_back(rec);
    }
    for (const char* type : {"line", "bar", "pie", "all"}) {
      if (!per.count(type)) continue;
      ordered_json j;
      j["validity_kappa"] = kappa_json(per[type].table);
      j["qa_region_iou"] = per[type].qa_iou.json();
      j["reasoning_region_iou"] = per[type].step_iou.json();
      result[type] = j;
    }
  }
  out << result.dump(2) << "\n";
  if (!f.report.empty()) {
    ordered_json config;
    config["table"] = f.table;
    config["first"] = f.first;
    config["second"] = f.second;
    write_report(f.report, "agreement", config, items, result);
  }
  return kOk;
}

// -------------------------------------------------------- stats / synthetic

struct StatsFlags {
  std::string manifest;
  bool no_image_check = false;
  std::string report;
};

int cmd_stats(const StatsFlags& f, std::ostream& out) {
  LoadOptions opts;
  opts.check_images = !f.no_image_check;
  const DatasetStats stats = compute_stats(load_manifest(f.manifest, opts));
  const std::string text = stats_to_json(stats);
  out << text << "\n";
  if (!f.report.empty()) {
    ordered_json config;
    config["manifest"] = f.manifest;
    config["image_check"] = !f.no_image_check;
    write_report(f.report, "stats", config, ordered_json::array(), ordered_json::parse(text));
  }
  return kOk;
}

struct SyntheticFlags {
  std::uint64_t seed = 0;
  std::size_t height = 35;
  std::size_t width = 35;
  std::size_t dim = 64;
  double noise = 0.0;
  std::vector<std::string> plants;
  bool distinct_signals = false;
  std::string out_dir = ".";
};

int cmd_gen_synthetic(const SyntheticFlags& f, std::ostream& out) {
  SyntheticSpec spec;
  spec.seed = f.seed;
  spec.height = f.height;
  spec.width = f.width;
  spec.dim = f.dim;
  spec.noise = f.noise;

  // Signals come from a stream separate from the fixture's own draws.
  PortableGaussian signal_rng(f.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<float> shared(f.dim);
  for (auto& v : shared) v = static_cast<float>(signal_rng.next());
  for (const auto& p : f.plants) {
    const auto c = parse_ints(p, 4, "i,j,h,w");
    if (c[0] < 0 || c[1] < 0 || c[2] < 1 || c[3] < 1) {
      fail(ErrorKind::Contract, "--plant must be i,j,h,w with h, w >= 1");
    }
    PlantedRegion planted;
    planted.region = {static_cast<std::size_t>(c[0]), static_cast<std::size_t>(c[1]),
                      static_cast<std::size_t>(c[2]), static_cast<std::size_t>(c[3])};
    if (f.distinct_signals && !spec.planted.empty()) {
      planted.signal.resize(f.dim);
      for (auto& v : planted.signal) v = static_cast<float>(signal_rng.next());
    } else {
      planted.signal = shared;
    }
    spec.planted.push_back(std::move(planted));
  }

  const SyntheticFixture fx = gen_synthetic(spec);
  const std::filesystem::path dir(f.out_dir);
  std::filesystem::create_directories(dir);
  write_tensor_file(to_tensor(fx.grid), dir / "grid.rtn");
  write_tensor_file(to_tensor(fx.query), dir / "query.rtn");

  ordered_json expected;
  expected["seed"] = f.seed;
  expected["height"] = f.height;
  expected["width"] = f.width;
  expected["dim"] = f.dim;
  expected["noise"] = f.noise;
  expected["expected"] = ordered_json::array();
  for (const auto& r : fx.expected) {
    expected["expected"].push_back({{"i", r.i}, {"j", r.j}, {"h", r.h}, {"w", r.w}});
  }
  std::ofstream ef(dir / "expected.json", std::ios::trunc);
  if (!ef) fail(ErrorKind::Io, "cannot write " + (dir / "expected.json").string());
  ef << expected.dump(2) << "\n";

  ordered_json rec;
  rec["grid"] = (dir / "grid.rtn").string();
  rec["query"] = (dir / "query.rtn").string();
  rec["expected"] = (dir / "expected.json").string();
  out << rec.dump() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sliding-window chart attribution and attribution metrics", "chartattrib"};
  app.set_version_flag("--version", CHARTATTRIB_VERSION);
  app.require_subcommand(1);

  AttributeFlags attr;
  auto* attribute = app.add_subcommand("attribute", "Locate chart regions matching text queries");
  attribute->add_option("--grid", attr.grid, "Patch-embedding grid (.rtn, rank 3)")->required();
  attribute->add_option("--query", attr.queries, "Query embedding (.rtn, rank 1); repeatable")
      ->required();
  add_window_flags(attribute, attr.window);
  attribute->add_option("--k", attr.k, "Regions per query")
      ->envname("CHARTATTRIB_K")
      ->capture_default_str();
  attribute->add_option("--nms-iou", attr.nms_iou, "Suppress windows overlapping a pick above this IOU")
      ->envname("CHARTATTRIB_NMS_IOU")
      ->capture_default_str();
  attribute->add_flag("--verify", attr.verify, "Cross-check the best region by brute force");
  attribute->add_option("--image", attr.image, "Chart PNG: pixel mapping and overlay source");
  attribute->add_option("--image-size", attr.image_size, "WxH for pixel mapping without an image");
  attribute->add_option("--overlay", attr.overlay, "Write the chart with result boxes drawn");
  attribute->add_option("--stroke", attr.stroke, "Overlay color RRGGBB")->capture_default_str();
  attribute->add_option("--stroke-width", attr.stroke_width, "Overlay line width")->capture_default_str();
  attribute->add_option("--report", attr.report, "Write a JSON run report here");

  IouFlags iou;
  auto* iou_cmd = app.add_subcommand("iou", "Multi-box IOU of predicted vs ground-truth regions");
  iou_cmd->add_option("--pred", iou.pred, "Predicted manifest")->required();
  iou_cmd->add_option("--gt", iou.gt, "Ground-truth manifest")->required();
  iou_cmd->add_flag("--no-image-check", iou.no_image_check, "Skip chart image existence checks");
  iou_cmd->add_option("--jobs", iou.jobs, "Worker threads")->envname("CHARTATTRIB_JOBS");
  iou_cmd->add_option("--report", iou.report, "Write a JSON run report here");

  ImageFlags mask_flags;
  auto* mask = app.add_subcommand("mask", "Zero every pixel outside the given regions");
  mask->add_option("--image", mask_flags.image, "Input PNG")->required();
  mask->add_option("--out", mask_flags.out, "Output PNG")->required();
  add_box_source_flags(mask, mask_flags.source);

  ImageFlags overlay_flags;
  auto* overlay = app.add_subcommand("overlay", "Draw region outlines on a chart");
  overlay->add_option("--image", overlay_flags.image, "Input PNG")->required();
  overlay->add_option("--out", overlay_flags.out, "Output PNG")->required();
  add_box_source_flags(overlay, overlay_flags.source);
  overlay->add_option("--color", overlay_flags.color, "Stroke color RRGGBB")->capture_default_str();
  overlay->add_option("--width", overlay_flags.width, "Stroke width in pixels")->capture_default_str();

  AgreementFlags agree;
  auto* agreement = app.add_subcommand("agreement", "Inter-annotator kappa and region IOU");
  agreement->add_option("--table", agree.table, "Counts a,b,c,d of a 2x2 yes/no table");
  agreement->add_option("--first", agree.first, "First annotator's manifest");
  agreement->add_option("--second", agree.second, "Second annotator's manifest");
  agreement->add_flag("--no-image-check", agree.no_image_check, "Skip chart image existence checks");
  agreement->add_option("--report", agree.report, "Write a JSON run report here");

  StatsFlags stats;
  auto* stats_cmd = app.add_subcommand("stats", "Per chart type dataset counts");
  stats_cmd->add_option("--manifest", stats.manifest, "Dataset manifest")->required();
  stats_cmd->add_flag("--no-image-check", stats.no_image_check, "Skip chart image existence checks");
  stats_cmd->add_option("--report", stats.report, "Write a JSON run report here");

  SyntheticFlags syn;
  auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic grid/query fixture");
  gen->add_option("--seed", syn.seed)->capture_default_str();
  gen->add_option("--height", syn.height)->capture_default_str();
  gen->add_option("--width", syn.width)->capture_default_str();
  gen->add_option("--dim", syn.dim)->capture_default_str();
  gen->add_option("--noise", syn.noise)->capture_default_str();
  gen->add_option("--plant", syn.plants, "Planted region i,j,h,w; repeatable");
  gen->add_flag("--distinct-signals", syn.distinct_signals,
                "Give each planted region after the first its own random signal");
  gen->add_option("--out-dir", syn.out_dir, "Directory for grid.rtn, query.rtn, expected.json")
      ->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kContractError;
  }

  try {
    if (*attribute) return cmd_attribute(attr, out, err);
    if (*iou_cmd) return cmd_iou(iou, out, err);
    if (*mask) return cmd_mask(mask_flags, out);
    if (*overlay) return cmd_overlay(overlay_flags, out);
    if (*agreement) return cmd_agreement(agree, out, err);
    if (*stats_cmd) return cmd_stats(stats, out);
    if (*gen) return cmd_gen_synthetic(syn, out);
  } catch (const Error& e) {
    err << "chartattrib: " << to_string(e.kind()) << " error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "chartattrib: io error: " << e.what() << "\n";
    return kIoError;
  }
  return kContractError;
}

}  // namespace chartattrib::cli

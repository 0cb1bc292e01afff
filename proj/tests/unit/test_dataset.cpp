#include <fstream>
#include <string>

#include "chartattrib/dataset.hpp"
#include "chartattrib/error.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace chartattrib;
namespace ts = chartattrib::testing;

namespace {

// One 700x700 line chart with one QA pair; `qa_extra` and `steps` splice in.
std::string tiny_manifest(const std::string& qa_box = "[10, 10, 50, 50]",
                          const std::string& chart_id = "c1",
                          const std::string& steps = "[]") {
  return R"({"version": "1", "box_convention": "half-open",
  "charts": [{"id": "c1", "file": "c1.png", "type": "line", "width": 700, "height": 700}],
  "qa": [{"id": "q1", "chart_id": ")" +
         chart_id + R"(", "question": "?", "answer": "!", "answer_regions": [)" + qa_box +
         R"(]}],
  "reasoning": )" + steps + "}";
}

ErrorKind kind_of(const std::string& text, const LoadOptions& opts = {false, false},
                  std::string* message = nullptr) {
  try {
    parse_manifest(text, ".", opts);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  FAIL("manifest was accepted");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("bundled sample loads") {
  const DatasetManifest m = load_manifest(ts::sample_dir() / "manifest.json");
  CHECK(m.charts.size() == 4);
  CHECK(m.qa_pairs.size() == 8);
  CHECK(m.reasoning_steps.size() == 14);
  REQUIRE(m.find_chart("c4") != nullptr);
  CHECK(m.find_chart("c4")->type == ChartType::Pie);
  REQUIRE(m.find_qa("q8") != nullptr);
  CHECK(m.find_qa("q8")->answer_regions.empty());
  CHECK(m.find_qa("nope") == nullptr);
}

TEST_CASE("chart type names") {
  for (ChartType t : kChartTypes) CHECK(parse_chart_type(to_string(t)) == t);
  CHECK_FALSE(parse_chart_type("scatter").has_value());
}

TEST_CASE("dangling chart id names the id") {
  std::string msg;
  CHECK(kind_of(tiny_manifest("[1, 1, 2, 2]", "c99"), {false, false}, &msg) ==
        ErrorKind::Integrity);
  CHECK(msg.find("c99") != std::string::npos);
}

TEST_CASE("dangling qa id in reasoning") {
  std::string msg;
  const std::string steps = R"([{"qa_id": "q42", "step": 1, "text": "t", "valid": true, "regions": []}])";
  CHECK(kind_of(tiny_manifest("[1, 1, 2, 2]", "c1", steps), {false, false}, &msg) ==
        ErrorKind::Integrity);
  CHECK(msg.find("q42") != std::string::npos);
}

TEST_CASE("out-of-frame ground truth box is rejected, predictions clamp") {
  std::string msg;
  CHECK(kind_of(tiny_manifest("[0, 0, 5000, 5000]"), {false, false}, &msg) ==
        ErrorKind::Validation);
  CHECK(msg.find("q1") != std::string::npos);
  const DatasetManifest m = parse_manifest(tiny_manifest("[0, 0, 5000, 5000], [800, 800, 900, 900]"),
                                           ".", {false, true});
  REQUIRE(m.qa_pairs[0].answer_regions.size() == 1);
  CHECK(m.qa_pairs[0].answer_regions[0] == PixelBox{0, 0, 700, 700});
}

TEST_CASE("format errors") {
  std::string msg;
  CHECK(kind_of("{\n\"version\": \"1\",\n  oops\n}", {false, false}, &msg) == ErrorKind::Format);
  CHECK(msg.find("line") != std::string::npos);
  CHECK(kind_of(tiny_manifest("[1, 2, 3]")) == ErrorKind::Format);
  std::string wrong_convention = tiny_manifest();
  wrong_convention.replace(wrong_convention.find("half-open"), 9, "inclusive");
  CHECK(kind_of(wrong_convention) == ErrorKind::Validation);
}

TEST_CASE("duplicate ids and chart without questions") {
  std::string dup = tiny_manifest();
  dup.replace(dup.find("\"qa\": ["), 7,
              R"("qa": [{"id": "q1", "chart_id": "c1", "question": "", "answer": "", "answer_regions": []},)");
  CHECK(kind_of(dup) == ErrorKind::Validation);
  std::string lonely = tiny_manifest();
  lonely.replace(lonely.find("\"charts\": ["), 11,
                 R"("charts": [{"id": "c2", "file": "c2.png", "type": "bar", "width": 9, "height": 9},)");
  CHECK(kind_of(lonely) == ErrorKind::Integrity);
}

TEST_CASE("step numbering must be contiguous from 1") {
  const std::string ok = R"([{"qa_id": "q1", "step": 2, "text": "b", "valid": true, "regions": []},
                             {"qa_id": "q1", "step": 1, "text": "a", "valid": false,
                              "error_category": "color mismatch", "regions": [[0, 0, 1, 1]]}])";
  const DatasetManifest m = parse_manifest(tiny_manifest("[1, 1, 2, 2]", "c1", ok), ".", {false, false});
  REQUIRE(m.reasoning_steps.size() == 2);
  const std::string gap = R"([{"qa_id": "q1", "step": 1, "text": "a", "valid": true, "regions": []},
                              {"qa_id": "q1", "step": 3, "text": "c", "valid": true, "regions": []}])";
  CHECK(kind_of(tiny_manifest("[1, 1, 2, 2]", "c1", gap)) == ErrorKind::Validation);
}

TEST_CASE("image checks") {
  const auto dir = ts::scratch_dir("dsimg");
  std::ofstream(dir / "m.json") << tiny_manifest();
  CHECK_THROWS_AS(load_manifest(dir / "m.json"), Error);  // c1.png missing
  std::filesystem::copy_file(ts::sample_dir() / "c1.png", dir / "c1.png");  // 350x280, not 700x700
  try {
    load_manifest(dir / "m.json");
    FAIL("dims mismatch accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
  }
  CHECK_NOTHROW(load_manifest(dir / "m.json", {false, false}));
  CHECK_THROWS_AS(load_manifest(dir / "absent.json"), Error);
}

TEST_CASE("compute_stats matches an independent walk of the JSON") {
  const auto path = ts::sample_dir() / "manifest.json";
  const DatasetStats s = compute_stats(load_manifest(path));
  const ts::RawCounts raw = ts::walk_manifest_json(path);
  for (ChartType t : kChartTypes) {
    const TypeCounts& c = s.of(t);
    const auto* r = raw.c[static_cast<int>(t)];
    CHECK(c.charts == r[0]);
    CHECK(c.qa_pairs == r[1]);
    CHECK(c.reasoning_steps == r[2]);
    CHECK(c.qa_regions == r[3]);
    CHECK(c.reasoning_regions == r[4]);
  }
  CHECK(s.grand_total == raw.grand);
  CHECK(s.grand_total == s.totals.sum());
  TypeCounts sum;
  for (const auto& c : s.per_type) sum += c;
  CHECK(sum == s.totals);
}

TEST_CASE("empty manifest has zero stats") {
  const DatasetManifest m = parse_manifest(
      R"({"version": "1", "box_convention": "half-open", "charts": [], "qa": [], "reasoning": []})",
      ".", {false, false});
  const DatasetStats s = compute_stats(m);
  CHECK(s.grand_total == 0);
  CHECK(s.totals == TypeCounts{});
}

TEST_CASE("reference per-type counts add up to the reference total") {
  TypeCounts line{500, 1000, 1773, 1465, 2691};
  TypeCounts bar{500, 1000, 1826, 2627, 4437};
  TypeCounts all = line;
  all += bar;
  CHECK(all == TypeCounts{1000, 2000, 3599, 4092, 7128});
  CHECK(all.sum() == 17819);
}

TEST_CASE("serialize then parse is a fixpoint") {
  const DatasetManifest m = load_manifest(ts::sample_dir() / "manifest.json");
  const std::string once = serialize_manifest(m);
  const DatasetManifest back = parse_manifest(once, m.base_dir);
  CHECK(serialize_manifest(back) == once);
  CHECK(compute_stats(back) == compute_stats(m));
  CHECK(stats_to_json(compute_stats(back)).find("\"grand_total\"") != std::string::npos);
}

#include <doctest.h>

#include <fstream>
#include <json.hpp>

#include "streamfuse/errors.hpp"
#include "streamfuse/fusion.hpp"
#include "test_util.hpp"

using namespace streamfuse;

namespace {

std::vector<ScoreMatrix> named_streams(const std::vector<std::string>& names,
                                       Eigen::Index videos, Eigen::Index classes,
                                       std::uint64_t seed) {
  std::vector<ScoreMatrix> streams;
  for (std::size_t i = 0; i < names.size(); ++i) {
    streams.push_back(testutil::make_scores(
        names[i], testutil::random_simplex_rows(videos, classes, seed + i), true));
  }
  return streams;
}

}  // namespace

TEST_CASE("plan orders the five streams by validation accuracy") {
  const std::vector<std::string> names = {"mbh", "c3d", "googlenet", "vgg16",
                                          "resnet"};
  const std::vector<StreamMeta> metas = {{"mbh", 0.5732},
                                         {"c3d", 0.6004},
                                         {"googlenet", 0.6713},
                                         {"vgg16", 0.6319},
                                         {"resnet", 0.7181}};
  const auto streams = named_streams(names, 4, 3, 10);
  const FusionPlan plan = plan_fusion(streams, metas);

  REQUIRE(plan.order.size() == 5);
  CHECK(plan.order[0].stream_name == "resnet");
  CHECK(plan.order[1].stream_name == "googlenet");
  CHECK(plan.order[2].stream_name == "vgg16");
  CHECK(plan.order[3].stream_name == "c3d");
  CHECK(plan.order[4].stream_name == "mbh");
  REQUIRE(plan.steps.size() == 4);
  CHECK(plan.steps[0].left == "resnet");
  CHECK(plan.steps[0].right == "googlenet");
  CHECK(plan.steps[3].right == "mbh");
  for (const auto& step : plan.steps) {
    const double total = step.left_weight + step.right_weight;
    CHECK(step.left_weight / total == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(step.right_weight / total == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("single stream gives a passthrough plan") {
  const auto streams = named_streams({"only"}, 3, 2, 20);
  const FusionPlan plan = plan_fusion(streams, {{"only", 0.6}});
  CHECK(plan.steps.empty());
  const ScoreMatrix fused = execute_plan(plan, streams);
  CHECK(fused.scores == streams[0].scores);
}

TEST_CASE("equal accuracies break ties lexicographically") {
  const auto streams = named_streams({"b", "a"}, 3, 2, 30);
  const FusionPlan plan = plan_fusion(streams, {{"b", 0.6}, {"a", 0.6}});
  CHECK(plan.order[0].stream_name == "a");
  CHECK(plan.steps[0].left == "a");
  CHECK(plan.steps[0].left_weight == 2.0);
}

TEST_CASE("pair fusion is the weighted average") {
  ScoreMatrix s1 = testutil::make_scores("x", Eigen::MatrixXd(1, 2));
  s1.scores << 0.6, 0.4;
  ScoreMatrix s2 = testutil::make_scores("y", Eigen::MatrixXd(1, 2));
  s2.scores << 0.2, 0.8;

  const ScoreMatrix fused = fuse_pair(s1, s2, 2.0, 1.0);
  CHECK(fused.scores(0, 0) == doctest::Approx(1.4 / 3.0).epsilon(1e-12));
  CHECK(fused.scores(0, 1) == doctest::Approx(1.6 / 3.0).epsilon(1e-12));
}

TEST_CASE("fusing a stream with itself is the identity") {
  const auto streams = named_streams({"s", "t"}, 5, 4, 40);
  ScoreMatrix copy = streams[0];
  copy.stream_name = "copy";
  const ScoreMatrix fused = fuse_pair(streams[0], copy, 7.3, 0.9);
  CHECK((fused.scores - streams[0].scores).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("row-stochastic inputs stay row-stochastic") {
  for (int trial = 0; trial < 10; ++trial) {
    const auto streams = named_streams({"a", "b"}, 100, 7, 50 + trial);
    const ScoreMatrix fused = fuse_pair(streams[0], streams[1], 2.0, 1.0);
    for (Eigen::Index r = 0; r < fused.scores.rows(); ++r) {
      CHECK(fused.scores.row(r).sum() == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("three identical streams fuse to the common stream") {
  const auto base = named_streams({"a"}, 6, 3, 60);
  std::vector<ScoreMatrix> streams;
  for (const char* name : {"a", "b", "c"}) {
    ScoreMatrix copy = base[0];
    copy.stream_name = name;
    streams.push_back(std::move(copy));
  }
  const FusionPlan plan =
      plan_fusion(streams, {{"a", 0.9}, {"b", 0.8}, {"c", 0.7}});
  const ScoreMatrix fused = execute_plan(plan, streams);
  CHECK((fused.scores - base[0].scores).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two streams execute as a single pair fusion") {
  const auto streams = named_streams({"a", "b"}, 8, 3, 70);
  const FusionPlan plan = plan_fusion(streams, {{"a", 0.9}, {"b", 0.5}});
  const ScoreMatrix by_plan = execute_plan(plan, streams);
  const ScoreMatrix direct = fuse_pair(streams[0], streams[1], 2.0, 1.0);
  CHECK((by_plan.scores - direct.scores).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("three-stream fold matches the hand formula") {
  const auto streams = named_streams({"a", "b", "c"}, 10, 4, 80);
  const FusionPlan plan =
      plan_fusion(streams, {{"a", 0.9}, {"b", 0.8}, {"c", 0.7}});
  const ScoreMatrix fused = execute_plan(plan, streams);

  const Eigen::MatrixXd expected =
      (2.0 * ((2.0 * streams[0].scores + streams[1].scores) / 3.0) +
       streams[2].scores) /
      3.0;
  CHECK((fused.scores - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fused entries stay inside the per-entry envelope") {
  const auto streams = named_streams({"a", "b", "c", "d"}, 30, 5, 90);
  const FusionPlan plan = plan_fusion(
      streams, {{"a", 0.9}, {"b", 0.8}, {"c", 0.7}, {"d", 0.6}});
  const ScoreMatrix fused = execute_plan(plan, streams);
  for (Eigen::Index r = 0; r < fused.scores.rows(); ++r) {
    for (Eigen::Index c = 0; c < fused.scores.cols(); ++c) {
      double lo = streams[0].scores(r, c), hi = lo;
      for (const auto& stream : streams) {
        lo = std::min(lo, stream.scores(r, c));
        hi = std::max(hi, stream.scores(r, c));
      }
      CHECK(fused.scores(r, c) >= lo - 1e-12);
      CHECK(fused.scores(r, c) <= hi + 1e-12);
    }
  }
}

TEST_CASE("scaling both weights leaves the fusion unchanged") {
  const auto streams = named_streams({"a", "b"}, 12, 3, 100);
  const ScoreMatrix base = fuse_pair(streams[0], streams[1], 2.0, 1.0);
  const ScoreMatrix scaled = fuse_pair(streams[0], streams[1], 20.0, 10.0);
  CHECK((base.scores - scaled.scores).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("unanimous argmax survives fusion") {
  std::vector<ScoreMatrix> streams;
  std::mt19937_64 rng(110);
  for (const char* name : {"a", "b", "c"}) {
    Eigen::MatrixXd m = testutil::random_simplex_rows(20, 4, rng());
    for (Eigen::Index r = 0; r < 20; ++r) m(r, r % 4) += 1.0;  // force argmax
    streams.push_back(testutil::make_scores(name, m));
  }
  const FusionPlan plan =
      plan_fusion(streams, {{"a", 0.9}, {"b", 0.8}, {"c", 0.7}});
  const ScoreMatrix fused = execute_plan(plan, streams);
  for (Eigen::Index r = 0; r < 20; ++r) {
    Eigen::Index top;
    fused.scores.row(r).maxCoeff(&top);
    CHECK(top == r % 4);
  }
}

TEST_CASE("plans are deterministic and explicit orders are honored") {
  const auto streams = named_streams({"a", "b", "c"}, 4, 2, 120);
  const std::vector<StreamMeta> metas = {{"a", 0.5}, {"b", 0.9}, {"c", 0.7}};
  const FusionPlan p1 = plan_fusion(streams, metas);
  const FusionPlan p2 = plan_fusion(streams, metas);
  REQUIRE(p1.order.size() == p2.order.size());
  for (std::size_t i = 0; i < p1.order.size(); ++i) {
    CHECK(p1.order[i].stream_name == p2.order[i].stream_name);
  }

  FusionConfig config;
  config.explicit_order = {"c", "a", "b"};
  const FusionPlan explicit_plan = plan_fusion(streams, metas, config);
  CHECK(explicit_plan.order[0].stream_name == "c");
  CHECK(explicit_plan.steps[0].right == "a");

  config.explicit_order = {"c", "a"};
  CHECK_THROWS_AS(plan_fusion(streams, metas, config), StreamError);
  config.explicit_order = {"c", "a", "ghost"};
  CHECK_THROWS_AS(plan_fusion(streams, metas, config), StreamError);
}

TEST_CASE("misaligned streams are rejected") {
  auto streams = named_streams({"a", "b"}, 4, 3, 130);
  streams[1].video_ids[2] = "other";
  CHECK_THROWS_AS(fuse_pair(streams[0], streams[1], 2, 1), StreamError);

  auto wide = named_streams({"a", "b"}, 4, 3, 131);
  wide[1].scores.conservativeResize(4, 4);
  CHECK_THROWS_AS(fuse_pair(wide[0], wide[1], 2, 1), StreamError);

  CHECK_THROWS_AS(fuse_pair(streams[0], streams[0], 0.0, 1.0), StreamError);
}

TEST_CASE("plan audit json records the fold") {
  testutil::TempDir dir("plan");
  const auto streams = named_streams({"a", "b", "c"}, 3, 2, 140);
  const FusionPlan plan =
      plan_fusion(streams, {{"a", 0.9}, {"b", 0.8}, {"c", 0.7}});
  const auto path = dir.path() / "fusion_plan.json";
  write_plan(plan, path);

  std::ifstream in(path);
  nlohmann::json doc;
  in >> doc;
  REQUIRE(doc.at("order").size() == 3);
  REQUIRE(doc.at("steps").size() == 2);
  CHECK(doc.at("steps")[0].at("left") == "a");
  CHECK(doc.at("steps")[1].at("result") == "a+b+c");
  CHECK(doc.at("steps")[0].at("normalized_weights")[0].get<double>() ==
        doctest::Approx(2.0 / 3.0));
}

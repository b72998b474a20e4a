#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <fstream>
#include <random>

#include "streamfuse/errors.hpp"
#include "streamfuse/svm.hpp"
#include "test_util.hpp"

using namespace streamfuse;

namespace {

// Projected gradient descent on the dual, run with synchronous full-gradient
// steps. Independent of the coordinate-descent implementation path.
Eigen::VectorXd pg_oracle_weights(const Eigen::MatrixXd& augmented,
                                  const Eigen::VectorXd& y, double C,
                                  double tolerance) {
  const Eigen::Index n = augmented.rows();
  Eigen::MatrixXd signed_x(n, augmented.cols());
  for (Eigen::Index i = 0; i < n; ++i) signed_x.row(i) = y(i) * augmented.row(i);

  const Eigen::MatrixXd q = signed_x * signed_x.transpose() +
                            Eigen::MatrixXd::Identity(n, n) / (2.0 * C);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q);
  const double step = 1.0 / eig.eigenvalues().maxCoeff();

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  for (int iter = 0; iter < 2000000; ++iter) {
    const Eigen::VectorXd grad = q * alpha - Eigen::VectorXd::Ones(n);
    double max_pg = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pg = alpha(i) == 0.0 ? std::min(grad(i), 0.0) : grad(i);
      max_pg = std::max(max_pg, std::abs(pg));
    }
    if (max_pg < tolerance) break;
    alpha = (alpha - step * grad).cwiseMax(0.0);
  }
  return signed_x.transpose() * alpha;
}

SvmConfig tight_config(double c) {
  SvmConfig config;
  config.C = c;
  config.tolerance = 1e-10;
  config.max_epochs = 200000;
  return config;
}

Eigen::MatrixXd augment(const Eigen::MatrixXf& x, bool bias) {
  Eigen::MatrixXd out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x.cast<double>();
  out.col(x.cols()) =
      bias ? Eigen::VectorXd::Ones(x.rows()) : Eigen::VectorXd::Zero(x.rows());
  return out;
}

}  // namespace

TEST_CASE("two-point problem matches the closed form w = 4C/(1+4C)") {
  Eigen::MatrixXf x(2, 1);
  x << 1, -1;
  const std::vector<std::int32_t> labels = {0, 1};  // class 0 at +1
  const std::vector<std::string> classes = {"pos", "neg"};

  for (const double c : {1.0, 100.0}) {
    SvmConfig config = tight_config(c);
    config.fit_bias = false;
    const SvmModel model = svm_train(x, labels, classes, config);
    const double expected = 4.0 * c / (1.0 + 4.0 * c);
    // class 0 sees y=+1 at x=+1: w* = 4C/(1+4C); class 1 is its mirror
    CHECK(model.weights(0, 0) == doctest::Approx(expected).epsilon(1e-6));
    CHECK(model.weights(1, 0) == doctest::Approx(-expected).epsilon(1e-6));
    CHECK(model.weights(0, 1) == 0.0);  // bias coordinate stays zero
  }
}

TEST_CASE("duplicating every point equals doubling C") {
  const Eigen::MatrixXf x = testutil::random_matrix(8, 3, 1000).cast<float>();
  std::vector<std::int32_t> labels;
  for (int i = 0; i < 8; ++i) labels.push_back(i % 2);
  const std::vector<std::string> classes = {"a", "b"};

  Eigen::MatrixXf doubled(16, 3);
  doubled << x, x;
  std::vector<std::int32_t> doubled_labels = labels;
  doubled_labels.insert(doubled_labels.end(), labels.begin(), labels.end());

  const SvmModel twice_c = svm_train(x, labels, classes, tight_config(2.0));
  const SvmModel duplicated =
      svm_train(doubled, doubled_labels, classes, tight_config(1.0));
  CHECK((twice_c.weights - duplicated.weights).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("primal objective matches the projected-gradient oracle") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 6 + static_cast<int>(rng() % 15);
    const int d = 2 + static_cast<int>(rng() % 7);
    const int k = 2 + static_cast<int>(rng() % 2);
    const Eigen::MatrixXf x =
        testutil::random_matrix(n, d, 1100 + trial).cast<float>();
    std::vector<std::int32_t> labels;
    for (int i = 0; i < n; ++i) {
      labels.push_back(static_cast<std::int32_t>(i % k));  // every class present
    }
    std::vector<std::string> classes;
    for (int c = 0; c < k; ++c) classes.push_back("c" + std::to_string(c));

    SvmConfig config = tight_config(1.0);
    config.tolerance = 1e-8;
    const SvmModel model = svm_train(x, labels, classes, config);

    const Eigen::MatrixXd augmented = augment(x, true);
    Eigen::VectorXd y(n);
    for (Eigen::Index c = 0; c < k; ++c) {
      for (int i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)] == c ? 1.0 : -1.0;
      const Eigen::VectorXd w = pg_oracle_weights(augmented, y, config.C, 1e-8);
      const double oracle = svm_primal_objective(augmented, y, w, config.C);
      CHECK(model.training_objective(c) ==
            doctest::Approx(oracle).epsilon(1e-3));
    }
  }
}

TEST_CASE("dual diagnostics: feasible ascent below the primal") {
  const Eigen::MatrixXf x = testutil::random_matrix(12, 4, 1200).cast<float>();
  std::vector<std::int32_t> labels;
  for (int i = 0; i < 12; ++i) labels.push_back(i % 3);
  const std::vector<std::string> classes = {"a", "b", "c"};

  SvmConfig config;
  config.C = 1.0;
  config.tolerance = 1e-6;
  std::vector<SvmClassTrace> traces;
  const SvmModel model = svm_train(x, labels, classes, config, &traces);

  REQUIRE(traces.size() == 3);
  for (std::size_t c = 0; c < 3; ++c) {
    const auto& trace = traces[c];
    REQUIRE(trace.epochs >= 1);
    // maximization form never decreases across epochs
    for (std::size_t e = 1; e < trace.dual_objective.size(); ++e) {
      CHECK(trace.dual_objective[e] >= trace.dual_objective[e - 1] - 1e-9);
    }
    // weak duality against the final primal objective
    for (const double dual : trace.dual_objective) {
      CHECK(dual <= model.training_objective(static_cast<Eigen::Index>(c)) + 1e-6);
    }
    CHECK(trace.max_projected_gradient.back() < config.tolerance);
  }
}

TEST_CASE("training classes in any order yields the identical model") {
  const Eigen::MatrixXf x = testutil::random_matrix(15, 4, 1300).cast<float>();
  std::vector<std::int32_t> labels;
  for (int i = 0; i < 15; ++i) labels.push_back(i % 3);

  const SvmModel model =
      svm_train(x, labels, {"a", "b", "c"}, tight_config(1.0));

  // isolate class 1 as a fresh binary problem: same unique optimum
  std::vector<std::int32_t> binary_labels;
  for (int i = 0; i < 15; ++i) binary_labels.push_back(labels[i] == 1 ? 1 : 0);
  const SvmModel isolated =
      svm_train(x, binary_labels, {"rest", "b"}, tight_config(1.0));
  CHECK((model.weights.row(1) - isolated.weights.row(1)).cwiseAbs().maxCoeff() <
        1e-6);
}

TEST_CASE("prediction margins") {
  SvmModel model;
  model.class_names = {"a", "b"};
  model.weights = Eigen::MatrixXd::Zero(2, 4);
  model.training_objective = Eigen::VectorXd::Zero(2);

  FeatureSet features;
  features.unit_kind = UnitKind::video;
  features.data = testutil::random_matrix(3, 3, 1400).cast<float>();
  features.video_index = {{"v0", 0, 1}, {"v1", 1, 1}, {"v2", 2, 1}};

  SUBCASE("zero weights give all-zero scores") {
    const ScoreMatrix scores = svm_predict(model, features);
    CHECK(scores.scores.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("zero input isolates the biases") {
    model.weights << 1, 2, 3, 0.25, 4, 5, 6, -0.5;
    features.data.setZero();
    const ScoreMatrix scores = svm_predict(model, features);
    for (int r = 0; r < 3; ++r) {
      CHECK(scores.scores(r, 0) == doctest::Approx(0.25).epsilon(1e-12));
      CHECK(scores.scores(r, 1) == doctest::Approx(-0.5).epsilon(1e-12));
    }
  }

  SUBCASE("random model matches the dense product") {
    model.weights = testutil::random_matrix(2, 4, 1401);
    const Eigen::MatrixXd margins = svm_margins(model, features.data);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 2; ++c) {
        double expected = model.weights(c, 3);
        for (int j = 0; j < 3; ++j) {
          expected += model.weights(c, j) * static_cast<double>(features.data(r, j));
        }
        CHECK(margins(r, c) == doctest::Approx(expected).epsilon(1e-10));
      }
    }
  }

  SUBCASE("dim mismatch is rejected") {
    Eigen::MatrixXf wrong = testutil::random_matrix(2, 5, 1402).cast<float>();
    CHECK_THROWS_AS(svm_margins(model, wrong), StreamError);
  }
}

TEST_CASE("appending zero columns leaves the predicted argmax unchanged") {
  const Eigen::MatrixXf x = testutil::random_matrix(10, 3, 1500).cast<float>();
  std::vector<std::int32_t> labels;
  for (int i = 0; i < 10; ++i) labels.push_back(i % 2);

  const SvmModel narrow = svm_train(x, labels, {"a", "b"}, tight_config(1.0));
  Eigen::MatrixXf padded(10, 5);
  padded.leftCols(3) = x;
  padded.rightCols(2).setZero();
  const SvmModel wide = svm_train(padded, labels, {"a", "b"}, tight_config(1.0));

  const Eigen::MatrixXd narrow_scores = svm_margins(narrow, x);
  const Eigen::MatrixXd wide_scores = svm_margins(wide, padded);
  for (int r = 0; r < 10; ++r) {
    Eigen::Index a, b;
    narrow_scores.row(r).maxCoeff(&a);
    wide_scores.row(r).maxCoeff(&b);
    CHECK(a == b);
  }
}

TEST_CASE("softmax normalization of score rows") {
  ScoreMatrix scores = testutil::make_scores("s", Eigen::MatrixXd::Zero(1, 2));

  SUBCASE("symmetric row splits evenly") {
    const ScoreMatrix out = normalize_scores(scores);
    CHECK(out.scores(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(out.scores(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(out.normalized);
  }

  SUBCASE("huge margins do not overflow") {
    scores.scores << 1000.0, 0.0;
    const ScoreMatrix out = normalize_scores(scores);
    CHECK(std::isfinite(out.scores(0, 0)));
    CHECK(out.scores(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.scores(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("argmax is preserved and rows sum to one") {
    ScoreMatrix random =
        testutil::make_scores("s", testutil::random_matrix(20, 5, 1600, 3.0));
    const ScoreMatrix out = normalize_scores(random);
    for (int r = 0; r < 20; ++r) {
      Eigen::Index before, after;
      random.scores.row(r).maxCoeff(&before);
      out.scores.row(r).maxCoeff(&after);
      CHECK(before == after);
      CHECK(out.scores.row(r).sum() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(out.scores.row(r).minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("svm rejects degenerate input") {
  const Eigen::MatrixXf x = testutil::random_matrix(4, 2, 1700).cast<float>();
  CHECK_THROWS_AS(
      svm_train(x, {0, 0, 0, 0}, {"a", "b"}, SvmConfig{}),
      StreamError);  // single class present
  CHECK_THROWS_AS(svm_train(x, {0, 1, 0, 1}, {"only"}, SvmConfig{}), StreamError);

  Eigen::MatrixXf bad = x;
  bad(0, 0) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(svm_train(bad, {0, 1, 0, 1}, {"a", "b"}, SvmConfig{}),
                  StreamError);
}

TEST_CASE("svm model persistence round-trips and checks its block") {
  testutil::TempDir dir("svm_io");
  const Eigen::MatrixXf x = testutil::random_matrix(12, 3, 1800).cast<float>();
  std::vector<std::int32_t> labels;
  for (int i = 0; i < 12; ++i) labels.push_back(i % 2);
  const SvmModel model = svm_train(x, labels, {"a", "b"}, tight_config(1.0));

  const auto path = dir.path() / "s.svm.json";
  save_svm(model, path);
  const SvmModel back = load_svm(path);
  CHECK(back.class_names == model.class_names);
  CHECK((svm_margins(back, x) - svm_margins(model, x)).cwiseAbs().maxCoeff() <
        1e-4);

  // tampering with the weights block must be detected
  std::ofstream tamper(dir.path() / "s.svm.weights.fmat",
                       std::ios::binary | std::ios::app);
  tamper << 'x';
  tamper.close();
  CHECK_THROWS_AS(load_svm(path), StreamError);
}

#include <doctest.h>

#include <Eigen/SVD>

#include "streamfuse/errors.hpp"
#include "streamfuse/pca.hpp"
#include "test_util.hpp"

using namespace streamfuse;

namespace {

// SVD-truncation reconstruction error, computed on a path fully independent
// of the covariance eigendecomposition the implementation uses.
double svd_truncation_error(const Eigen::MatrixXd& data, Eigen::Index rank) {
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mean;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::MatrixXd truncated = Eigen::MatrixXd::Zero(centered.rows(), centered.cols());
  for (Eigen::Index i = 0; i < rank; ++i) {
    truncated += svd.singularValues()(i) * svd.matrixU().col(i) *
                 svd.matrixV().col(i).transpose();
  }
  return (centered - truncated).norm();
}

double pca_reconstruction_error(const PcaModel& model, const Eigen::MatrixXd& data) {
  const Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd projected = pca_transform(model, data);
  return (centered - projected * model.components).norm();
}

}  // namespace

TEST_CASE("variance concentrated on one axis yields that axis") {
  Eigen::MatrixXd data(4, 2);
  data << 1, 0, -1, 0, 2, 0, -2, 0;
  const PcaModel model = pca_fit(data, 1);
  CHECK(model.mean(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(model.mean(1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(model.components(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(model.components(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("full-rank projection preserves pairwise distances") {
  const Eigen::MatrixXd data = testutil::random_matrix(10, 4, 21);
  const PcaModel model = pca_fit(data, 4);
  const Eigen::MatrixXd projected = pca_transform(model, data);
  for (Eigen::Index a = 0; a < data.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < data.rows(); ++b) {
      const double original = (data.row(a) - data.row(b)).norm();
      const double mapped = (projected.row(a) - projected.row(b)).norm();
      CHECK(mapped == doctest::Approx(original).epsilon(1e-8));
    }
  }
}

TEST_CASE("reconstruction error matches svd truncation") {
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd data = testutil::random_matrix(20, 8, 30 + trial);
    const PcaModel model = pca_fit(data, 3);
    CHECK(pca_reconstruction_error(model, data) ==
          doctest::Approx(svd_truncation_error(data, 3)).epsilon(1e-8));
  }
}

TEST_CASE("transform centers, aligns components, matches dense multiply") {
  const Eigen::MatrixXd data = testutil::random_matrix(12, 6, 40);
  const PcaModel model = pca_fit(data, 4);

  CHECK(pca_transform(model, model.mean.transpose()).cwiseAbs().maxCoeff() <
        1e-12);

  const Eigen::MatrixXd shifted =
      model.mean.transpose() + model.components.row(0);
  const Eigen::MatrixXd mapped = pca_transform(model, shifted);
  CHECK(mapped(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
  for (Eigen::Index c = 1; c < 4; ++c) {
    CHECK(mapped(0, c) == doctest::Approx(0.0).epsilon(1e-10));
  }

  const Eigen::MatrixXd x = testutil::random_matrix(5, 6, 41);
  const Eigen::MatrixXd by_hand =
      (x.rowwise() - model.mean.transpose()) * model.components.transpose();
  CHECK((pca_transform(model, x) - by_hand).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pca invariants: orthonormal rows, ordered variance, centered output") {
  const Eigen::MatrixXd data = testutil::random_matrix(30, 7, 50);
  const PcaModel model = pca_fit(data, 5);

  const Eigen::MatrixXd gram = model.components * model.components.transpose();
  CHECK((gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-8);

  for (Eigen::Index i = 1; i < 5; ++i) {
    CHECK(model.explained_variance(i) <= model.explained_variance(i - 1) + 1e-12);
  }

  const Eigen::MatrixXd projected = pca_transform(model, data);
  CHECK(projected.colwise().mean().cwiseAbs().maxCoeff() < 1e-8);

  // sign convention: first nonzero coordinate of each component positive
  for (Eigen::Index r = 0; r < model.components.rows(); ++r) {
    for (Eigen::Index c = 0; c < model.components.cols(); ++c) {
      if (std::abs(model.components(r, c)) > 1e-12) {
        CHECK(model.components(r, c) > 0.0);
        break;
      }
    }
  }
}

TEST_CASE("subspace iteration path agrees with the dense path") {
  const Eigen::MatrixXd data = testutil::random_matrix(40, 12, 60);
  const PcaModel dense = pca_fit(data, 3);
  PcaOptions options;
  options.dense_threshold = 4;  // force the iterative solver
  const PcaModel iterative = pca_fit(data, 3, options);

  for (Eigen::Index r = 0; r < 3; ++r) {
    const double alignment =
        std::abs(dense.components.row(r).dot(iterative.components.row(r)));
    CHECK(alignment == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(iterative.explained_variance(r) ==
          doctest::Approx(dense.explained_variance(r)).epsilon(1e-6));
  }
}

TEST_CASE("pca rejects bad shapes and degenerate data") {
  const Eigen::MatrixXd data = testutil::random_matrix(5, 3, 70);
  CHECK_THROWS_AS(pca_fit(data, 4), StreamError);   // r > dim
  CHECK_THROWS_AS(pca_fit(data, 0), StreamError);
  CHECK_THROWS_AS(pca_fit(testutil::random_matrix(1, 3, 71), 1), StreamError);
  CHECK_THROWS_AS(pca_fit(Eigen::MatrixXd::Ones(6, 3), 2), StreamError);

  const Eigen::MatrixXd tall = testutil::random_matrix(3, 8, 72);
  CHECK_THROWS_AS(pca_fit(tall, 4), StreamError);   // r > unit_count

  const PcaModel model = pca_fit(data, 2);
  CHECK_THROWS_AS(pca_transform(model, testutil::random_matrix(2, 4, 73)),
                  StreamError);
}

TEST_CASE("pca model persistence round-trips") {
  testutil::TempDir dir("pca_io");
  const Eigen::MatrixXd data = testutil::random_matrix(25, 6, 80);
  const PcaModel model = pca_fit(data, 3);
  const auto path = dir.path() / "enc.pca.json";
  save_pca(model, path);
  const PcaModel back = load_pca(path);

  CHECK(back.input_dim() == 6);
  CHECK(back.output_dim() == 3);
  // float32 block storage: values match to float precision, rows stay orthonormal
  CHECK((back.mean - model.mean).cwiseAbs().maxCoeff() < 1e-6);
  const Eigen::MatrixXd gram = back.components * back.components.transpose();
  CHECK((gram - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-8);

  const Eigen::MatrixXd x = testutil::random_matrix(4, 6, 81);
  CHECK((pca_transform(back, x) - pca_transform(model, x)).cwiseAbs().maxCoeff() <
        1e-4);
}

#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "streamfuse/errors.hpp"
#include "streamfuse/vlad.hpp"
#include "test_util.hpp"

using namespace streamfuse;

namespace {

// Exhaustive-sort oracle: per descriptor, sort *all* center distances and
// accumulate residuals explicitly, then apply the two normalizations from
// their definitions. Shares no code with the implementation path.
Eigen::VectorXd vlad_oracle(const Eigen::MatrixXd& descriptors,
                            const Eigen::MatrixXd& centers, int k,
                            bool normalize) {
  const Eigen::Index kc = centers.rows();
  const Eigen::Index dim = centers.cols();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(kc * dim);

  for (Eigen::Index i = 0; i < descriptors.rows(); ++i) {
    std::vector<std::pair<double, Eigen::Index>> ranked;
    for (Eigen::Index c = 0; c < kc; ++c) {
      double dist = 0.0;
      for (Eigen::Index j = 0; j < dim; ++j) {
        const double diff = descriptors(i, j) - centers(c, j);
        dist += diff * diff;
      }
      ranked.emplace_back(dist, c);
    }
    std::sort(ranked.begin(), ranked.end());
    for (int r = 0; r < k; ++r) {
      const Eigen::Index c = ranked[static_cast<std::size_t>(r)].second;
      for (Eigen::Index j = 0; j < dim; ++j) {
        out(c * dim + j) += descriptors(i, j) - centers(c, j);
      }
    }
  }
  if (!normalize) return out;

  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out(i) = (out(i) < 0 ? -1.0 : 1.0) * std::sqrt(std::abs(out(i)));
  }
  for (Eigen::Index c = 0; c < kc; ++c) {
    double norm = 0.0;
    for (Eigen::Index j = 0; j < dim; ++j) norm += out(c * dim + j) * out(c * dim + j);
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (Eigen::Index j = 0; j < dim; ++j) out(c * dim + j) /= norm;
    }
  }
  return out;
}

Codebook two_center_book() {
  Codebook codebook;
  codebook.centers.resize(2, 2);
  codebook.centers << 0, 0, 10, 10;
  return codebook;
}

}  // namespace

TEST_CASE("single assignment with a unit residual") {
  Eigen::MatrixXd descriptor(1, 2);
  descriptor << 1, 0;
  const Eigen::VectorXd raw = vlad_k_accumulate(descriptor, two_center_book(), 1);
  Eigen::VectorXd expected(4);
  expected << 1, 0, 0, 0;
  CHECK((raw - expected).cwiseAbs().maxCoeff() < 1e-15);

  // power + intra normalization leave this particular vector unchanged
  const Eigen::VectorXd encoded = vlad_k_encode(descriptor, two_center_book(), 1);
  CHECK((encoded - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("k = 2 accumulates residuals to both centers") {
  Eigen::MatrixXd descriptor(1, 2);
  descriptor << 1, 0;
  const Eigen::VectorXd raw = vlad_k_accumulate(descriptor, two_center_book(), 2);
  Eigen::VectorXd expected(4);
  expected << 1, 0, -9, -10;
  CHECK((raw - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("vlad-k equals the exhaustive-sort oracle") {
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd descriptors =
        testutil::random_matrix(50, 4, 200 + trial);
    Codebook codebook;
    codebook.centers = testutil::random_matrix(8, 4, 500 + trial);

    const Eigen::VectorXd raw = vlad_k_accumulate(descriptors, codebook, 3);
    const Eigen::VectorXd raw_expected =
        vlad_oracle(descriptors, codebook.centers, 3, false);
    CHECK((raw - raw_expected).cwiseAbs().maxCoeff() <= 1e-10);

    const Eigen::VectorXd encoded = vlad_k_encode(descriptors, codebook, 3);
    const Eigen::VectorXd encoded_expected =
        vlad_oracle(descriptors, codebook.centers, 3, true);
    CHECK((encoded - encoded_expected).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("vlad output shape and block norms") {
  const Eigen::MatrixXd descriptors = testutil::random_matrix(20, 3, 301);
  Codebook codebook;
  codebook.centers = testutil::random_matrix(6, 3, 302);
  const Eigen::VectorXd encoded = vlad_k_encode(descriptors, codebook, 2);
  REQUIRE(encoded.size() == 18);
  for (Eigen::Index c = 0; c < 6; ++c) {
    const double norm = encoded.segment(c * 3, 3).norm();
    if (norm > 0.0) CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("descriptor order does not change the encoding") {
  const Eigen::MatrixXd descriptors = testutil::random_matrix(30, 3, 303);
  Codebook codebook;
  codebook.centers = testutil::random_matrix(5, 3, 304);
  Eigen::MatrixXd reversed(descriptors.rows(), descriptors.cols());
  for (Eigen::Index i = 0; i < descriptors.rows(); ++i) {
    reversed.row(i) = descriptors.row(descriptors.rows() - 1 - i);
  }
  const Eigen::VectorXd a = vlad_k_encode(descriptors, codebook, 2);
  const Eigen::VectorXd b = vlad_k_encode(reversed, codebook, 2);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("power normalization examples") {
  Eigen::VectorXd v(3);
  v << -4, 0, 9;
  const Eigen::VectorXd out = power_normalize(v);
  CHECK(out(0) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(out(1) == 0.0);
  CHECK(out(2) == doctest::Approx(3.0).epsilon(1e-15));

  CHECK(power_normalize(Eigen::VectorXd::Zero(4)).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd fixed(3);
  fixed << -1, 0, 1;
  CHECK((power_normalize(fixed) - fixed).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("power normalization applied twice is the fourth root") {
  const Eigen::VectorXd v = testutil::random_matrix(32, 1, 305).col(0);
  const Eigen::VectorXd twice = power_normalize(power_normalize(v));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double expected =
        (v(i) < 0 ? -1.0 : (v(i) > 0 ? 1.0 : 0.0)) * std::pow(std::abs(v(i)), 0.25);
    CHECK(twice(i) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("vlad argument validation") {
  Codebook codebook = two_center_book();
  CHECK_THROWS_AS(vlad_k_encode(Eigen::MatrixXd::Zero(1, 3), codebook, 1),
                  StreamError);  // dim mismatch
  CHECK_THROWS_AS(vlad_k_encode(Eigen::MatrixXd::Zero(1, 2), codebook, 3),
                  StreamError);  // k > centers
  CHECK_THROWS_AS(vlad_k_encode(Eigen::MatrixXd::Zero(0, 2), codebook, 1),
                  StreamError);  // no descriptors
}

#include "streamfuse/kmeans.hpp"

#include <fstream>
#include <random>

#include <json.hpp>

#include "streamfuse/errors.hpp"
#include "streamfuse/matrix_io.hpp"

namespace streamfuse {

using nlohmann::json;

namespace {

// Squared distances from every point to every center, one center at a time
// to keep memory at n x K.
Eigen::MatrixXd pairwise_sq_dist(const Eigen::MatrixXd& data,
                                 const Eigen::MatrixXd& centers) {
  Eigen::MatrixXd dist(data.rows(), centers.rows());
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    dist.col(c) = (data.rowwise() - centers.row(c)).rowwise().squaredNorm();
  }
  return dist;
}

Eigen::MatrixXd init_plus_plus(const Eigen::MatrixXd& data,
                               Eigen::Index num_centers, std::mt19937_64& rng) {
  const Eigen::Index n = data.rows();
  Eigen::MatrixXd centers(num_centers, data.cols());

  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = data.row(first(rng));

  Eigen::VectorXd min_dist =
      (data.rowwise() - centers.row(0)).rowwise().squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index k = 1; k < num_centers; ++k) {
    const double total = min_dist.sum();
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      // D^2 sampling: walk the cumulative mass.
      const double target = unit(rng) * total;
      double cumulative = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        cumulative += min_dist(i);
        if (cumulative >= target) {
          chosen = i;
          break;
        }
        chosen = i;
      }
    } else {
      // All remaining mass is zero (duplicate points); pick round-robin.
      chosen = k % n;
    }
    centers.row(k) = data.row(chosen);
    min_dist = min_dist.cwiseMin(
        (data.rowwise() - centers.row(k)).rowwise().squaredNorm());
  }
  return centers;
}

}  // namespace

Eigen::Index nearest_center(const Codebook& codebook,
                            const Eigen::RowVectorXd& point) {
  Eigen::Index best = 0;
  double best_dist = (point - codebook.centers.row(0)).squaredNorm();
  for (Eigen::Index c = 1; c < codebook.centers.rows(); ++c) {
    const double d = (point - codebook.centers.row(c)).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best = c;
    }
  }
  return best;
}

KmeansResult kmeans_fit(const Eigen::MatrixXd& data, Eigen::Index num_centers,
                        std::uint64_t seed, int max_iterations, double tol) {
  const Eigen::Index n = data.rows();
  if (num_centers < 1) {
    raise(ErrorCode::dim_mismatch, "kmeans needs at least one center");
  }
  if (n < num_centers) {
    raise(ErrorCode::degenerate_data,
          "kmeans got " + std::to_string(n) + " points for " +
              std::to_string(num_centers) + " centers");
  }
  if (!data.allFinite()) {
    raise(ErrorCode::non_finite, "kmeans input has non-finite values");
  }

  std::mt19937_64 rng(seed);
  KmeansResult result;
  Eigen::MatrixXd centers = init_plus_plus(data, num_centers, rng);

  std::vector<Eigen::Index> assignment(static_cast<std::size_t>(n), 0);
  Eigen::MatrixXd new_centers(num_centers, data.cols());
  Eigen::VectorXd counts(num_centers);

  for (int iter = 0; iter < max_iterations; ++iter) {
    const Eigen::MatrixXd dist = pairwise_sq_dist(data, centers);

    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < num_centers; ++c) {
        if (dist(i, c) < dist(i, best)) best = c;  // strict: ties keep lowest
      }
      assignment[static_cast<std::size_t>(i)] = best;
    }

    // Empty clusters take the point currently farthest from its center.
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    for (Eigen::Index c = 0; c < num_centers; ++c) {
      bool empty = true;
      for (Eigen::Index i = 0; i < n && empty; ++i) {
        if (assignment[static_cast<std::size_t>(i)] == c) empty = false;
      }
      if (!empty) continue;
      Eigen::Index farthest = -1;
      double far_dist = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (taken[static_cast<std::size_t>(i)]) continue;
        const double d = dist(i, assignment[static_cast<std::size_t>(i)]);
        if (d > far_dist) {
          far_dist = d;
          farthest = i;
        }
      }
      if (farthest >= 0) {
        assignment[static_cast<std::size_t>(farthest)] = c;
        taken[static_cast<std::size_t>(farthest)] = true;
      }
    }

    new_centers.setZero();
    counts.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index c = assignment[static_cast<std::size_t>(i)];
      new_centers.row(c) += data.row(i);
      counts(c) += 1.0;
    }
    double movement = 0.0;
    for (Eigen::Index c = 0; c < num_centers; ++c) {
      if (counts(c) > 0) new_centers.row(c) /= counts(c);
      else new_centers.row(c) = centers.row(c);
      movement = std::max(movement, (new_centers.row(c) - centers.row(c)).norm());
    }
    centers = new_centers;

    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      inertia +=
          (data.row(i) - centers.row(assignment[static_cast<std::size_t>(i)]))
              .squaredNorm();
    }
    result.inertia.push_back(inertia);
    result.iterations = iter + 1;

    if (movement < tol) break;
  }

  result.codebook.centers = std::move(centers);
  return result;
}

void save_codebook(const Codebook& codebook,
                   const std::filesystem::path& json_path) {
  const auto stem = json_path.parent_path() / json_path.stem();
  const auto centers_path = std::filesystem::path(stem.string() + ".centers.fmat");
  write_fmat(centers_path, codebook.centers.cast<float>(), UnitKind::video);

  json doc;
  doc["type"] = "codebook";
  doc["num_centers"] = codebook.num_centers();
  doc["dim"] = codebook.dim();
  doc["centers_file"] = centers_path.filename().string();
  doc["checksum"] = file_checksum(centers_path);

  std::ofstream out(json_path);
  if (!out) raise(ErrorCode::missing_data, "cannot write " + json_path.string());
  out << doc.dump(2) << '\n';
}

Codebook load_codebook(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) raise(ErrorCode::missing_data, "cannot open " + json_path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    raise(ErrorCode::bad_format, json_path.string() + ": " + e.what());
  }
  if (doc.value("type", "") != "codebook") {
    raise(ErrorCode::bad_format, json_path.string() + ": not a codebook descriptor");
  }
  const auto centers_path =
      json_path.parent_path() / doc.at("centers_file").get<std::string>();
  if (file_checksum(centers_path) != doc.at("checksum").get<std::string>()) {
    raise(ErrorCode::checksum_mismatch,
          json_path.string() + ": centers block checksum mismatch");
  }
  Codebook codebook;
  codebook.centers = read_fmat(centers_path).cast<double>();
  return codebook;
}

}  // namespace streamfuse

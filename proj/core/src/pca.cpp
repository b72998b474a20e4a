#include "streamfuse/pca.hpp"

#include <Eigen/Dense>
#include <fstream>
#include <random>

#include <json.hpp>

#include "streamfuse/errors.hpp"
#include "streamfuse/matrix_io.hpp"

namespace streamfuse {

using nlohmann::json;

namespace {

void fix_component_signs(Eigen::MatrixXd& components) {
  constexpr double kZero = 1e-12;
  for (Eigen::Index r = 0; r < components.rows(); ++r) {
    for (Eigen::Index c = 0; c < components.cols(); ++c) {
      const double v = components(r, c);
      if (std::abs(v) > kZero) {
        if (v < 0) components.row(r) = -components.row(r);
        break;
      }
    }
  }
}

// Top-r eigenpairs of the d x d covariance, formed explicitly.
void eig_dense(const Eigen::MatrixXd& centered, Eigen::Index out_dim, double scale,
               Eigen::MatrixXd& components, Eigen::VectorXd& variance) {
  const Eigen::MatrixXd cov = (centered.transpose() * centered) * scale;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    raise(ErrorCode::numeric_failure, "covariance eigendecomposition failed");
  }
  const Eigen::Index d = cov.rows();
  components.resize(out_dim, d);
  variance.resize(out_dim);
  for (Eigen::Index i = 0; i < out_dim; ++i) {
    // Eigen returns eigenvalues in increasing order.
    components.row(i) = solver.eigenvectors().col(d - 1 - i).transpose();
    variance(i) = std::max(0.0, solver.eigenvalues()(d - 1 - i));
  }
}

// Seeded subspace iteration against the implicit covariance operator
// v -> X^T (X v) * scale; never forms the d x d matrix.
void eig_subspace(const Eigen::MatrixXd& centered, Eigen::Index out_dim,
                  double scale, const PcaOptions& options,
                  Eigen::MatrixXd& components, Eigen::VectorXd& variance) {
  const Eigen::Index d = centered.cols();
  std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::MatrixXd basis(d, out_dim);
  for (Eigen::Index c = 0; c < out_dim; ++c) {
    for (Eigen::Index r = 0; r < d; ++r) basis(r, c) = gauss(rng);
  }
  basis = Eigen::HouseholderQR<Eigen::MatrixXd>(basis)
              .householderQ() *
          Eigen::MatrixXd::Identity(d, out_dim);

  Eigen::VectorXd ritz_prev = Eigen::VectorXd::Zero(out_dim);
  Eigen::MatrixXd applied;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    applied = (centered.transpose() * (centered * basis)) * scale;
    basis = Eigen::HouseholderQR<Eigen::MatrixXd>(applied)
                .householderQ() *
            Eigen::MatrixXd::Identity(d, out_dim);

    small.compute(basis.transpose() *
                  ((centered.transpose() * (centered * basis)) * scale));
    Eigen::VectorXd ritz = small.eigenvalues().reverse();
    const double change = (ritz - ritz_prev).cwiseAbs().maxCoeff();
    const double span = std::max(1.0, ritz.cwiseAbs().maxCoeff());
    ritz_prev = ritz;
    if (change < options.tolerance * span) break;
  }

  // Rayleigh-Ritz rotation aligns the basis with the eigenvectors.
  small.compute(basis.transpose() *
                ((centered.transpose() * (centered * basis)) * scale));
  components.resize(out_dim, d);
  variance.resize(out_dim);
  for (Eigen::Index i = 0; i < out_dim; ++i) {
    components.row(i) =
        (basis * small.eigenvectors().col(out_dim - 1 - i)).transpose();
    variance(i) = std::max(0.0, small.eigenvalues()(out_dim - 1 - i));
  }
}

}  // namespace

PcaModel pca_fit(const Eigen::MatrixXd& data, Eigen::Index out_dim,
                 const PcaOptions& options) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (n < 2) {
    raise(ErrorCode::degenerate_data, "pca_fit needs at least 2 rows");
  }
  if (out_dim < 1 || out_dim > std::min(n, d)) {
    raise(ErrorCode::dim_mismatch,
          "pca out_dim " + std::to_string(out_dim) + " not in [1, min(" +
              std::to_string(d) + ", " + std::to_string(n) + ")]");
  }
  if (!data.allFinite()) {
    raise(ErrorCode::non_finite, "pca_fit input has non-finite values");
  }

  PcaModel model;
  model.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();
  if (centered.cwiseAbs().maxCoeff() == 0.0) {
    raise(ErrorCode::degenerate_data, "pca_fit input rows are all identical");
  }

  const double scale = 1.0 / static_cast<double>(n - 1);
  if (d <= options.dense_threshold) {
    eig_dense(centered, out_dim, scale, model.components,
              model.explained_variance);
  } else {
    eig_subspace(centered, out_dim, scale, options, model.components,
                 model.explained_variance);
  }
  fix_component_signs(model.components);
  return model;
}

PcaModel pca_fit(const FeatureSet& data, Eigen::Index out_dim,
                 const PcaOptions& options) {
  return pca_fit(data.data.cast<double>(), out_dim, options);
}

Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& data) {
  if (data.cols() != model.input_dim()) {
    raise(ErrorCode::dim_mismatch,
          "pca_transform got dim " + std::to_string(data.cols()) + ", model has " +
              std::to_string(model.input_dim()));
  }
  return (data.rowwise() - model.mean.transpose()) * model.components.transpose();
}

void save_pca(const PcaModel& model, const std::filesystem::path& json_path) {
  const auto stem = json_path.parent_path() / json_path.stem();
  const auto mean_path = std::filesystem::path(stem.string() + ".mean.fmat");
  const auto comp_path = std::filesystem::path(stem.string() + ".components.fmat");

  write_fmat(mean_path, model.mean.transpose().cast<float>(), UnitKind::video);
  write_fmat(comp_path, model.components.cast<float>(), UnitKind::video);

  json doc;
  doc["type"] = "pca";
  doc["input_dim"] = model.input_dim();
  doc["output_dim"] = model.output_dim();
  doc["mean_file"] = mean_path.filename().string();
  doc["components_file"] = comp_path.filename().string();
  doc["checksums"] = {{"mean", file_checksum(mean_path)},
                      {"components", file_checksum(comp_path)}};
  std::vector<double> variance(model.explained_variance.data(),
                               model.explained_variance.data() +
                                   model.explained_variance.size());
  doc["explained_variance"] = variance;

  std::ofstream out(json_path);
  if (!out) raise(ErrorCode::missing_data, "cannot write " + json_path.string());
  out << doc.dump(2) << '\n';
}

PcaModel load_pca(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) raise(ErrorCode::missing_data, "cannot open " + json_path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    raise(ErrorCode::bad_format, json_path.string() + ": " + e.what());
  }
  if (doc.value("type", "") != "pca") {
    raise(ErrorCode::bad_format, json_path.string() + ": not a pca descriptor");
  }

  const auto dir = json_path.parent_path();
  const auto mean_path = dir / doc.at("mean_file").get<std::string>();
  const auto comp_path = dir / doc.at("components_file").get<std::string>();
  if (file_checksum(mean_path) != doc.at("checksums").at("mean").get<std::string>() ||
      file_checksum(comp_path) !=
          doc.at("checksums").at("components").get<std::string>()) {
    raise(ErrorCode::checksum_mismatch,
          json_path.string() + ": model block checksum mismatch");
  }

  PcaModel model;
  model.mean = read_fmat(mean_path).row(0).transpose().cast<double>();
  model.components = read_fmat(comp_path).cast<double>();
  const auto variance = doc.at("explained_variance").get<std::vector<double>>();
  model.explained_variance =
      Eigen::Map<const Eigen::VectorXd>(variance.data(),
                                        static_cast<Eigen::Index>(variance.size()));

  // float32 storage rounds the rows slightly off orthonormal; re-orthonormalize
  // so loaded models satisfy the same contract as fitted ones.
  for (Eigen::Index r = 0; r < model.components.rows(); ++r) {
    for (Eigen::Index p = 0; p < r; ++p) {
      model.components.row(r) -=
          model.components.row(r).dot(model.components.row(p)) *
          model.components.row(p);
    }
    model.components.row(r).normalize();
  }
  return model;
}

}  // namespace streamfuse

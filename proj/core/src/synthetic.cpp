#include "streamfuse/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "streamfuse/errors.hpp"

namespace streamfuse {

using nlohmann::json;

namespace {

constexpr std::uint64_t kSubsetSalt[3] = {0x7261696eull, 0x76616c69ull,
                                          0x74657374ull};

double gumbel(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(std::numeric_limits<double>::min(),
                                              1.0);
  return -std::log(-std::log(unit(rng)));
}

// Under iid Gumbel logits with the true class shifted by `separation`,
// P(argmax = truth) = e^s / (e^s + K - 1). Bisection keeps working if the
// noise model changes to something without a closed form.
double accuracy_for_separation(double separation, Eigen::Index num_classes) {
  const double e = std::exp(separation);
  return e / (e + static_cast<double>(num_classes - 1));
}

double calibrate_separation(double target, Eigen::Index num_classes) {
  double lo = 0.0, hi = 60.0;
  if (target >= accuracy_for_separation(hi, num_classes)) return hi;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (accuracy_for_separation(mid, num_classes) < target) lo = mid;
    else hi = mid;
    if (hi - lo < 1e-13) break;
  }
  return 0.5 * (lo + hi);
}

// The `count` videos a stream gets wrong: lowest blend of a shared
// per-video draw and a private per-stream draw. complementarity = 1 makes
// the blend purely shared, so equal error counts give equal error sets.
std::vector<bool> designate_errors(const std::vector<double>& shared,
                                   std::vector<double> private_draw,
                                   double complementarity, std::int64_t count) {
  const std::size_t n = shared.size();
  std::vector<double> blend(n);
  for (std::size_t i = 0; i < n; ++i) {
    blend[i] = complementarity * shared[i] +
               (1.0 - complementarity) * private_draw[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&blend](std::size_t a, std::size_t b) {
    return blend[a] < blend[b];
  });
  std::vector<bool> is_error(n, false);
  for (std::int64_t i = 0; i < count && i < static_cast<std::int64_t>(n); ++i) {
    is_error[order[static_cast<std::size_t>(i)]] = true;
  }
  return is_error;
}

ScoreMatrix draw_scores(const std::string& stream_name,
                        const std::vector<std::string>& video_ids,
                        const std::vector<std::int32_t>& labels,
                        Eigen::Index num_classes, double separation,
                        const std::vector<bool>& is_error,
                        std::mt19937_64& rng) {
  ScoreMatrix out;
  out.stream_name = stream_name;
  out.video_ids = video_ids;
  out.scores.resize(static_cast<Eigen::Index>(video_ids.size()), num_classes);
  out.normalized = true;

  Eigen::VectorXd logits(num_classes);
  for (std::size_t v = 0; v < video_ids.size(); ++v) {
    const Eigen::Index label = labels[v];
    for (Eigen::Index c = 0; c < num_classes; ++c) logits(c) = gumbel(rng);
    logits(label) += separation;

    Eigen::Index top = 0;
    logits.maxCoeff(&top);
    if (!is_error[v] && top != label) {
      std::swap(logits(label), logits(top));
    } else if (is_error[v] && top == label) {
      // Demote the true class to the runner-up's value.
      Eigen::Index second = label == 0 ? 1 : 0;
      for (Eigen::Index c = 0; c < num_classes; ++c) {
        if (c != label && logits(c) > logits(second)) second = c;
      }
      std::swap(logits(label), logits(second));
    }

    const double shift = logits.maxCoeff();
    Eigen::VectorXd row = (logits.array() - shift).exp();
    out.scores.row(static_cast<Eigen::Index>(v)) =
        (row / row.sum()).transpose();
  }
  return out;
}

}  // namespace

SyntheticDataset generate_synthetic(const SynthSpec& spec) {
  const Eigen::Index k = spec.num_classes;
  if (k < 2) {
    raise(ErrorCode::infeasible_target,
          "synthetic data needs at least 2 classes; accuracy targets are "
          "meaningless for 1");
  }
  if (spec.validation_videos < 1) {
    raise(ErrorCode::usage, "synthetic data needs at least 1 validation video");
  }
  std::vector<std::string> seen;
  for (const auto& stream : spec.streams) {
    if (stream.dim < 1) {
      raise(ErrorCode::usage, "stream '" + stream.name + "' dim must be >= 1");
    }
    const double floor = 1.0 / static_cast<double>(k);
    if (stream.target_accuracy < floor || stream.target_accuracy > 1.0) {
      raise(ErrorCode::infeasible_target,
            "stream '" + stream.name + "' target accuracy " +
                std::to_string(stream.target_accuracy) + " outside [1/K, 1]");
    }
    if (std::find(seen.begin(), seen.end(), stream.name) != seen.end()) {
      raise(ErrorCode::usage, "duplicate stream name '" + stream.name + "'");
    }
    seen.push_back(stream.name);
  }

  SyntheticDataset out;
  out.manifest.class_names = spec.class_names;
  if (out.manifest.class_names.empty()) {
    for (Eigen::Index c = 0; c < k; ++c) {
      char name[32];
      std::snprintf(name, sizeof(name), "class_%03d", static_cast<int>(c));
      out.manifest.class_names.push_back(name);
    }
  }
  if (static_cast<Eigen::Index>(out.manifest.class_names.size()) != k) {
    raise(ErrorCode::usage, "class_names length does not match num_classes");
  }

  std::mt19937_64 manifest_rng(spec.seed ^ 0x6d616e69ull);
  const std::int64_t counts[3] = {spec.train_videos, spec.validation_videos,
                                  spec.test_videos};
  const Subset subsets[3] = {Subset::train, Subset::validation, Subset::test};
  std::vector<std::vector<std::string>> subset_ids(3);
  std::vector<std::vector<std::int32_t>> subset_labels(3);

  std::int64_t next_id = 0;
  for (int s = 0; s < 3; ++s) {
    // Round-robin labels keep every subset class-balanced, then shuffle so
    // ids carry no label information.
    std::vector<std::int32_t> labels(static_cast<std::size_t>(counts[s]));
    for (std::int64_t i = 0; i < counts[s]; ++i) {
      labels[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(i % k);
    }
    std::shuffle(labels.begin(), labels.end(), manifest_rng);
    std::uniform_int_distribution<std::int64_t> frames(30, 300);
    for (std::int64_t i = 0; i < counts[s]; ++i) {
      VideoRecord video;
      char id[32];
      std::snprintf(id, sizeof(id), "v%06lld", static_cast<long long>(next_id++));
      video.id = id;
      video.subset = subsets[s];
      video.label = labels[static_cast<std::size_t>(i)];
      video.num_frames = frames(manifest_rng);
      subset_ids[s].push_back(video.id);
      subset_labels[s].push_back(labels[static_cast<std::size_t>(i)]);
      out.manifest.videos.push_back(std::move(video));
    }
  }

  // Shared error propensities, one draw per video per evaluated subset.
  std::vector<std::vector<double>> shared(3);
  for (int s = 1; s < 3; ++s) {
    std::mt19937_64 rng(spec.seed ^ kSubsetSalt[s]);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    shared[s].resize(subset_ids[s].size());
    for (auto& u : shared[s]) u = unit(rng);
  }

  for (const auto& stream_spec : spec.streams) {
    SyntheticStream stream;
    stream.name = stream_spec.name;
    const double separation = calibrate_separation(stream_spec.target_accuracy, k);

    for (int s = 1; s < 3; ++s) {
      const std::int64_t n = counts[s];
      if (n == 0) continue;
      std::mt19937_64 rng(stream_spec.noise_seed ^ kSubsetSalt[s]);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      std::vector<double> private_draw(static_cast<std::size_t>(n));
      for (auto& w : private_draw) w = unit(rng);
      const auto errors = static_cast<std::int64_t>(
          std::llround((1.0 - stream_spec.target_accuracy) * static_cast<double>(n)));
      const auto is_error = designate_errors(shared[s], std::move(private_draw),
                                             spec.complementarity, errors);
      ScoreMatrix scores = draw_scores(stream_spec.name, subset_ids[s],
                                       subset_labels[s], k, separation,
                                       is_error, rng);
      if (s == 1) stream.validation_scores = std::move(scores);
      else stream.test_scores = std::move(scores);
    }

    // Realized accuracy measured from the matrix itself, not assumed.
    std::int64_t hits = 0;
    for (Eigen::Index r = 0; r < stream.validation_scores.scores.rows(); ++r) {
      Eigen::Index top = 0;
      stream.validation_scores.scores.row(r).maxCoeff(&top);
      if (top == subset_labels[1][static_cast<std::size_t>(r)]) ++hits;
    }
    stream.meta.stream_name = stream_spec.name;
    stream.meta.validation_accuracy =
        static_cast<double>(hits) /
        static_cast<double>(stream.validation_scores.scores.rows());

    // Video-level features for every subset: one Gaussian blob per class.
    // These exercise the encode/train machinery; their separability is not
    // calibrated to the stream's accuracy target.
    std::mt19937_64 feat_rng(stream_spec.noise_seed ^ 0x66656174ull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd class_means(k, stream_spec.dim);
    for (Eigen::Index c = 0; c < k; ++c) {
      for (Eigen::Index j = 0; j < stream_spec.dim; ++j) {
        class_means(c, j) = gauss(feat_rng);
      }
      class_means.row(c) *= 2.0 / class_means.row(c).norm();
    }
    stream.features.unit_kind = UnitKind::video;
    stream.features.data.resize(
        static_cast<Eigen::Index>(out.manifest.videos.size()), stream_spec.dim);
    Eigen::Index row = 0;
    for (const auto& video : out.manifest.videos) {
      for (Eigen::Index j = 0; j < stream_spec.dim; ++j) {
        stream.features.data(row, j) = static_cast<float>(
            class_means(*video.label, j) + 0.8 * gauss(feat_rng));
      }
      stream.features.video_index.push_back({video.id, row, 1});
      ++row;
    }

    out.streams.push_back(std::move(stream));
  }
  return out;
}

SynthSpec read_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::missing_data, "cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    raise(ErrorCode::bad_format, path.string() + ": " + e.what());
  }

  SynthSpec spec;
  try {
    spec.num_classes = doc.at("num_classes").get<Eigen::Index>();
    if (doc.contains("class_names")) {
      spec.class_names = doc.at("class_names").get<std::vector<std::string>>();
    }
    const auto& videos = doc.at("videos");
    spec.train_videos = videos.value("train", std::int64_t{0});
    spec.validation_videos = videos.value("validation", std::int64_t{0});
    spec.test_videos = videos.value("test", std::int64_t{0});
    spec.complementarity = doc.value("complementarity", 0.0);
    spec.seed = doc.value("seed", std::uint64_t{0});
    for (const auto& js : doc.at("streams")) {
      SynthStreamSpec stream;
      stream.name = js.at("name").get<std::string>();
      stream.dim = js.value("dim", Eigen::Index{8});
      stream.target_accuracy = js.at("target_accuracy").get<double>();
      stream.noise_seed = js.value("noise_seed", std::uint64_t{0});
      spec.streams.push_back(std::move(stream));
    }
  } catch (const json::exception& e) {
    raise(ErrorCode::bad_format, path.string() + ": " + e.what());
  }
  if (spec.complementarity < 0.0 || spec.complementarity > 1.0) {
    raise(ErrorCode::usage, "complementarity must be in [0, 1]");
  }
  return spec;
}

}  // namespace streamfuse

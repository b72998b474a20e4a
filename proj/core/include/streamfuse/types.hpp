#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace streamfuse {

enum class Subset { train, validation, test };

std::string to_string(Subset subset);
Subset subset_from_string(const std::string& name);

// What one row of a feature matrix stands for.
enum class UnitKind : std::uint8_t { frame = 0, clip = 1, video = 2 };

std::string to_string(UnitKind kind);

// Inclusive frame range, 0-based.
struct TemporalInterval {
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;

  std::int64_t length() const { return end_frame - start_frame + 1; }
};

struct VideoRecord {
  std::string id;
  Subset subset = Subset::train;
  std::optional<std::int32_t> label;  // class index; absent for unlabeled test entries
  std::int64_t num_frames = 1;
  std::vector<TemporalInterval> proposals;
};

// Video ids, ground truth and split for one collection. Class order here
// fixes the column order of every ScoreMatrix derived from it.
struct DatasetManifest {
  std::vector<std::string> class_names;
  std::vector<VideoRecord> videos;

  std::int64_t num_classes() const {
    return static_cast<std::int64_t>(class_names.size());
  }
  const VideoRecord* find(const std::string& video_id) const;
  std::vector<std::size_t> subset_indices(Subset subset) const;
};

// Row block of one video inside a FeatureSet.
struct VideoRows {
  std::string video_id;
  std::int64_t offset = 0;
  std::int64_t count = 0;
};

// Per-unit descriptors for one stream. Rows are units (frames, clips or
// videos); the index blocks partition the rows with no gaps or overlap.
// Stored and kept in memory as float32, matching the on-disk format.
struct FeatureSet {
  UnitKind unit_kind = UnitKind::video;
  Eigen::MatrixXf data;  // unit_count x dim
  std::vector<VideoRows> video_index;

  std::int64_t dim() const { return data.cols(); }
  std::int64_t unit_count() const { return data.rows(); }
  const VideoRows* find(const std::string& video_id) const;
};

// Empty result means all invariants hold; one message per breach otherwise.
std::vector<std::string> validate_features(const FeatureSet& features);

// videos x classes predictions for one stream; the fusion currency.
struct ScoreMatrix {
  std::string stream_name;
  std::vector<std::string> video_ids;
  Eigen::MatrixXd scores;  // num_videos x K
  bool normalized = false; // rows on the probability simplex
};

struct StreamMeta {
  std::string stream_name;
  double validation_accuracy = 0.0;  // fraction in [0,1]
};

}  // namespace streamfuse

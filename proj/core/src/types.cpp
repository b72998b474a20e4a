#include "streamfuse/types.hpp"

#include <cmath>

#include "streamfuse/errors.hpp"

namespace streamfuse {

std::string to_string(Subset subset) {
  switch (subset) {
    case Subset::train: return "train";
    case Subset::validation: return "validation";
    case Subset::test: return "test";
  }
  return "train";
}

Subset subset_from_string(const std::string& name) {
  if (name == "train") return Subset::train;
  if (name == "validation") return Subset::validation;
  if (name == "test") return Subset::test;
  raise(ErrorCode::bad_format, "unknown subset '" + name + "'");
}

std::string to_string(UnitKind kind) {
  switch (kind) {
    case UnitKind::frame: return "frame";
    case UnitKind::clip: return "clip";
    case UnitKind::video: return "video";
  }
  return "video";
}

const VideoRecord* DatasetManifest::find(const std::string& video_id) const {
  for (const auto& v : videos) {
    if (v.id == video_id) return &v;
  }
  return nullptr;
}

std::vector<std::size_t> DatasetManifest::subset_indices(Subset subset) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < videos.size(); ++i) {
    if (videos[i].subset == subset) out.push_back(i);
  }
  return out;
}

const VideoRows* FeatureSet::find(const std::string& video_id) const {
  for (const auto& block : video_index) {
    if (block.video_id == video_id) return &block;
  }
  return nullptr;
}

std::vector<std::string> validate_features(const FeatureSet& features) {
  std::vector<std::string> violations;
  if (features.data.cols() < 1) {
    violations.push_back("feature dim must be >= 1");
  }
  std::int64_t expected_offset = 0;
  for (const auto& block : features.video_index) {
    if (block.offset != expected_offset) {
      violations.push_back("video '" + block.video_id +
                           "' breaks the row partition: offset " +
                           std::to_string(block.offset) + ", expected " +
                           std::to_string(expected_offset));
    }
    if (block.count < 0) {
      violations.push_back("video '" + block.video_id + "' has negative row count");
    }
    expected_offset = block.offset + block.count;
  }
  if (expected_offset != features.unit_count()) {
    violations.push_back("video index covers " + std::to_string(expected_offset) +
                         " rows but the matrix has " +
                         std::to_string(features.unit_count()));
  }
  if (!features.data.allFinite()) {
    violations.push_back("feature matrix contains non-finite values");
  }
  return violations;
}

}  // namespace streamfuse

#include "streamfuse/encoder.hpp"

#include <algorithm>

#include "streamfuse/errors.hpp"
#include "streamfuse/pooling.hpp"
#include "streamfuse/sampling.hpp"
#include "streamfuse/vlad.hpp"

namespace streamfuse {

std::string to_string(EncodeMode mode) {
  switch (mode) {
    case EncodeMode::none: return "none";
    case EncodeMode::mean_pool_l1: return "mean_pool_l1";
    case EncodeMode::clip_pca_pool: return "clip_pca_pool";
    case EncodeMode::lcd_vlad: return "lcd_vlad";
  }
  return "none";
}

EncodeMode encode_mode_from_string(const std::string& name) {
  if (name == "none") return EncodeMode::none;
  if (name == "mean_pool_l1") return EncodeMode::mean_pool_l1;
  if (name == "clip_pca_pool") return EncodeMode::clip_pca_pool;
  if (name == "lcd_vlad") return EncodeMode::lcd_vlad;
  raise(ErrorCode::usage, "unknown encode mode '" + name + "'");
}

namespace {

Eigen::MatrixXd video_rows(const FeatureSet& features, const VideoRows& block) {
  return features.data.block(block.offset, 0, block.count, features.dim())
      .cast<double>();
}

// Frame indices to sample for one video: proposal-restricted when asked for
// and available, uniform otherwise.
std::vector<std::int64_t> sample_frames(const EncoderConfig& config,
                                        const DatasetManifest& manifest,
                                        const std::string& video_id,
                                        std::int64_t frames_in_file) {
  if (config.use_proposals) {
    const VideoRecord* record = manifest.find(video_id);
    if (record && !record->proposals.empty()) {
      if (record->num_frames != frames_in_file) {
        raise(ErrorCode::alignment_mismatch,
              "video '" + video_id + "': proposals cover " +
                  std::to_string(record->num_frames) + " frames but the file has " +
                  std::to_string(frames_in_file));
      }
      return proposal_sample_indices(*record, config.sample_count);
    }
  }
  return uniform_sample_indices(frames_in_file, config.sample_count);
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& rows,
                            const std::vector<std::int64_t>& indices) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(indices.size()), rows.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = rows.row(indices[i]);
  }
  return out;
}

// Rows of all train-subset videos stacked, for fitting models.
Eigen::MatrixXd train_rows(const FeatureSet& features,
                           const DatasetManifest& manifest) {
  std::int64_t total = 0;
  std::vector<const VideoRows*> blocks;
  for (const auto& block : features.video_index) {
    const VideoRecord* record = manifest.find(block.video_id);
    if (record && record->subset == Subset::train) {
      blocks.push_back(&block);
      total += block.count;
    }
  }
  if (total == 0) {
    raise(ErrorCode::missing_data, "no train-subset rows to fit the encoder on");
  }
  Eigen::MatrixXd out(total, features.dim());
  std::int64_t row = 0;
  for (const VideoRows* block : blocks) {
    out.block(row, 0, block->count, features.dim()) = video_rows(features, *block);
    row += block->count;
  }
  return out;
}

FeatureSet video_level_result(std::vector<std::string> ids,
                              const std::vector<Eigen::VectorXd>& vectors) {
  FeatureSet out;
  out.unit_kind = UnitKind::video;
  if (!vectors.empty()) {
    out.data.resize(static_cast<Eigen::Index>(vectors.size()), vectors[0].size());
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      out.data.row(static_cast<Eigen::Index>(i)) =
          vectors[i].transpose().cast<float>();
    }
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out.video_index.push_back(
        {std::move(ids[i]), static_cast<std::int64_t>(i), 1});
  }
  return out;
}

std::vector<Eigen::MatrixXd> split_frames(const Eigen::MatrixXd& rows,
                                          std::int64_t descriptors_per_frame,
                                          const std::string& video_id) {
  if (descriptors_per_frame < 1 || rows.rows() % descriptors_per_frame != 0) {
    raise(ErrorCode::alignment_mismatch,
          "video '" + video_id + "': " + std::to_string(rows.rows()) +
              " rows not divisible by descriptors_per_frame " +
              std::to_string(descriptors_per_frame));
  }
  std::vector<Eigen::MatrixXd> frames;
  frames.reserve(static_cast<std::size_t>(rows.rows() / descriptors_per_frame));
  for (Eigen::Index start = 0; start < rows.rows();
       start += descriptors_per_frame) {
    frames.push_back(rows.block(start, 0, descriptors_per_frame, rows.cols()));
  }
  return frames;
}

}  // namespace

FeatureSet segment_clips(const FeatureSet& frames, std::int64_t clip_len,
                         double overlap) {
  if (frames.unit_kind != UnitKind::frame) {
    raise(ErrorCode::dim_mismatch, "segment_clips expects frame-level input");
  }
  FeatureSet clips;
  clips.unit_kind = UnitKind::clip;

  std::vector<Eigen::VectorXd> rows;
  for (const auto& block : frames.video_index) {
    const Eigen::MatrixXd video = video_rows(frames, block);
    const ClipSchedule schedule = clip_starts(block.count, clip_len, overlap);
    const std::int64_t first_row = static_cast<std::int64_t>(rows.size());
    for (const std::int64_t start : schedule.starts) {
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(video.cols());
      for (std::int64_t f = 0; f < clip_len; ++f) {
        // Short videos repeat their last frame to fill the clip.
        const std::int64_t idx = std::min(start + f, block.count - 1);
        sum += video.row(idx).transpose();
      }
      rows.push_back(sum / static_cast<double>(clip_len));
    }
    clips.video_index.push_back(
        {block.video_id, first_row,
         static_cast<std::int64_t>(schedule.starts.size())});
  }

  clips.data.resize(static_cast<Eigen::Index>(rows.size()), frames.dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    clips.data.row(static_cast<Eigen::Index>(i)) = rows[i].transpose().cast<float>();
  }
  return clips;
}

Eigen::VectorXd encode_lcd_vlad_video(
    const std::vector<Eigen::MatrixXd>& frame_descriptors, const PcaModel& pca,
    const Codebook& codebook, int k) {
  if (frame_descriptors.empty()) {
    raise(ErrorCode::degenerate_data, "lcd_vlad over zero frames");
  }
  Eigen::MatrixXd encoded(static_cast<Eigen::Index>(frame_descriptors.size()),
                          codebook.num_centers() * codebook.dim());
  for (std::size_t f = 0; f < frame_descriptors.size(); ++f) {
    const Eigen::MatrixXd projected = pca_transform(pca, frame_descriptors[f]);
    encoded.row(static_cast<Eigen::Index>(f)) =
        vlad_k_encode(projected, codebook, k).transpose();
  }
  return mean_pool(encoded);
}

EncoderModels fit_encoder(const FeatureSet& features,
                          const DatasetManifest& manifest,
                          const EncoderConfig& config) {
  EncoderModels models;
  switch (config.mode) {
    case EncodeMode::none:
    case EncodeMode::mean_pool_l1:
      break;
    case EncodeMode::clip_pca_pool: {
      FeatureSet clips = features;
      if (features.unit_kind == UnitKind::frame) {
        clips = segment_clips(features, config.clip_len, config.clip_overlap);
      }
      if (config.pca_out_dim > 0) {
        models.pca = pca_fit(train_rows(clips, manifest), config.pca_out_dim);
      }
      break;
    }
    case EncodeMode::lcd_vlad: {
      if (config.pca_out_dim < 1) {
        raise(ErrorCode::usage, "lcd_vlad requires pca_out_dim >= 1");
      }
      const Eigen::MatrixXd descriptors = train_rows(features, manifest);
      models.pca = pca_fit(descriptors, config.pca_out_dim);
      const Eigen::MatrixXd projected = pca_transform(*models.pca, descriptors);
      models.codebook =
          kmeans_fit(projected, config.vlad_centers, config.seed).codebook;
      break;
    }
  }
  return models;
}

FeatureSet encode_stream(const FeatureSet& features,
                         const DatasetManifest& manifest,
                         const EncoderConfig& config,
                         const EncoderModels& models) {
  std::vector<std::string> ids;
  ids.reserve(features.video_index.size());
  for (const auto& block : features.video_index) ids.push_back(block.video_id);

  std::vector<Eigen::VectorXd> vectors;
  vectors.reserve(ids.size());

  switch (config.mode) {
    case EncodeMode::none: {
      if (features.unit_kind != UnitKind::video) {
        raise(ErrorCode::dim_mismatch,
              "passthrough encode expects video-level input");
      }
      for (const auto& block : features.video_index) {
        if (block.count != 1) {
          raise(ErrorCode::dim_mismatch, "video '" + block.video_id +
                                             "' has " +
                                             std::to_string(block.count) +
                                             " rows, expected 1");
        }
        vectors.push_back(video_rows(features, block).row(0).transpose());
      }
      break;
    }
    case EncodeMode::mean_pool_l1: {
      for (const auto& block : features.video_index) {
        const Eigen::MatrixXd video = video_rows(features, block);
        const auto indices =
            sample_frames(config, manifest, block.video_id, block.count);
        vectors.push_back(l1_normalize(mean_pool(gather_rows(video, indices))));
      }
      break;
    }
    case EncodeMode::clip_pca_pool: {
      FeatureSet clips = features;
      if (features.unit_kind == UnitKind::frame) {
        clips = segment_clips(features, config.clip_len, config.clip_overlap);
      } else if (features.unit_kind != UnitKind::clip) {
        raise(ErrorCode::dim_mismatch,
              "clip_pca_pool expects frame- or clip-level input");
      }
      for (const auto& block : clips.video_index) {
        Eigen::MatrixXd video = video_rows(clips, block);
        if (models.pca) video = pca_transform(*models.pca, video);
        vectors.push_back(mean_pool(video));
      }
      ids.clear();
      for (const auto& block : clips.video_index) ids.push_back(block.video_id);
      break;
    }
    case EncodeMode::lcd_vlad: {
      if (!models.pca || !models.codebook) {
        raise(ErrorCode::missing_data, "lcd_vlad needs fitted pca and codebook");
      }
      for (const auto& block : features.video_index) {
        const auto frames = split_frames(video_rows(features, block),
                                         config.descriptors_per_frame,
                                         block.video_id);
        const auto indices =
            sample_frames(config, manifest, block.video_id,
                          static_cast<std::int64_t>(frames.size()));
        std::vector<Eigen::MatrixXd> sampled;
        sampled.reserve(indices.size());
        for (const std::int64_t idx : indices) {
          sampled.push_back(frames[static_cast<std::size_t>(idx)]);
        }
        vectors.push_back(encode_lcd_vlad_video(sampled, *models.pca,
                                                *models.codebook,
                                                config.vlad_k));
      }
      break;
    }
  }
  return video_level_result(std::move(ids), vectors);
}

void save_encoder_models(const EncoderModels& models,
                         const std::filesystem::path& dir,
                         const std::string& stem) {
  if (models.pca) save_pca(*models.pca, dir / (stem + ".pca.json"));
  if (models.codebook) {
    save_codebook(*models.codebook, dir / (stem + ".codebook.json"));
  }
}

EncoderModels load_encoder_models(const EncoderConfig& config,
                                  const std::filesystem::path& dir,
                                  const std::string& stem) {
  EncoderModels models;
  const auto pca_path = dir / (stem + ".pca.json");
  const auto codebook_path = dir / (stem + ".codebook.json");
  const bool wants_pca = config.mode == EncodeMode::lcd_vlad ||
                         (config.mode == EncodeMode::clip_pca_pool &&
                          config.pca_out_dim > 0);
  if (wants_pca) models.pca = load_pca(pca_path);
  if (config.mode == EncodeMode::lcd_vlad) {
    models.codebook = load_codebook(codebook_path);
  }
  return models;
}

}  // namespace streamfuse

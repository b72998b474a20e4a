#include "streamfuse/pipeline.hpp"

#include <fstream>
#include <iostream>
#include <unordered_map>

#include <json.hpp>

#include "streamfuse/errors.hpp"
#include "streamfuse/manifest.hpp"
#include "streamfuse/matrix_io.hpp"
#include "streamfuse/svm.hpp"

namespace streamfuse {

using nlohmann::json;

namespace {

std::uint64_t stream_seed(std::uint64_t base, const std::string& name) {
  return base ^ fnv1a64(name);
}

void log_line(const PipelineConfig& config, const std::string& message) {
  if (!config.quiet) std::cerr << "[pipeline] " << message << "\n";
}

std::vector<std::string> subset_ids(const DatasetManifest& manifest,
                                    Subset subset) {
  std::vector<std::string> ids;
  for (const auto& video : manifest.videos) {
    if (video.subset == subset) ids.push_back(video.id);
  }
  return ids;
}

std::vector<std::int32_t> subset_labels(const DatasetManifest& manifest,
                                        Subset subset) {
  std::vector<std::int32_t> labels;
  for (const auto& video : manifest.videos) {
    if (video.subset != subset) continue;
    if (!video.label) {
      raise(ErrorCode::missing_data,
            "video '" + video.id + "' in subset " + to_string(subset) +
                " has no label");
    }
    labels.push_back(*video.label);
  }
  return labels;
}

// One feature row per requested id, in the requested order.
Eigen::MatrixXf rows_for_ids(const FeatureSet& features,
                             const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const VideoRows*> index;
  for (const auto& block : features.video_index) {
    index[block.video_id] = &block;
  }
  Eigen::MatrixXf out(static_cast<Eigen::Index>(ids.size()), features.dim());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto it = index.find(ids[i]);
    if (it == index.end()) {
      raise(ErrorCode::missing_data,
            "video '" + ids[i] + "' is missing from the feature file");
    }
    if (it->second->count != 1) {
      raise(ErrorCode::dim_mismatch,
            "video '" + ids[i] + "' is not video-level (one row expected)");
    }
    out.row(static_cast<Eigen::Index>(i)) = features.data.row(it->second->offset);
  }
  return out;
}

struct StageContext {
  const PipelineConfig& config;
  const DatasetManifest& manifest;
  std::filesystem::path streams_dir;
  std::filesystem::path models_dir;
};

bool reusable(const PipelineConfig& config, const std::filesystem::path& path) {
  return config.resume && std::filesystem::exists(path);
}

// Encode + train + predict for one feature_svm stream, each stage consuming
// the previous stage's file.
void ensure_stream_scores(const StageContext& ctx,
                          const PipelineStreamConfig& stream) {
  const auto video_path = ctx.streams_dir / (stream.name + ".video.fmat");
  EncoderConfig encoder = stream.encoder;
  encoder.seed = stream_seed(ctx.config.seed, stream.name);

  if (!reusable(ctx.config, video_path)) {
    log_line(ctx.config, "encode " + stream.name);
    const FeatureSet input = read_features(stream.features);
    EncoderModels models;
    const bool needs_models =
        encoder.mode == EncodeMode::lcd_vlad ||
        (encoder.mode == EncodeMode::clip_pca_pool && encoder.pca_out_dim > 0);
    if (needs_models) {
      const auto pca_path = ctx.models_dir / (stream.name + ".pca.json");
      if (reusable(ctx.config, pca_path)) {
        models = load_encoder_models(encoder, ctx.models_dir, stream.name);
      } else {
        models = fit_encoder(input, ctx.manifest, encoder);
        save_encoder_models(models, ctx.models_dir, stream.name);
        // Reload so fresh runs see the same float32 rounding as resumed ones.
        models = load_encoder_models(encoder, ctx.models_dir, stream.name);
      }
    }
    write_features(encode_stream(input, ctx.manifest, encoder, models),
                   video_path);
  }

  const auto svm_path = ctx.models_dir / (stream.name + ".svm.json");
  if (!reusable(ctx.config, svm_path)) {
    log_line(ctx.config, "train " + stream.name + " (C=" +
                             std::to_string(stream.svm_c) + ")");
    const FeatureSet video_features = read_features(video_path);
    const auto train_ids = subset_ids(ctx.manifest, Subset::train);
    if (train_ids.empty()) {
      raise(ErrorCode::missing_data,
            "stream '" + stream.name + "' needs train-subset videos");
    }
    SvmConfig svm_config;
    svm_config.C = stream.svm_c;
    svm_config.seed = stream_seed(ctx.config.seed, stream.name + "/svm");
    const SvmModel model =
        svm_train(rows_for_ids(video_features, train_ids),
                  subset_labels(ctx.manifest, Subset::train),
                  ctx.manifest.class_names, svm_config);
    save_svm(model, svm_path);
  }

  for (const Subset subset : {Subset::validation, Subset::test}) {
    const auto ids = subset_ids(ctx.manifest, subset);
    if (ids.empty()) continue;
    const auto scores_path =
        ctx.streams_dir / (stream.name + "." + to_string(subset) + ".scores.csv");
    if (reusable(ctx.config, scores_path)) continue;
    log_line(ctx.config, "predict " + stream.name + " " + to_string(subset));
    const SvmModel model = load_svm(svm_path);
    const FeatureSet video_features = read_features(video_path);
    ScoreMatrix margins;
    margins.stream_name = stream.name;
    margins.video_ids = ids;
    margins.scores = svm_margins(model, rows_for_ids(video_features, ids));
    write_scores(normalize_scores(margins), ctx.manifest.class_names, scores_path);
  }
}

ScoreMatrix load_stream_scores(const std::filesystem::path& path,
                               const DatasetManifest& manifest,
                               const std::string& stream_name,
                               const std::vector<std::string>& expected_ids) {
  ScoresFile file = read_scores(path);
  check_scores_alignment(file, manifest);
  if (file.scores.video_ids != expected_ids) {
    raise(ErrorCode::alignment_mismatch,
          path.string() + ": rows must cover the manifest subset in order");
  }
  file.scores.stream_name = stream_name;
  return std::move(file.scores);
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
  const DatasetManifest manifest = read_manifest(config.manifest_path);
  if (const auto violations = validate_manifest(manifest); !violations.empty()) {
    raise(ErrorCode::bad_format, "manifest: " + violations.front());
  }
  if (config.streams.empty()) {
    raise(ErrorCode::usage, "pipeline needs at least one stream");
  }

  StageContext ctx{config, manifest, config.output_dir / "streams",
                   config.output_dir / "models"};
  std::filesystem::create_directories(ctx.streams_dir);
  std::filesystem::create_directories(ctx.models_dir);

  const auto val_ids = subset_ids(manifest, Subset::validation);
  if (val_ids.empty()) {
    raise(ErrorCode::missing_data, "pipeline needs validation-subset videos");
  }
  const auto val_labels = subset_labels(manifest, Subset::validation);
  const auto test_ids = subset_ids(manifest, Subset::test);

  std::vector<ScoreMatrix> val_streams;
  std::vector<ScoreMatrix> test_streams;
  std::vector<StreamMeta> metas;
  bool all_have_test = !test_ids.empty();

  for (const auto& stream : config.streams) {
    std::filesystem::path val_path;
    std::filesystem::path test_path;
    if (stream.kind == StreamKind::feature_svm) {
      ensure_stream_scores(ctx, stream);
      val_path = ctx.streams_dir / (stream.name + ".validation.scores.csv");
      if (!test_ids.empty()) {
        test_path = ctx.streams_dir / (stream.name + ".test.scores.csv");
      }
    } else {
      val_path = stream.validation_scores;
      test_path = stream.test_scores;
    }

    val_streams.push_back(
        load_stream_scores(val_path, manifest, stream.name, val_ids));

    StreamMeta meta;
    meta.stream_name = stream.name;
    meta.validation_accuracy =
        stream.validation_accuracy
            ? *stream.validation_accuracy
            : top_k_accuracy(val_streams.back(), val_labels, 1);
    metas.push_back(meta);

    if (!test_path.empty() && (stream.kind == StreamKind::feature_svm ||
                               std::filesystem::exists(test_path))) {
      test_streams.push_back(
          load_stream_scores(test_path, manifest, stream.name, test_ids));
    } else {
      all_have_test = false;
    }
  }

  PipelineResult result;
  result.metas = metas;
  result.plan = plan_fusion(val_streams, metas, config.fusion);
  write_plan(result.plan, config.output_dir / "fusion_plan.json");

  ScoreMatrix fused_val = execute_plan(result.plan, val_streams);
  result.fused_validation_path =
      config.output_dir / "fused.validation.scores.csv";
  write_scores(fused_val, manifest.class_names, result.fused_validation_path);

  if (all_have_test && test_streams.size() == config.streams.size()) {
    const ScoreMatrix fused_test = execute_plan(result.plan, test_streams);
    result.fused_test_path = config.output_dir / "fused.test.scores.csv";
    write_scores(fused_test, manifest.class_names, result.fused_test_path);
  }

  result.validation_report =
      evaluate(fused_val, val_labels, manifest.num_classes());
  write_report(result.validation_report, config.output_dir / "report.json");
  return result;
}

namespace {

EncoderConfig encoder_from_json(const json& je) {
  EncoderConfig encoder;
  encoder.mode = encode_mode_from_string(je.value("mode", "none"));
  encoder.pca_out_dim = je.value("pca_out_dim", Eigen::Index{0});
  encoder.vlad_centers = je.value("vlad_centers", Eigen::Index{256});
  encoder.vlad_k = je.value("vlad_k", 5);
  encoder.clip_len = je.value("clip_len", std::int64_t{16});
  encoder.clip_overlap = je.value("clip_overlap", 0.5);
  encoder.sample_count = je.value("sample_count", std::int64_t{25});
  encoder.descriptors_per_frame = je.value("descriptors_per_frame", std::int64_t{1});
  encoder.use_proposals = je.value("use_proposals", false);
  return encoder;
}

}  // namespace

PipelineConfig read_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::missing_data, "cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    raise(ErrorCode::bad_format, path.string() + ": " + e.what());
  }

  const auto base = path.parent_path();
  const auto resolve = [&base](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  PipelineConfig config;
  try {
    config.manifest_path = resolve(doc.at("manifest").get<std::string>());
    if (doc.contains("output_dir")) {
      config.output_dir = resolve(doc.at("output_dir").get<std::string>());
    }
    config.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("fusion")) {
      const auto& jf = doc.at("fusion");
      config.fusion.weight_ratio = jf.value("ratio", 2.0);
      if (jf.contains("order") && jf.at("order").is_array()) {
        config.fusion.explicit_order =
            jf.at("order").get<std::vector<std::string>>();
      } else if (jf.contains("order")) {
        const auto order = jf.at("order").get<std::string>();
        if (order != "auto") {
          std::size_t start = 0;
          while (start <= order.size()) {
            const auto pos = order.find(',', start);
            config.fusion.explicit_order.push_back(
                order.substr(start, pos == std::string::npos ? pos : pos - start));
            if (pos == std::string::npos) break;
            start = pos + 1;
          }
        }
      }
    }
    for (const auto& js : doc.at("streams")) {
      PipelineStreamConfig stream;
      stream.name = js.at("name").get<std::string>();
      const auto kind = js.at("kind").get<std::string>();
      if (kind == "feature_svm") stream.kind = StreamKind::feature_svm;
      else if (kind == "raw_scores") stream.kind = StreamKind::raw_scores;
      else raise(ErrorCode::usage, "stream '" + stream.name + "': unknown kind '" + kind + "'");

      if (stream.kind == StreamKind::feature_svm) {
        stream.features = resolve(js.at("features").get<std::string>());
        if (js.contains("encoder")) {
          stream.encoder = encoder_from_json(js.at("encoder"));
        }
        stream.svm_c = js.value("svm_c", 1.0);
      } else {
        stream.validation_scores =
            resolve(js.at("validation_scores").get<std::string>());
        if (js.contains("test_scores")) {
          stream.test_scores = resolve(js.at("test_scores").get<std::string>());
        }
      }
      if (js.contains("validation_accuracy")) {
        stream.validation_accuracy = js.at("validation_accuracy").get<double>();
      }
      config.streams.push_back(std::move(stream));
    }
  } catch (const json::exception& e) {
    raise(ErrorCode::bad_format, path.string() + ": " + e.what());
  }
  return config;
}

namespace {

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::missing_data, "cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    raise(ErrorCode::bad_format, path.string() + ": " + e.what());
  }
  return doc;
}

std::filesystem::path resolve_path(const std::filesystem::path& base,
                                   const std::string& p) {
  const std::filesystem::path fp(p);
  return fp.is_absolute() ? fp : base / fp;
}

}  // namespace

EncodeCommandConfig read_encode_config(const std::filesystem::path& path) {
  const json doc = load_json(path);
  const auto base = path.parent_path();
  EncodeCommandConfig config;
  try {
    config.manifest = resolve_path(base, doc.at("manifest").get<std::string>());
    config.input = resolve_path(base, doc.at("input").get<std::string>());
    config.stream_name = doc.at("stream_name").get<std::string>();
    if (doc.contains("encoder")) {
      config.encoder = encoder_from_json(doc.at("encoder"));
    }
  } catch (const json::exception& e) {
    raise(ErrorCode::bad_format, path.string() + ": " + e.what());
  }
  return config;
}

TrainCommandConfig read_train_config(const std::filesystem::path& path) {
  const json doc = load_json(path);
  const auto base = path.parent_path();
  TrainCommandConfig config;
  try {
    config.manifest = resolve_path(base, doc.at("manifest").get<std::string>());
    config.features = resolve_path(base, doc.at("features").get<std::string>());
    config.stream_name = doc.at("stream_name").get<std::string>();
    config.C = doc.value("C", 1.0);
    config.tolerance = doc.value("tolerance", 1e-3);
    config.max_epochs = doc.value("max_epochs", 1000);
  } catch (const json::exception& e) {
    raise(ErrorCode::bad_format, path.string() + ": " + e.what());
  }
  return config;
}

PredictCommandConfig read_predict_config(const std::filesystem::path& path) {
  const json doc = load_json(path);
  const auto base = path.parent_path();
  PredictCommandConfig config;
  try {
    config.manifest = resolve_path(base, doc.at("manifest").get<std::string>());
    config.model = resolve_path(base, doc.at("model").get<std::string>());
    config.features = resolve_path(base, doc.at("features").get<std::string>());
    config.stream_name = doc.at("stream_name").get<std::string>();
    config.subset = subset_from_string(doc.value("subset", "validation"));
    config.normalize = doc.value("normalize", true);
  } catch (const json::exception& e) {
    raise(ErrorCode::bad_format, path.string() + ": " + e.what());
  }
  return config;
}

FuseCommandConfig read_fuse_config(const std::filesystem::path& path) {
  const json doc = load_json(path);
  const auto base = path.parent_path();
  FuseCommandConfig config;
  try {
    config.manifest = resolve_path(base, doc.at("manifest").get<std::string>());
    for (const auto& js : doc.at("streams")) {
      FuseStreamRef ref;
      ref.name = js.at("name").get<std::string>();
      ref.scores = resolve_path(base, js.at("scores").get<std::string>());
      if (js.contains("validation_accuracy")) {
        ref.validation_accuracy = js.at("validation_accuracy").get<double>();
      }
      config.streams.push_back(std::move(ref));
    }
    config.fusion.weight_ratio = doc.value("ratio", 2.0);
    if (doc.contains("order") && doc.at("order").is_array()) {
      config.fusion.explicit_order =
          doc.at("order").get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    raise(ErrorCode::bad_format, path.string() + ": " + e.what());
  }
  return config;
}

EvalCommandConfig read_eval_config(const std::filesystem::path& path) {
  const json doc = load_json(path);
  const auto base = path.parent_path();
  EvalCommandConfig config;
  try {
    config.manifest = resolve_path(base, doc.at("manifest").get<std::string>());
    config.scores = resolve_path(base, doc.at("scores").get<std::string>());
  } catch (const json::exception& e) {
    raise(ErrorCode::bad_format, path.string() + ": " + e.what());
  }
  return config;
}

}  // namespace streamfuse

// streamfuse: multi-stream late-fusion video classification toolkit.
//
// Subcommands mirror the pipeline stages: gen-synth, encode, train-svm,
// predict, fuse, eval, pipeline. Logs go to stderr, results to stdout and
// files. Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
// failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "streamfuse/encoder.hpp"
#include "streamfuse/errors.hpp"
#include "streamfuse/manifest.hpp"
#include "streamfuse/matrix_io.hpp"
#include "streamfuse/metrics.hpp"
#include "streamfuse/pipeline.hpp"
#include "streamfuse/svm.hpp"
#include "streamfuse/synthetic.hpp"

namespace fs = std::filesystem;
using namespace streamfuse;

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool quiet = false;
};

void log_info(const CommonArgs& args, const std::string& message) {
  if (!args.quiet) std::cerr << "[streamfuse] " << message << "\n";
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * fraction);
  return buf;
}

std::vector<std::string> parse_order(const std::string& order) {
  std::vector<std::string> names;
  if (order.empty() || order == "auto") return names;
  std::size_t start = 0;
  while (start <= order.size()) {
    const auto pos = order.find(',', start);
    names.push_back(order.substr(start, pos == std::string::npos
                                            ? std::string::npos
                                            : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return names;
}

std::vector<std::int32_t> labels_for_ids(const DatasetManifest& manifest,
                                         const std::vector<std::string>& ids) {
  std::vector<std::int32_t> labels;
  labels.reserve(ids.size());
  for (const auto& id : ids) {
    const VideoRecord* record = manifest.find(id);
    if (!record) {
      raise(ErrorCode::alignment_mismatch,
            "video '" + id + "' is not in the manifest");
    }
    if (!record->label) {
      raise(ErrorCode::missing_data, "video '" + id + "' has no label");
    }
    labels.push_back(*record->label);
  }
  return labels;
}

int cmd_gen_synth(const CommonArgs& args) {
  SynthSpec spec = read_synth_spec(args.config);
  if (args.seed_given) spec.seed = args.seed;
  const fs::path out_dir(args.out);
  fs::create_directories(out_dir);

  log_info(args, "generating " + std::to_string(spec.streams.size()) +
                     " synthetic streams");
  const SyntheticDataset data = generate_synthetic(spec);
  write_manifest(data.manifest, out_dir / "manifest.json");

  nlohmann::json metas = nlohmann::json::array();
  for (const auto& stream : data.streams) {
    write_features(stream.features, out_dir / (stream.name + ".features.fmat"));
    write_scores(stream.validation_scores, data.manifest.class_names,
                 out_dir / (stream.name + ".validation.scores.csv"));
    if (stream.test_scores.scores.rows() > 0) {
      write_scores(stream.test_scores, data.manifest.class_names,
                   out_dir / (stream.name + ".test.scores.csv"));
    }
    metas.push_back(
        nlohmann::json{{"stream_name", stream.name},
                       {"validation_accuracy", stream.meta.validation_accuracy}});
    std::cout << stream.name
              << " validation top-1: " << percent(stream.meta.validation_accuracy)
              << "\n";
  }
  std::ofstream meta_out(out_dir / "streams_meta.json");
  meta_out << metas.dump(2) << '\n';
  return 0;
}

int cmd_encode(const CommonArgs& args) {
  EncodeCommandConfig config = read_encode_config(args.config);
  config.encoder.seed = args.seed;
  const fs::path out_dir(args.out);
  fs::create_directories(out_dir);

  const DatasetManifest manifest = read_manifest(config.manifest);
  const FeatureSet input = read_features(config.input);

  log_info(args, "fitting " + to_string(config.encoder.mode) + " encoder for '" +
                     config.stream_name + "'");
  EncoderModels models = fit_encoder(input, manifest, config.encoder);
  save_encoder_models(models, out_dir, config.stream_name);
  models = load_encoder_models(config.encoder, out_dir, config.stream_name);

  const FeatureSet encoded = encode_stream(input, manifest, config.encoder, models);
  const fs::path out_path = out_dir / (config.stream_name + ".video.fmat");
  write_features(encoded, out_path);
  std::cout << out_path.string() << " (" << encoded.unit_count() << " videos x "
            << encoded.dim() << " dims)\n";
  return 0;
}

int cmd_train_svm(const CommonArgs& args, double c_override, bool c_given) {
  TrainCommandConfig config = read_train_config(args.config);
  if (c_given) config.C = c_override;
  const fs::path out_dir(args.out);
  fs::create_directories(out_dir);

  const DatasetManifest manifest = read_manifest(config.manifest);
  const FeatureSet features = read_features(config.features);

  std::vector<std::string> train_ids;
  std::vector<std::int32_t> train_labels;
  for (const auto& video : manifest.videos) {
    if (video.subset != Subset::train) continue;
    if (!video.label) {
      raise(ErrorCode::missing_data, "train video '" + video.id + "' has no label");
    }
    train_ids.push_back(video.id);
    train_labels.push_back(*video.label);
  }

  Eigen::MatrixXf x(static_cast<Eigen::Index>(train_ids.size()), features.dim());
  for (std::size_t i = 0; i < train_ids.size(); ++i) {
    const VideoRows* block = features.find(train_ids[i]);
    if (!block || block->count != 1) {
      raise(ErrorCode::missing_data, "train video '" + train_ids[i] +
                                         "' missing or not video-level");
    }
    x.row(static_cast<Eigen::Index>(i)) = features.data.row(block->offset);
  }

  SvmConfig svm_config;
  svm_config.C = config.C;
  svm_config.tolerance = config.tolerance;
  svm_config.max_epochs = config.max_epochs;
  svm_config.seed = args.seed;

  log_info(args, "training one-vs-rest svm on " +
                     std::to_string(train_ids.size()) + " videos, C=" +
                     std::to_string(config.C));
  const SvmModel model =
      svm_train(x, train_labels, manifest.class_names, svm_config);
  const fs::path model_path = out_dir / (config.stream_name + ".svm.json");
  save_svm(model, model_path);

  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", model.training_objective.mean());
  std::cout << model_path.string() << " (mean primal objective " << buf << ")\n";
  return 0;
}

int cmd_predict(const CommonArgs& args) {
  const PredictCommandConfig config = read_predict_config(args.config);
  const fs::path out_dir(args.out);
  fs::create_directories(out_dir);

  const DatasetManifest manifest = read_manifest(config.manifest);
  const SvmModel model = load_svm(config.model);
  const FeatureSet features = read_features(config.features);

  std::vector<std::string> ids;
  for (const auto& video : manifest.videos) {
    if (video.subset == config.subset) ids.push_back(video.id);
  }
  if (ids.empty()) {
    raise(ErrorCode::missing_data,
          "manifest has no " + to_string(config.subset) + " videos");
  }

  Eigen::MatrixXf x(static_cast<Eigen::Index>(ids.size()), features.dim());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const VideoRows* block = features.find(ids[i]);
    if (!block || block->count != 1) {
      raise(ErrorCode::missing_data,
            "video '" + ids[i] + "' missing or not video-level");
    }
    x.row(static_cast<Eigen::Index>(i)) = features.data.row(block->offset);
  }

  ScoreMatrix scores;
  scores.stream_name = config.stream_name;
  scores.video_ids = ids;
  scores.scores = svm_margins(model, x);
  if (config.normalize) scores = normalize_scores(scores);

  const fs::path out_path =
      out_dir /
      (config.stream_name + "." + to_string(config.subset) + ".scores.csv");
  write_scores(scores, manifest.class_names, out_path);
  std::cout << out_path.string() << "\n";
  return 0;
}

int cmd_fuse(const CommonArgs& args, const std::string& order, double ratio,
             bool ratio_given) {
  FuseCommandConfig config = read_fuse_config(args.config);
  if (!order.empty()) config.fusion.explicit_order = parse_order(order);
  if (ratio_given) config.fusion.weight_ratio = ratio;
  const fs::path out_dir(args.out);
  fs::create_directories(out_dir);

  const DatasetManifest manifest = read_manifest(config.manifest);
  std::vector<ScoreMatrix> streams;
  std::vector<StreamMeta> metas;
  for (const auto& ref : config.streams) {
    ScoresFile file = read_scores(ref.scores);
    check_scores_alignment(file, manifest);
    file.scores.stream_name = ref.name;

    StreamMeta meta;
    meta.stream_name = ref.name;
    if (ref.validation_accuracy) {
      meta.validation_accuracy = *ref.validation_accuracy;
    } else if (config.fusion.explicit_order.empty()) {
      meta.validation_accuracy = top_k_accuracy(
          file.scores, labels_for_ids(manifest, file.scores.video_ids), 1);
    }
    metas.push_back(meta);
    streams.push_back(std::move(file.scores));
  }

  const FusionPlan plan = plan_fusion(streams, metas, config.fusion);
  write_plan(plan, out_dir / "fusion_plan.json");
  const ScoreMatrix fused = execute_plan(plan, streams);
  const fs::path out_path = out_dir / "fused.scores.csv";
  write_scores(fused, manifest.class_names, out_path);

  for (std::size_t i = 0; i < plan.order.size(); ++i) {
    std::cout << (i + 1) << ". " << plan.order[i].stream_name << " ("
              << percent(plan.order[i].validation_accuracy) << ")\n";
  }
  std::cout << out_path.string() << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& args, int top_k) {
  const EvalCommandConfig config = read_eval_config(args.config);
  const DatasetManifest manifest = read_manifest(config.manifest);
  ScoresFile file = read_scores(config.scores);
  check_scores_alignment(file, manifest);

  const auto labels = labels_for_ids(manifest, file.scores.video_ids);
  const EvalReport report =
      evaluate(file.scores, labels, manifest.num_classes());
  double extra_value = 0.0;
  if (top_k > 0) {
    extra_value = top_k_accuracy(file.scores, labels, top_k);
  }
  std::cout << format_report_table(file.scores.stream_name, report, top_k,
                                   extra_value);
  if (!args.out.empty()) {
    fs::create_directories(args.out);
    write_report(report, fs::path(args.out) / "report.json");
  }
  return 0;
}

int cmd_pipeline(const CommonArgs& args, bool resume, const std::string& order,
                 double ratio, bool ratio_given) {
  PipelineConfig config = read_pipeline_config(args.config);
  if (!args.out.empty()) config.output_dir = args.out;
  if (config.output_dir.empty()) {
    raise(ErrorCode::usage, "pipeline needs an output directory (--out)");
  }
  if (args.seed_given) config.seed = args.seed;
  if (!order.empty()) config.fusion.explicit_order = parse_order(order);
  if (ratio_given) config.fusion.weight_ratio = ratio;
  config.resume = resume;
  config.quiet = args.quiet;

  const PipelineResult result = run_pipeline(config);
  for (const auto& meta : result.metas) {
    std::cout << meta.stream_name << " validation top-1: "
              << percent(meta.validation_accuracy) << "\n";
  }
  std::cout << format_report_table("fused", result.validation_report);
  std::cout << result.fused_validation_path.string() << "\n";
  if (!result.fused_test_path.empty()) {
    std::cout << result.fused_test_path.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-stream late-fusion video classification toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string order;
  double ratio = 2.0;
  double c_value = 1.0;
  int top_k = 0;
  bool resume = false;

  const auto add_common = [&](CLI::App* cmd, bool needs_out) {
    cmd->add_option("--config", args.config, "JSON config file")->required();
    auto* out = cmd->add_option("--out", args.out, "output directory");
    if (needs_out) out->required();
    cmd->add_option("--seed", args.seed, "RNG seed")
        ->each([&](const std::string&) { args.seed_given = true; });
    cmd->add_flag("--quiet", args.quiet, "suppress stderr logging");
  };

  auto* gen = app.add_subcommand("gen-synth", "generate a synthetic dataset");
  add_common(gen, true);

  auto* encode = app.add_subcommand("encode", "encode features to video level");
  add_common(encode, true);

  auto* train = app.add_subcommand("train-svm", "train a one-vs-rest linear svm");
  add_common(train, true);
  auto* c_opt = train->add_option("--C", c_value, "hinge weight override");

  auto* predict = app.add_subcommand("predict", "score videos with a trained svm");
  add_common(predict, true);

  auto* fuse = app.add_subcommand("fuse", "weighted iterative late fusion");
  add_common(fuse, true);
  fuse->add_option("--order", order, "auto or comma-separated stream names");
  auto* fuse_ratio = fuse->add_option("--ratio", ratio, "weight ratio");

  auto* eval = app.add_subcommand("eval", "top-k / mAP report for a scores file");
  add_common(eval, false);
  eval->add_option("--k", top_k, "additional top-k accuracy to report");

  auto* pipeline = app.add_subcommand("pipeline", "run the full multi-stream pipeline");
  add_common(pipeline, true);
  pipeline->add_flag("--resume", resume, "reuse existing intermediate files");
  pipeline->add_option("--order", order, "auto or comma-separated stream names");
  auto* pipe_ratio = pipeline->add_option("--ratio", ratio, "weight ratio");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // help exits 0; any parse problem is a usage error
  }

  try {
    if (gen->parsed()) return cmd_gen_synth(args);
    if (encode->parsed()) return cmd_encode(args);
    if (train->parsed()) return cmd_train_svm(args, c_value, c_opt->count() > 0);
    if (predict->parsed()) return cmd_predict(args);
    if (fuse->parsed()) return cmd_fuse(args, order, ratio, fuse_ratio->count() > 0);
    if (eval->parsed()) return cmd_eval(args, top_k);
    if (pipeline->parsed()) {
      return cmd_pipeline(args, resume, order, ratio, pipe_ratio->count() > 0);
    }
  } catch (const StreamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

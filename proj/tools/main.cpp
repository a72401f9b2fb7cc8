// luscreen: lung-ultrasound screening pipeline CLI.
//
// Exit codes: 0 success, 2 usage error, 3 data/validation error,
// 4 model/weight error.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "lus/augment.hpp"
#include "lus/bench.hpp"
#include "lus/dataset.hpp"
#include "lus/error.hpp"
#include "lus/graph.hpp"
#include "lus/image.hpp"
#include "lus/pipeline.hpp"
#include "lus/training.hpp"
#include "lus/unet.hpp"
#include "lus/vgg16.hpp"
#include "lus/weights.hpp"

namespace fs = std::filesystem;
using namespace lus;

namespace {

struct ModelFlags {
  std::string model = "vgg16";
  int head_width = 64;
  int unet_base_channels = 64;
  int unet_input_hw = 224;

  void attach(CLI::App* cmd) {
    cmd->add_option("--model", model, "Model to build: vgg16 | unet")
        ->check(CLI::IsMember({"vgg16", "unet"}));
    cmd->add_option("--head-width", head_width, "VGG-16 head width (default 64)");
    cmd->add_option("--unet-base-channels", unet_base_channels,
                    "U-Net first-level channels (default 64)");
    cmd->add_option("--unet-input-hw", unet_input_hw, "U-Net input size (default 224)");
  }

  ModelGraph build() const {
    if (model == "vgg16") {
      Vgg16Config cfg;
      cfg.head_width = head_width;
      return build_vgg16(cfg);
    }
    UnetConfig cfg;
    cfg.base_channels = unet_base_channels;
    cfg.input_hw = unet_input_hw;
    return build_unet(cfg);
  }
};

struct TrainFlags {
  int epochs = 10;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch_size = 16;
  bool no_augment = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--epochs", epochs, "Training epochs (default 10)");
    cmd->add_option("--lr", learning_rate, "Learning rate (default 1e-3)");
    cmd->add_option("--momentum", momentum, "SGD momentum (default 0.9)");
    cmd->add_option("--batch-size", batch_size, "Mini-batch size (default 16)");
    cmd->add_flag("--no-augment", no_augment, "Train on originals only (skip the >=10x plan)");
  }

  TrainConfig to_config(std::uint64_t seed) const {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.learning_rate = learning_rate;
    cfg.momentum = momentum;
    cfg.batch_size = batch_size;
    cfg.seed = seed;
    cfg.use_augmentation = !no_augment;
    return cfg;
  }
};

FoldPlan folds_for(const DatasetManifest& manifest, const std::string& folds_path, int k,
                   std::uint64_t seed) {
  if (!folds_path.empty()) return load_fold_plan(folds_path);
  return make_folds(manifest, k, seed);
}

std::vector<HeadParams<float>> load_heads(const fs::path& dir, int k) {
  std::vector<HeadParams<float>> heads;
  for (int f = 0; f < k; ++f) {
    const fs::path p = dir / ("head_fold" + std::to_string(f) + ".lsw1");
    if (!fs::exists(p)) throw ModelError("missing trained head archive: " + p.string());
    heads.push_back(head_from_archive(load(p)));
  }
  return heads;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"luscreen: portable lung-ultrasound COVID-19 screening pipeline"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Global RNG seed (default 0)");

  // ---- summarize ----
  auto* cmd_summarize = app.add_subcommand("summarize", "Print a model's layer table");
  ModelFlags sum_model;
  sum_model.attach(cmd_summarize);
  cmd_summarize->callback([&] { std::cout << summarize(sum_model.build()); });

  // ---- init-weights ----
  auto* cmd_init = app.add_subcommand("init-weights", "Write a random- or zero-initialized LSW1 archive");
  ModelFlags init_model;
  init_model.attach(cmd_init);
  std::string init_out;
  bool init_zero = false;
  cmd_init->add_option("--out", init_out, "Output .lsw1 path")->required();
  cmd_init->add_flag("--zero", init_zero, "Zero initialization instead of He-uniform");
  cmd_init->callback([&] {
    const ModelGraph g = init_model.build();
    const WeightArchive archive = init_zero ? zero_init(g) : he_uniform_init(g, seed);
    save(archive, init_out);
    std::cerr << "wrote " << archive.size() << " tensors to " << init_out << "\n";
  });

  // ---- select-frames ----
  auto* cmd_frames = app.add_subcommand("select-frames", "List frame indices for a stride");
  std::int64_t frame_count = 0, stride = 1;
  cmd_frames->add_option("--count", frame_count, "Total frames in the clip")->required();
  cmd_frames->add_option("--stride", stride, "Extraction stride (default 1)");
  cmd_frames->callback([&] {
    for (auto i : select_frames(frame_count, stride)) std::cout << i << "\n";
  });

  // ---- split ----
  auto* cmd_split = app.add_subcommand("split", "Create a grouped k-fold plan from a manifest");
  std::string split_manifest, split_out;
  int split_k = 5;
  cmd_split->add_option("--manifest", split_manifest, "JSONL manifest")->required();
  cmd_split->add_option("--k", split_k, "Fold count (default 5)");
  cmd_split->add_option("--out", split_out, "Output fold-plan JSON")->required();
  cmd_split->callback([&] {
    const DatasetManifest manifest = load_manifest(split_manifest);
    const FoldPlan plan = make_folds(manifest, split_k, seed);
    for (const auto& warning : check_fold_balance(manifest, plan)) {
      std::cerr << "warning: " << warning << "\n";
    }
    save_fold_plan(plan, split_out);
    std::cerr << "wrote fold plan for " << plan.assignment.size() << " videos to " << split_out
              << "\n";
  });

  // ---- augment ----
  auto* cmd_augment = app.add_subcommand("augment", "Expand one frame into its variant list");
  std::string aug_image, aug_mask, aug_out_dir = ".";
  double aug_shift = 0.10, aug_sigma = 0.05;
  cmd_augment->add_option("--image", aug_image, "Input PGM frame")->required();
  cmd_augment->add_option("--mask", aug_mask, "Optional PGM mask");
  cmd_augment->add_option("--out-dir", aug_out_dir, "Output directory (default .)");
  cmd_augment->add_option("--shift-fraction", aug_shift, "Shift as a fraction of each dim");
  cmd_augment->add_option("--noise-sigma", aug_sigma, "Noise sigma as a fraction of range");
  cmd_augment->callback([&] {
    AugmentConfig cfg;
    cfg.shift_fraction = aug_shift;
    cfg.noise_sigma = aug_sigma;
    const GrayImage image = read_pgm(aug_image);
    std::optional<GrayImage> mask;
    if (!aug_mask.empty()) mask = read_pgm(aug_mask);
    fs::create_directories(aug_out_dir);
    const std::string stem = fs::path(aug_image).stem().string();
    const auto variants = augment(image, mask, cfg, seed);
    for (std::size_t i = 0; i < variants.size(); ++i) {
      char suffix[16];
      std::snprintf(suffix, sizeof suffix, "_v%02zu", i);
      const fs::path img_path = fs::path(aug_out_dir) / (stem + suffix + ".pgm");
      write_pgm(variants[i].image, img_path);
      std::cout << img_path.string();
      if (variants[i].mask) {
        const fs::path mask_path = fs::path(aug_out_dir) / (stem + suffix + "_mask.pgm");
        write_pgm(*variants[i].mask, mask_path);
        std::cout << " " << mask_path.string();
      }
      std::cout << "\n";
    }
  });

  // ---- infer ----
  auto* cmd_infer = app.add_subcommand("infer", "Classify and segment one frame");
  std::string infer_image, weights_cls, weights_seg, infer_out_dir = "out";
  double threshold = 0.5;
  int infer_head_width = 64, infer_unet_base = 64;
  cmd_infer->add_option("--image", infer_image, "Input PGM frame")->required();
  cmd_infer->add_option("--weights-cls", weights_cls, "Classifier LSW1 archive")->required();
  cmd_infer->add_option("--weights-seg", weights_seg, "Segmenter LSW1 archive")->required();
  cmd_infer->add_option("--threshold", threshold, "Mask threshold (default 0.5)");
  cmd_infer->add_option("--out-dir", infer_out_dir, "Output directory (default out)");
  cmd_infer->add_option("--head-width", infer_head_width, "VGG-16 head width (default 64)");
  cmd_infer->add_option("--unet-base-channels", infer_unet_base,
                        "U-Net first-level channels (default 64)");
  cmd_infer->callback([&] {
    Vgg16Config vcfg;
    vcfg.head_width = infer_head_width;
    UnetConfig ucfg;
    ucfg.base_channels = infer_unet_base;
    const ModelGraph cls = build_vgg16(vcfg);
    const ModelGraph seg = build_unet(ucfg);
    const WeightArchive cls_w = load(weights_cls);
    const WeightArchive seg_w = load(weights_seg);
    PipelineModels models{&cls, &cls_w, &seg, &seg_w};
    InferOptions opts;
    opts.threshold = static_cast<float>(threshold);
    opts.out_dir = infer_out_dir;
    const InferenceReport report = infer_single(infer_image, models, opts);
    const std::string js = to_json_string(report);
    std::ofstream(fs::path(infer_out_dir) / (report.id + "_report.json")) << js << "\n";
    std::cout << js << "\n";
  });

  // ---- train-head ----
  auto* cmd_train = app.add_subcommand("train-head", "Fine-tune the classifier head per fold");
  std::string train_manifest, train_folds, train_weights, train_out_dir = "out";
  int train_k = 5, train_head_width = 64;
  TrainFlags train_flags;
  cmd_train->add_option("--manifest", train_manifest, "JSONL manifest")->required();
  cmd_train->add_option("--folds", train_folds, "Fold-plan JSON (default: derive with --k)");
  cmd_train->add_option("--k", train_k, "Fold count when deriving (default 5)");
  cmd_train->add_option("--weights-cls", train_weights, "Classifier LSW1 archive")->required();
  cmd_train->add_option("--out-dir", train_out_dir, "Output directory (default out)");
  cmd_train->add_option("--head-width", train_head_width, "VGG-16 head width (default 64)");
  train_flags.attach(cmd_train);
  cmd_train->callback([&] {
    const DatasetManifest manifest = load_manifest(train_manifest);
    const FoldPlan plan = folds_for(manifest, train_folds, train_k, seed);
    Vgg16Config vcfg;
    vcfg.head_width = train_head_width;
    const ModelGraph cls = build_vgg16(vcfg);
    const WeightArchive cls_w = load(train_weights);
    const TrainOutcome outcome = train_head(manifest, plan, cls, cls_w, train_flags.to_config(seed));
    fs::create_directories(train_out_dir);
    for (const auto& head : outcome.heads) {
      save(head_to_archive(head.params),
           fs::path(train_out_dir) / ("head_fold" + std::to_string(head.fold) + ".lsw1"));
    }
    save_fold_plan(plan, fs::path(train_out_dir) / "folds.json");
    const std::string js = to_json_string(outcome.report);
    std::ofstream(fs::path(train_out_dir) / "training.json") << js << "\n";
    std::cout << js << "\n";
  });

  // ---- evaluate ----
  auto* cmd_eval = app.add_subcommand("evaluate", "Cross-validated evaluation over a manifest");
  std::string eval_manifest, eval_folds, eval_weights_cls, eval_weights_seg, eval_heads_dir;
  std::string eval_out_dir = "out";
  int eval_k = 5, eval_head_width = 64, eval_unet_base = 64;
  unsigned eval_workers = 0;
  bool eval_train_inline = false;
  double eval_threshold = 0.5;
  TrainFlags eval_train_flags;
  cmd_eval->add_option("--manifest", eval_manifest, "JSONL manifest")->required();
  cmd_eval->add_option("--folds", eval_folds, "Fold-plan JSON (default: derive with --k)");
  cmd_eval->add_option("--k", eval_k, "Fold count when deriving (default 5)");
  cmd_eval->add_option("--weights-cls", eval_weights_cls, "Classifier LSW1 archive")->required();
  cmd_eval->add_option("--weights-seg", eval_weights_seg, "Segmenter LSW1 archive (optional)");
  cmd_eval->add_option("--heads-dir", eval_heads_dir, "Directory of head_fold*.lsw1 archives");
  cmd_eval->add_flag("--train", eval_train_inline, "Train heads inline instead of --heads-dir");
  cmd_eval->add_option("--threshold", eval_threshold, "Mask threshold (default 0.5)");
  cmd_eval->add_option("--out-dir", eval_out_dir, "Output directory (default out)");
  cmd_eval->add_option("--workers", eval_workers, "Parallel sample workers (0 = auto)");
  cmd_eval->add_option("--head-width", eval_head_width, "VGG-16 head width (default 64)");
  cmd_eval->add_option("--unet-base-channels", eval_unet_base,
                       "U-Net first-level channels (default 64)");
  eval_train_flags.attach(cmd_eval);
  cmd_eval->callback([&] {
    if (eval_heads_dir.empty() && !eval_train_inline) {
      throw CLI::ValidationError("evaluate", "pass --heads-dir or --train");
    }
    const DatasetManifest manifest = load_manifest(eval_manifest);
    const FoldPlan plan = folds_for(manifest, eval_folds, eval_k, seed);
    for (const auto& warning : check_fold_balance(manifest, plan)) {
      std::cerr << "warning: " << warning << "\n";
    }
    Vgg16Config vcfg;
    vcfg.head_width = eval_head_width;
    const ModelGraph cls = build_vgg16(vcfg);
    const WeightArchive cls_w = load(eval_weights_cls);
    ModelGraph seg;
    WeightArchive seg_w;
    PipelineModels models{&cls, &cls_w, nullptr, nullptr};
    if (!eval_weights_seg.empty()) {
      UnetConfig ucfg;
      ucfg.base_channels = eval_unet_base;
      seg = build_unet(ucfg);
      seg_w = load(eval_weights_seg);
      models.segmenter = &seg;
      models.segmenter_weights = &seg_w;
    }
    EvaluateOptions opts;
    opts.threshold = static_cast<float>(eval_threshold);
    opts.out_dir = eval_out_dir;
    opts.workers = eval_workers;
    opts.train = eval_train_flags.to_config(seed);
    if (!eval_heads_dir.empty()) opts.heads = load_heads(eval_heads_dir, plan.k);
    const EvaluateOutcome outcome = evaluate(manifest, plan, models, opts);
    std::cout << to_json_string(outcome.report) << "\n";
    if (!outcome.report_path.empty()) {
      std::cerr << "wrote " << outcome.report_path.string() << "\n";
    }
  });

  // ---- bench ----
  auto* cmd_bench = app.add_subcommand("bench", "Per-layer latency benchmark");
  ModelFlags bench_model;
  bench_model.attach(cmd_bench);
  std::string bench_weights;
  int bench_iterations = 10, bench_warmup = 2;
  cmd_bench->add_option("--weights", bench_weights,
                        "LSW1 archive (default: seeded random init)");
  cmd_bench->add_option("--iterations", bench_iterations, "Timed iterations (default 10)");
  cmd_bench->add_option("--warmup", bench_warmup, "Warmup iterations (default 2)");
  cmd_bench->callback([&] {
    const ModelGraph g = bench_model.build();
    const WeightArchive w = bench_weights.empty() ? he_uniform_init(g, seed) : load(bench_weights);
    std::cout << to_json_string(bench(g, w, bench_iterations, bench_warmup, seed)) << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

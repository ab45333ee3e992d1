#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "radon/errors.hpp"
#include "radon/harness.hpp"
#include "radon/icp.hpp"
#include "radon/plot.hpp"
#include "radon/synth.hpp"

namespace fs = std::filesystem;
using namespace radon;

namespace {

int run_synth(const std::string& config_path, uint64_t seed, const std::string& out,
              const std::string& id, bool binary) {
  synth::SynthConfig cfg =
      config_path.empty() ? synth::SynthConfig{} : synth::SynthConfig::from_file(config_path);
  const synth::SynthResult result = synth::generate(cfg, seed);
  synth::write_sequence(out, result, cfg, id.empty() ? fs::path(out).filename().string() : id,
                        binary);
  std::cout << "wrote " << result.frames.size() << " frames to " << out << "\n";
  return 0;
}

int run_train(const std::string& config_path, const std::vector<std::string>& sequences,
              const std::string& out, uint64_t seed_override, bool seed_set) {
  harness::TrainConfig cfg =
      config_path.empty() ? harness::TrainConfig{} : harness::TrainConfig::from_file(config_path);
  if (seed_set) cfg.seed = seed_override;
  ad::ParamStore store;
  const harness::TrainResult res = harness::train(cfg, sequences, out, store, [](const auto& st) {
    std::cout << "epoch " << st.epoch << "  mean_loss " << st.mean_loss << "  lr " << st.lr << "  ("
              << st.seconds << " s, " << st.pairs << " pairs)\n";
    return true;
  });
  std::cout << "trained " << res.epochs.size() << " epochs; checkpoints in " << out << "\n";
  return 0;
}

int run_infer(const std::string& checkpoint, const std::string& sequence, const std::string& out,
              bool use_icp) {
  fs::create_directories(out);
  const dataio::SequenceManifest manifest = dataio::manifest_of(sequence);
  const std::vector<dataio::Frame> frames = dataio::load_sequence(sequence);

  geom::Trajectory pred;
  harness::InferStats stats;
  if (use_icp) {
    std::vector<dataio::Frame> filtered;
    for (const dataio::Frame& f : frames)
      filtered.push_back(dataio::filter_points(f, manifest.fov_half_angle_deg, manifest.height_min,
                                               manifest.height_max));
    pred = harness::icp_baseline(filtered);
  } else {
    if (checkpoint.empty()) throw BadInput("infer: --checkpoint required (or --icp)");
    ad::ParamStore store;
    store.load(checkpoint);
    harness::TrainConfig defaults;  // net geometry must match the checkpoint
    pred = harness::infer_sequence(store, defaults.net, frames, manifest, &stats);
  }

  const std::string pose_path = (fs::path(out) / "pred_poses.txt").string();
  geom::write_pose_file(pose_path, pred);
  std::cout << "wrote " << pose_path;
  if (!use_icp) std::cout << "  (" << stats.ms_per_pair << " ms/pair, skipped " << stats.skipped_pairs << ")";
  std::cout << "\n";
  return 0;
}

int run_eval(const std::string& sequence, const std::string& pred_path, const std::string& out) {
  fs::create_directories(out);
  const dataio::SequenceManifest manifest = dataio::manifest_of(sequence);
  if (manifest.pose_file.empty()) throw BadInput("eval: sequence has no ground truth");
  const geom::Trajectory gt =
      geom::read_pose_file((fs::path(sequence) / manifest.pose_file).string());
  const geom::Trajectory pred = geom::read_pose_file(pred_path);

  const harness::SequenceEval ev = harness::evaluate_sequence(
      manifest.id, gt, pred, harness::default_eval_lengths());
  const harness::EvalReport report = harness::evaluate({ev});
  harness::write_report_csv((fs::path(out) / "report.csv").string(), report);
  harness::write_report_text((fs::path(out) / "report.txt").string(), report);
  std::cout << manifest.id << ": t_rel " << report.mean_t_rel << " m/m, r_rel " << report.mean_r_rel
            << " deg/m\n";
  return 0;
}

int run_plot(const std::string& gt_path, const std::string& pred_path, const std::string& out) {
  fs::create_directories(out);
  const geom::Trajectory gt = geom::read_pose_file(gt_path);
  const geom::Trajectory pred = geom::read_pose_file(pred_path);
  harness::plot_trajectories_svg((fs::path(out) / "trajectory.svg").string(),
                                 {{"ground truth", &gt}, {"prediction", &pred}});

  const harness::SequenceEval ev =
      harness::evaluate_sequence("plot", gt, pred, harness::default_eval_lengths());
  harness::write_per_length_csv((fs::path(out) / "per_length.csv").string(),
                                harness::evaluate({ev}));
  std::cout << "wrote " << (fs::path(out) / "trajectory.svg").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"4D radar odometry: synthetic scenes, training, inference, evaluation"};
  app.require_subcommand(1);

  std::string config_path, out = "out", checkpoint, sequence, id, pred_path, gt_path;
  std::vector<std::string> sequences;
  uint64_t seed = 0;
  bool binary = false, use_icp = false;

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic sequence");
  synth_cmd->add_option("--config", config_path, "generator config file");
  synth_cmd->add_option("--seed", seed, "rng seed")->default_val(0);
  synth_cmd->add_option("--out", out, "output sequence directory")->required();
  synth_cmd->add_option("--id", id, "sequence id (defaults to directory name)");
  synth_cmd->add_flag("--binary", binary, "write .rfrm frames instead of csv");

  CLI::App* train_cmd = app.add_subcommand("train", "train on sequences with ground truth");
  train_cmd->add_option("--config", config_path, "train config file");
  CLI::Option* seed_opt = train_cmd->add_option("--seed", seed, "override config seed");
  train_cmd->add_option("--sequence", sequences, "sequence directory (repeatable)")->required();
  train_cmd->add_option("--out", out, "run directory")->required();

  CLI::App* infer_cmd = app.add_subcommand("infer", "run odometry over a sequence");
  infer_cmd->add_option("--checkpoint", checkpoint, "parameter checkpoint");
  infer_cmd->add_option("--sequence", sequence, "sequence directory")->required();
  infer_cmd->add_option("--out", out, "output directory")->required();
  infer_cmd->add_flag("--icp", use_icp, "use the ICP baseline instead of the model");

  CLI::App* eval_cmd = app.add_subcommand("eval", "segment RPE against ground truth");
  eval_cmd->add_option("--sequence", sequence, "sequence directory with ground truth")->required();
  eval_cmd->add_option("--pred", pred_path, "predicted pose file")->required();
  eval_cmd->add_option("--out", out, "output directory")->required();

  CLI::App* plot_cmd = app.add_subcommand("plot", "trajectory overlay + per-length errors");
  plot_cmd->add_option("--gt", gt_path, "ground-truth pose file")->required();
  plot_cmd->add_option("--pred", pred_path, "predicted pose file")->required();
  plot_cmd->add_option("--out", out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cmd->parsed()) return run_synth(config_path, seed, out, id, binary);
    if (train_cmd->parsed())
      return run_train(config_path, sequences, out, seed, seed_opt->count() > 0);
    if (infer_cmd->parsed()) return run_infer(checkpoint, sequence, out, use_icp);
    if (eval_cmd->parsed()) return run_eval(sequence, pred_path, out);
    if (plot_cmd->parsed()) return run_plot(gt_path, pred_path, out);
  } catch (const BadInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

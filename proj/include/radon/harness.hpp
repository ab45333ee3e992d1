#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "radon/dataio.hpp"
#include "radon/geom.hpp"
#include "radon/model.hpp"

namespace radon::harness {

struct TrainConfig {
  int epochs = 60;
  double lr = 1e-3;
  double lr_decay = 0.9;  // per-epoch multiplier
  int batch = 1;          // sequential pairs within a window
  uint64_t seed = 42;
  model::NetConfig net;
  bool augment_flip = true;
  bool augment_jitter = true;
  double jitter_point_sigma = 0.02;   // m
  double jitter_pose_sigma_m = 0.02;  // m
  double jitter_pose_sigma_deg = 0.2;

  static TrainConfig from_file(const std::string& path);
  std::string to_json() const;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
  int64_t pairs = 0;
};

struct TrainResult {
  std::vector<EpochStats> epochs;
};

/// Loads sequences, standardizes rcs/rrv from the training set, registers
/// parameters, and optimizes the window-mean pair loss with Adam (one step
/// per clip-window segment; gradients do not cross window resets).
/// Checkpoints land in out_dir (checkpoint_epochNNN.caor, final.caor) with
/// metrics.csv and run_meta.json alongside. An optional callback runs after
/// each epoch; returning false stops training early.
TrainResult train(const TrainConfig& cfg, const std::vector<std::string>& sequence_dirs,
                  const std::string& out_dir, ad::ParamStore& store,
                  const std::function<bool(const EpochStats&)>& after_epoch = {});

struct InferStats {
  int skipped_pairs = 0;
  double ms_per_pair = 0.0;
};

/// Runs the trained model over a sequence; rejected frames contribute
/// identity motion (flagged). Frames are filtered per `manifest`.
geom::Trajectory infer_sequence(ad::ParamStore& store, const model::NetConfig& cfg,
                                const std::vector<dataio::Frame>& frames,
                                const dataio::SequenceManifest& manifest, InferStats* stats = nullptr);

struct SequenceEval {
  std::string id;
  geom::RpeResult rpe;
  double ms_per_pair = 0.0;
  int skipped_pairs = 0;
};

struct EvalReport {
  std::vector<SequenceEval> sequences;
  std::vector<double> lengths;
  double mean_t_rel = 0.0;
  double mean_r_rel = 0.0;
};

std::vector<double> default_eval_lengths();  // 20..160 m step 20

EvalReport evaluate(const std::vector<SequenceEval>& per_sequence);
SequenceEval evaluate_sequence(const std::string& id, const geom::Trajectory& gt,
                               const geom::Trajectory& pred, const std::vector<double>& lengths,
                               double ms_per_pair = 0.0, int skipped = 0);

/// CSV schema: seq,length_m,t_rel,r_rel (one row per sequence per length).
void write_report_csv(const std::string& path, const EvalReport& report);
void write_report_text(const std::string& path, const EvalReport& report);

}  // namespace radon::harness

#pragma once

#include <vector>

#include "radon/geom.hpp"
#include "radon/rng.hpp"
#include "radon/tape.hpp"

namespace radon::com {

struct ComConfig {
  int channels = 64;
  int window = 5;  // clip capacity L
  int blocks = 2;  // stacked bi-directional blocks I
  bool dense_ssm = false;
  ad::ScanForm scan_form = ad::ScanForm::kKernel;
};

void register_com_params(ad::ParamStore& store, const ComConfig& cfg, Rng& rng);

/// Column-wise max over the correlation rows, then an MLP: the per-pair
/// state vector (1 x C).
ad::Value pool_state(ad::Tape& tape, ad::ParamStore& store, ad::Value g);

/// Clip window: cleared whenever t mod L == 0, refilled otherwise, so the
/// stored length after updating at t is (t mod L) + 1.
class StateWindow {
 public:
  explicit StateWindow(int capacity);

  /// t must advance (t > last); a non-reset gap is rejected.
  void update(int64_t t, ad::Value g);
  const std::vector<ad::Value>& states() const { return states_; }
  size_t size() const { return states_.size(); }
  int64_t last_t() const { return t_; }
  int capacity() const { return capacity_; }
  bool resets_at(int64_t t) const { return t % capacity_ == 0; }
  void clear();

 private:
  int capacity_;
  int64_t t_ = -1;
  std::vector<ad::Value> states_;
};

/// Stacks the window states into a (T x C) sequence.
ad::Value stack_window(ad::Tape& tape, const StateWindow& w);

/// One bi-directional block: scan the normalized sequence forward and
/// reversed, sum, then a residual MLP.
ad::Value bi_block(ad::Tape& tape, ad::ParamStore& store, ad::Value seq, int block,
                   const ComConfig& cfg);
ad::Value bi_block_stack(ad::Tape& tape, ad::ParamStore& store, ad::Value seq, const ComConfig& cfg);

struct PoseEstimate {
  ad::Value q_raw;   // 1 x 4
  ad::Value q_norm;  // 1 x 4, unit length (differentiable normalization)
  ad::Value t;       // 1 x 3

  /// Canonical Pose (hemisphere-normalized quaternion).
  geom::Pose pose() const;
};

/// Reads the last (current) state off the optimized window sequence and
/// regresses quaternion + translation through two MLP heads.
PoseEstimate pose_head(ad::Tape& tape, ad::ParamStore& store, ad::Value seq);

/// Homoscedastic-weighted pose loss with learnable balance terms:
///   L = Lq exp(-wq) + wq + Lt exp(-wt) + wt.
/// The ground-truth quaternion is flipped to the hemisphere nearest the
/// prediction before the residual.
ad::Value pair_loss(ad::Tape& tape, ad::ParamStore& store, const PoseEstimate& est,
                    const geom::Pose& gt);

/// Caps the scan transition spectrum after an optimizer step (|a| for the
/// diagonal form; 2-norm scaling for the dense form).
void clamp_ssm_spectrum(ad::ParamStore& store, double limit = 0.999);

}  // namespace radon::com

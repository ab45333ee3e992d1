#include "radon/model.hpp"

namespace radon::model {

void register_params(ad::ParamStore& store, const NetConfig& cfg, Rng& rng) {
  pointops::register_backbone_params(store, cfg.backbone_cfg(), rng);
  lcm::register_lcm_params(store, cfg.lcm_cfg(), rng);
  cam::register_cam_params(store, cfg.cam_cfg(), rng);
  com::register_com_params(store, cfg.com_cfg(), rng);
}

com::PoseEstimate forward_pair(ad::Tape& tape, ad::ParamStore& store, const NetConfig& cfg,
                               const dataio::Frame& a, const dataio::Frame& b,
                               com::StateWindow& window, int64_t pair_index) {
  const pointops::EncodedCloud enc1 = pointops::encode_backbone(tape, store, a, cfg.backbone_cfg());
  const pointops::EncodedCloud enc2 = pointops::encode_backbone(tape, store, b, cfg.backbone_cfg());

  const lcm::Completed q1 =
      lcm::complete(tape, store, enc1.coords, enc1.feats, cfg.m_completion, cfg.lcm_cfg());
  const lcm::Completed q2 =
      lcm::complete(tape, store, enc2.coords, enc2.feats, cfg.m_completion, cfg.lcm_cfg());

  ad::Value g = cam::cam_forward(tape, store, {q1.coords, q1.feats}, {q2.coords, q2.feats},
                                 cfg.cam_cfg());

  window.update(pair_index, com::pool_state(tape, store, g));
  ad::Value optimized = com::bi_block_stack(tape, store, com::stack_window(tape, window),
                                            cfg.com_cfg());
  return com::pose_head(tape, store, optimized);
}

}  // namespace radon::model

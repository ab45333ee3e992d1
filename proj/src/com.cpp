#include "radon/com.hpp"

#include <cmath>

#include "radon/errors.hpp"
#include "radon/nn.hpp"

namespace radon::com {

namespace {
std::string block_prefix(int block) { return "com/block" + std::to_string(block); }
}

void register_com_params(ad::ParamStore& store, const ComConfig& cfg, Rng& rng) {
  const int64_t c = cfg.channels;
  nn::register_mlp(store, "com/pool_mlp", c, c, c, rng);

  for (int i = 0; i < cfg.blocks; ++i) {
    const std::string p = block_prefix(i);
    nn::register_ln(store, p + "/ln1", c);
    if (cfg.dense_ssm) {
      ad::Tensor a({c, c});
      for (int64_t d = 0; d < c; ++d) a.at(d, d) = rng.uniform(0.5, 0.95);
      store.create(p + "/ssm_a", std::move(a));
    } else {
      ad::Tensor a({c});
      for (int64_t d = 0; d < c; ++d) a[d] = rng.uniform(0.5, 0.95);
      store.create(p + "/ssm_a", std::move(a));
    }
    ad::Tensor b({c}), cv({c});
    const double s = 1.0 / std::sqrt(static_cast<double>(c));
    for (int64_t d = 0; d < c; ++d) {
      b[d] = rng.normal(0.0, s);
      cv[d] = rng.normal(0.0, s);
    }
    store.create(p + "/ssm_b", std::move(b));
    store.create(p + "/ssm_c", std::move(cv));
    nn::register_ln(store, p + "/ln2", c);
    nn::register_mlp(store, p + "/mlp", c, c, c, rng);
  }

  // Heads start near the identity motion: tiny final weights, unit-w bias.
  nn::register_linear(store, "com/head_q/l1", c, c, rng);
  store.create("com/head_q/l2/w", nn::xavier({c, 4}, rng, 0.01));
  ad::Tensor qb({4});
  qb[0] = 1.0;
  store.create("com/head_q/l2/b", std::move(qb));
  nn::register_linear(store, "com/head_t/l1", c, c, rng);
  store.create("com/head_t/l2/w", nn::xavier({c, 3}, rng, 0.01));
  store.create("com/head_t/l2/b", ad::Tensor::zeros({3}));

  store.create("com/w_q", ad::Tensor::scalar(-2.5));
  store.create("com/w_t", ad::Tensor::scalar(0.0));
}

ad::Value pool_state(ad::Tape& tape, ad::ParamStore& store, ad::Value g) {
  return nn::mlp(tape, store, "com/pool_mlp", tape.reduce_max(g, 0));
}

StateWindow::StateWindow(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw BadInput("StateWindow: capacity must be >= 1");
}

void StateWindow::update(int64_t t, ad::Value g) {
  if (t <= t_) throw BadInput("StateWindow: out-of-order update");
  if (t % capacity_ == 0) {
    states_.clear();
  } else if (t != t_ + 1) {
    throw BadInput("StateWindow: non-contiguous update without reset");
  }
  states_.push_back(g);
  t_ = t;
}

void StateWindow::clear() {
  states_.clear();
  t_ = -1;
}

ad::Value stack_window(ad::Tape& tape, const StateWindow& w) {
  if (w.states().empty()) throw BadInput("stack_window: empty window");
  if (w.states().size() == 1) return w.states()[0];
  return tape.concat(w.states(), 0);
}

namespace {
ad::Value reverse_rows(ad::Tape& tape, ad::Value seq) {
  const int64_t t = seq.dim(0);
  std::vector<int64_t> idx(static_cast<size_t>(t));
  for (int64_t i = 0; i < t; ++i) idx[static_cast<size_t>(i)] = t - 1 - i;
  return tape.gather_rows(seq, idx);
}
}  // namespace

ad::Value bi_block(ad::Tape& tape, ad::ParamStore& store, ad::Value seq, int block,
                   const ComConfig& cfg) {
  const std::string p = block_prefix(block);
  ad::Value a = tape.param(store.at(p + "/ssm_a"));
  ad::Value b = tape.param(store.at(p + "/ssm_b"));
  ad::Value c = tape.param(store.at(p + "/ssm_c"));

  ad::Value normed = nn::ln(tape, store, p + "/ln1", seq);
  ad::Value fwd = tape.ssm_scan(normed, a, b, c, cfg.scan_form);
  ad::Value rev = reverse_rows(tape, tape.ssm_scan(reverse_rows(tape, normed), a, b, c, cfg.scan_form));
  ad::Value mixed = tape.add(fwd, rev);

  ad::Value refined = nn::mlp(tape, store, p + "/mlp", nn::ln(tape, store, p + "/ln2", mixed));
  return tape.add(refined, mixed);
}

ad::Value bi_block_stack(ad::Tape& tape, ad::ParamStore& store, ad::Value seq, const ComConfig& cfg) {
  ad::Value cur = seq;
  for (int i = 0; i < cfg.blocks; ++i) cur = bi_block(tape, store, cur, i, cfg);
  return cur;
}

PoseEstimate pose_head(ad::Tape& tape, ad::ParamStore& store, ad::Value seq) {
  const int64_t t_len = seq.dim(0);
  ad::Value last = tape.slice(seq, 0, t_len - 1, t_len);

  PoseEstimate est;
  est.q_raw = nn::mlp(tape, store, "com/head_q", last);
  ad::Value norm = tape.clamp_min(tape.l2norm(est.q_raw), 1e-12);
  est.q_norm = tape.mul(est.q_raw, tape.reciprocal(norm));
  est.t = nn::mlp(tape, store, "com/head_t", last);
  return est;
}

geom::Pose PoseEstimate::pose() const {
  const ad::Tensor& q = q_norm.val();
  const ad::Tensor& tr = t.val();
  geom::Pose p;
  p.q = geom::quat_normalize({q[0], q[1], q[2], q[3]});
  p.t = {tr[0], tr[1], tr[2]};
  return p;
}

ad::Value pair_loss(ad::Tape& tape, ad::ParamStore& store, const PoseEstimate& est,
                    const geom::Pose& gt) {
  const ad::Tensor& qp = est.q_norm.val();
  const double dot = qp[0] * gt.q[0] + qp[1] * gt.q[1] + qp[2] * gt.q[2] + qp[3] * gt.q[3];
  const double flip = dot < 0.0 ? -1.0 : 1.0;

  ad::Tensor qt({1, 4});
  for (int i = 0; i < 4; ++i) qt[i] = flip * gt.q[static_cast<size_t>(i)];
  ad::Tensor tt({1, 3});
  for (int i = 0; i < 3; ++i) tt[i] = gt.t[static_cast<size_t>(i)];

  ad::Value lq = tape.l2norm(tape.sub(est.q_norm, tape.constant(std::move(qt))));
  ad::Value lt = tape.l2norm(tape.sub(est.t, tape.constant(std::move(tt))));
  ad::Value wq = tape.param(store.at("com/w_q"));
  ad::Value wt = tape.param(store.at("com/w_t"));

  ad::Value rot_term = tape.add(tape.mul(lq, tape.exp(tape.neg(wq))), wq);
  ad::Value trans_term = tape.add(tape.mul(lt, tape.exp(tape.neg(wt))), wt);
  return tape.add(rot_term, trans_term);
}

void clamp_ssm_spectrum(ad::ParamStore& store, double limit) {
  for (ad::ParamSlot* s : store.slots()) {
    const std::string& p = s->path;
    if (p.size() < 6 || p.substr(p.size() - 6) != "/ssm_a") continue;
    if (s->value.rank() == 1) {
      for (int64_t i = 0; i < s->value.size(); ++i) {
        const double v = s->value[i];
        if (v > limit) s->value[i] = limit;
        if (v < -limit) s->value[i] = -limit;
      }
    } else {
      // 2-norm upper-bounds the spectral radius; estimate by power iteration
      const int64_t n = s->value.dim(0);
      std::vector<double> x(static_cast<size_t>(n), 1.0 / std::sqrt(static_cast<double>(n)));
      std::vector<double> y(static_cast<size_t>(n));
      double sigma = 0.0;
      for (int it = 0; it < 30; ++it) {
        for (int64_t i = 0; i < n; ++i) {
          double acc = 0.0;
          for (int64_t j = 0; j < n; ++j) acc += s->value.at(i, j) * x[static_cast<size_t>(j)];
          y[static_cast<size_t>(i)] = acc;
        }
        std::vector<double> z(static_cast<size_t>(n), 0.0);
        for (int64_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (int64_t i = 0; i < n; ++i) acc += s->value.at(i, j) * y[static_cast<size_t>(i)];
          z[static_cast<size_t>(j)] = acc;
        }
        double zn = 0.0;
        for (double v : z) zn += v * v;
        zn = std::sqrt(zn);
        if (zn < 1e-30) return;
        for (int64_t j = 0; j < n; ++j) x[static_cast<size_t>(j)] = z[static_cast<size_t>(j)] / zn;
        double yn = 0.0;
        for (double v : y) yn += v * v;
        sigma = std::sqrt(yn);
      }
      if (sigma > limit) {
        const double sc = limit / sigma;
        for (int64_t i = 0; i < s->value.size(); ++i) s->value[i] *= sc;
      }
    }
  }
}

}  // namespace radon::com

#include "radon/harness.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "radon/config.hpp"
#include "radon/errors.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace radon::harness {

TrainConfig TrainConfig::from_file(const std::string& path) {
  const config::KvFile kv = config::KvFile::parse(path);
  TrainConfig c;
  c.epochs = static_cast<int>(kv.get_int_or("epochs", c.epochs));
  c.lr = kv.get_double_or("lr", c.lr);
  c.lr_decay = kv.get_double_or("lr_decay", c.lr_decay);
  c.batch = static_cast<int>(kv.get_int_or("batch", c.batch));
  c.seed = static_cast<uint64_t>(kv.get_int_or("seed", static_cast<int64_t>(c.seed)));
  c.augment_flip = kv.get_bool_or("augment_flip", c.augment_flip);
  c.augment_jitter = kv.get_bool_or("augment_jitter", c.augment_jitter);
  c.jitter_point_sigma = kv.get_double_or("jitter_point_sigma", c.jitter_point_sigma);
  c.jitter_pose_sigma_m = kv.get_double_or("jitter_pose_sigma_m", c.jitter_pose_sigma_m);
  c.jitter_pose_sigma_deg = kv.get_double_or("jitter_pose_sigma_deg", c.jitter_pose_sigma_deg);

  model::NetConfig& n = c.net;
  n.n_points = static_cast<int>(kv.get_int_or("n_points", n.n_points));
  n.m_completion = static_cast<int>(kv.get_int_or("m_completion", n.m_completion));
  n.w_coarse = static_cast<int>(kv.get_int_or("w_coarse", n.w_coarse));
  n.window = static_cast<int>(kv.get_int_or("window", n.window));
  n.channels = static_cast<int>(kv.get_int_or("channels", n.channels));
  n.k_backbone = static_cast<int>(kv.get_int_or("k_backbone", n.k_backbone));
  n.k_lcm = static_cast<int>(kv.get_int_or("k_lcm", n.k_lcm));
  n.k_match = static_cast<int>(kv.get_int_or("k_match", n.k_match));
  n.sa1_radius = kv.get_double_or("sa1_radius", n.sa1_radius);
  n.sa2_radius = kv.get_double_or("sa2_radius", n.sa2_radius);
  n.lcm_radius = kv.get_double_or("lcm_radius", n.lcm_radius);
  n.ssm_blocks = static_cast<int>(kv.get_int_or("ssm_blocks", n.ssm_blocks));
  n.dense_ssm = kv.get_bool_or("dense_ssm", n.dense_ssm);
  n.cosine_feature_weight = kv.get_bool_or("cosine_feature_weight", n.cosine_feature_weight);
  n.scan_form = kv.get_string_or("scan_form", "kernel") == "recursive" ? ad::ScanForm::kRecursive
                                                                       : ad::ScanForm::kKernel;
  return c;
}

std::string TrainConfig::to_json() const {
  json j;
  j["epochs"] = epochs;
  j["lr"] = lr;
  j["lr_decay"] = lr_decay;
  j["batch"] = batch;
  j["seed"] = seed;
  j["augment_flip"] = augment_flip;
  j["augment_jitter"] = augment_jitter;
  j["jitter_point_sigma"] = jitter_point_sigma;
  j["jitter_pose_sigma_m"] = jitter_pose_sigma_m;
  j["jitter_pose_sigma_deg"] = jitter_pose_sigma_deg;
  j["net"] = {{"n_points", net.n_points},
              {"m_completion", net.m_completion},
              {"w_coarse", net.w_coarse},
              {"window", net.window},
              {"channels", net.channels},
              {"k_backbone", net.k_backbone},
              {"k_lcm", net.k_lcm},
              {"k_match", net.k_match},
              {"sa1_radius", net.sa1_radius},
              {"sa2_radius", net.sa2_radius},
              {"lcm_radius", net.lcm_radius},
              {"ssm_blocks", net.ssm_blocks},
              {"dense_ssm", net.dense_ssm},
              {"cosine_feature_weight", net.cosine_feature_weight},
              {"scan_form", net.scan_form == ad::ScanForm::kKernel ? "kernel" : "recursive"}};
  return j.dump(2);
}

namespace {

struct LoadedSequence {
  std::string id;
  dataio::SequenceManifest manifest;
  std::vector<dataio::Frame> frames;  // filtered
  std::vector<bool> usable;           // >= 8 points post-filter
};

LoadedSequence load_filtered(const std::string& dir) {
  LoadedSequence s;
  s.manifest = dataio::manifest_of(dir);
  s.id = s.manifest.id;
  std::vector<dataio::Frame> raw = dataio::load_sequence(dir);
  s.frames.reserve(raw.size());
  for (const dataio::Frame& f : raw) {
    dataio::Frame kept = dataio::filter_points(f, s.manifest.fov_half_angle_deg,
                                               s.manifest.height_min, s.manifest.height_max);
    s.usable.push_back(kept.points.size() >= 8);
    s.frames.push_back(std::move(kept));
  }
  return s;
}

void set_attr_stats(ad::ParamStore& store, const std::vector<LoadedSequence>& seqs) {
  double rcs_sum = 0, rcs_sq = 0, rrv_sum = 0, rrv_sq = 0;
  int64_t n = 0;
  for (const LoadedSequence& s : seqs)
    for (const dataio::Frame& f : s.frames)
      for (const dataio::RadarPoint& p : f.points) {
        rcs_sum += p.rcs;
        rcs_sq += static_cast<double>(p.rcs) * p.rcs;
        rrv_sum += p.rrv;
        rrv_sq += static_cast<double>(p.rrv) * p.rrv;
        ++n;
      }
  if (n < 2) throw NumericError("train: not enough points to standardize attributes");
  const double rcs_mu = rcs_sum / static_cast<double>(n);
  const double rrv_mu = rrv_sum / static_cast<double>(n);
  const double rcs_sd = std::sqrt(std::max(rcs_sq / static_cast<double>(n) - rcs_mu * rcs_mu, 1e-12));
  const double rrv_sd = std::sqrt(std::max(rrv_sq / static_cast<double>(n) - rrv_mu * rrv_mu, 1e-12));
  ad::ParamSlot& rcs = store.at("backbone/rcs_stats");
  rcs.value[0] = rcs_mu;
  rcs.value[1] = rcs_sd;
  ad::ParamSlot& rrv = store.at("backbone/rrv_stats");
  rrv.value[0] = rrv_mu;
  rrv.value[1] = rrv_sd;
}

[[noreturn]] void abort_nan(const ad::ParamStore& store, int epoch, int64_t pair) {
  std::ostringstream os;
  os << "train: non-finite loss at epoch " << epoch << ", pair " << pair
     << " (param norm " << store.value_norm() << ", grad norm " << store.grad_norm() << ")";
  throw NumericError(os.str());
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::vector<std::string>& sequence_dirs,
                  const std::string& out_dir, ad::ParamStore& store,
                  const std::function<bool(const EpochStats&)>& after_epoch) {
  if (sequence_dirs.empty()) throw BadInput("train: no sequences");
  fs::create_directories(out_dir);

  std::vector<LoadedSequence> seqs;
  for (const std::string& dir : sequence_dirs) {
    LoadedSequence s = load_filtered(dir);
    bool has_gt = true;
    for (const dataio::Frame& f : s.frames) has_gt = has_gt && f.gt_pose.has_value();
    if (!has_gt) throw BadInput("train: sequence without ground truth: " + dir);
    seqs.push_back(std::move(s));
  }

  Rng init_rng(cfg.seed);
  if (store.count() == 0) {
    model::register_params(store, cfg.net, init_rng);
    set_attr_stats(store, seqs);
  }

  if (cfg.augment_flip) {
    const size_t orig = seqs.size();
    for (size_t i = 0; i < orig; ++i) {
      LoadedSequence flipped;
      flipped.id = seqs[i].id + "_flip";
      flipped.manifest = seqs[i].manifest;
      flipped.frames = dataio::augment_flip(seqs[i].frames);
      flipped.usable.assign(seqs[i].usable.rbegin(), seqs[i].usable.rend());
      seqs.push_back(std::move(flipped));
    }
  }

  {
    std::ofstream meta(fs::path(out_dir) / "run_meta.json");
    meta << cfg.to_json() << "\n";
  }
  std::ofstream metrics(fs::path(out_dir) / "metrics.csv");
  metrics << "epoch,mean_loss,lr,seconds,pairs\n" << std::setprecision(12);

  TrainResult result;
  Rng aug_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  const int window = cfg.net.window;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = cfg.lr * std::pow(cfg.lr_decay, epoch);
    double loss_sum = 0.0;
    int64_t pair_count = 0;

    for (LoadedSequence& seq : seqs) {
      auto tape = std::make_unique<ad::Tape>();
      com::StateWindow win(window);
      std::vector<ad::Value> pending;
      int64_t pc = 0;  // computed-pair index driving the clip window

      auto flush = [&]() {
        if (pending.empty()) return;
        ad::Value total = pending[0];
        for (size_t i = 1; i < pending.size(); ++i) total = tape->add(total, pending[i]);
        total = tape->scale(total, 1.0 / static_cast<double>(pending.size()));
        tape->backward(total);
        store.adam_step(lr);
        com::clamp_ssm_spectrum(store);
        store.zero_grads();
        pending.clear();
        tape = std::make_unique<ad::Tape>();
        win.clear();
      };

      for (size_t t = 0; t + 1 < seq.frames.size(); ++t) {
        if (!seq.usable[t] || !seq.usable[t + 1]) continue;

        dataio::Frame fa = seq.frames[t];
        dataio::Frame fb = seq.frames[t + 1];
        if (cfg.augment_jitter) {
          dataio::augment_jitter(fa, cfg.jitter_point_sigma, cfg.jitter_pose_sigma_m,
                                 cfg.jitter_pose_sigma_deg, aug_rng);
          dataio::augment_jitter(fb, cfg.jitter_point_sigma, cfg.jitter_pose_sigma_m,
                                 cfg.jitter_pose_sigma_deg, aug_rng);
        }
        const geom::Pose rel_gt = geom::relative_pose(*fa.gt_pose, *fb.gt_pose);

        if (pc % window == 0) flush();  // detach across clip-window resets

        const com::PoseEstimate est =
            model::forward_pair(*tape, store, cfg.net, fa, fb, win, pc);
        ad::Value loss = com::pair_loss(*tape, store, est, rel_gt);
        const double lv = loss.val()[0];
        if (!std::isfinite(lv)) abort_nan(store, epoch, pc);
        loss_sum += lv;
        ++pair_count;
        pending.push_back(loss);
        ++pc;
      }
      flush();
    }

    const auto t1 = std::chrono::steady_clock::now();
    EpochStats st;
    st.epoch = epoch;
    st.mean_loss = pair_count ? loss_sum / static_cast<double>(pair_count) : 0.0;
    st.lr = lr;
    st.seconds = std::chrono::duration<double>(t1 - t0).count();
    st.pairs = pair_count;
    result.epochs.push_back(st);

    metrics << epoch << ',' << st.mean_loss << ',' << lr << ',' << st.seconds << ',' << pair_count
            << '\n';
    metrics.flush();

    std::ostringstream ck;
    ck << "checkpoint_epoch" << std::setw(3) << std::setfill('0') << epoch << ".caor";
    store.save((fs::path(out_dir) / ck.str()).string());

    if (after_epoch && !after_epoch(st)) break;
  }

  store.save((fs::path(out_dir) / "final.caor").string());
  return result;
}

geom::Trajectory infer_sequence(ad::ParamStore& store, const model::NetConfig& cfg,
                                const std::vector<dataio::Frame>& frames,
                                const dataio::SequenceManifest& manifest, InferStats* stats) {
  if (frames.size() < 2) throw BadInput("infer: need at least two frames");

  std::vector<dataio::Frame> kept;
  std::vector<bool> usable;
  for (const dataio::Frame& f : frames) {
    dataio::Frame g = dataio::filter_points(f, manifest.fov_half_angle_deg, manifest.height_min,
                                            manifest.height_max);
    usable.push_back(g.points.size() >= 8);
    kept.push_back(std::move(g));
  }

  std::vector<geom::Pose> rels;
  auto tape = std::make_unique<ad::Tape>();
  com::StateWindow win(cfg.window);
  int64_t pc = 0;
  int skipped = 0;
  double total_ms = 0.0;
  int64_t timed = 0;

  for (size_t t = 0; t + 1 < kept.size(); ++t) {
    if (!usable[t] || !usable[t + 1]) {
      rels.push_back(geom::Pose::identity());
      ++skipped;
      continue;
    }
    if (pc % cfg.window == 0) {
      tape = std::make_unique<ad::Tape>();
      win.clear();
    }
    const auto t0 = std::chrono::steady_clock::now();
    const com::PoseEstimate est = model::forward_pair(*tape, store, cfg, kept[t], kept[t + 1], win, pc);
    const auto t1 = std::chrono::steady_clock::now();
    total_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
    ++timed;
    rels.push_back(est.pose());
    ++pc;
  }

  if (stats) {
    stats->skipped_pairs = skipped;
    stats->ms_per_pair = timed ? total_ms / static_cast<double>(timed) : 0.0;
  }
  return geom::trajectory_from_relatives(rels);
}

std::vector<double> default_eval_lengths() {
  std::vector<double> out;
  for (int l = 20; l <= 160; l += 20) out.push_back(static_cast<double>(l));
  return out;
}

SequenceEval evaluate_sequence(const std::string& id, const geom::Trajectory& gt,
                               const geom::Trajectory& pred, const std::vector<double>& lengths,
                               double ms_per_pair, int skipped) {
  SequenceEval ev;
  ev.id = id;
  ev.rpe = geom::rpe_rmse(gt, pred, lengths);
  ev.ms_per_pair = ms_per_pair;
  ev.skipped_pairs = skipped;
  return ev;
}

EvalReport evaluate(const std::vector<SequenceEval>& per_sequence) {
  if (per_sequence.empty()) throw BadInput("evaluate: no sequences");
  EvalReport rep;
  rep.sequences = per_sequence;
  rep.lengths = per_sequence.front().rpe.lengths;
  double ts = 0, rs = 0;
  for (const SequenceEval& s : per_sequence) {
    ts += s.rpe.t_rel;
    rs += s.rpe.r_rel;
  }
  rep.mean_t_rel = ts / static_cast<double>(per_sequence.size());
  rep.mean_r_rel = rs / static_cast<double>(per_sequence.size());
  return rep;
}

void write_report_csv(const std::string& path, const EvalReport& report) {
  std::ofstream os(path);
  if (!os) throw BadInput("report: cannot open for write: " + path);
  os << "seq,length_m,t_rel,r_rel\n" << std::setprecision(12);
  for (const SequenceEval& s : report.sequences)
    for (size_t i = 0; i < s.rpe.lengths.size(); ++i)
      os << s.id << ',' << s.rpe.lengths[i] << ',' << s.rpe.t_rel_per_length[i] << ','
         << s.rpe.r_rel_per_length[i] << '\n';
}

void write_report_text(const std::string& path, const EvalReport& report) {
  std::ofstream os(path);
  if (!os) throw BadInput("report: cannot open for write: " + path);
  os << std::setprecision(6);
  os << "sequence      t_rel(m/m)  r_rel(deg/m)  ms/pair  skipped\n";
  for (const SequenceEval& s : report.sequences) {
    os << std::left << std::setw(14) << s.id << std::setw(12) << s.rpe.t_rel << std::setw(14)
       << s.rpe.r_rel << std::setw(9) << s.ms_per_pair << s.skipped_pairs << "\n";
  }
  os << std::left << std::setw(14) << "mean" << std::setw(12) << report.mean_t_rel << std::setw(14)
     << report.mean_r_rel << "\n";
}

}  // namespace radon::harness

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tgc/data/dataset.hpp"
#include "tgc/text/encoder.hpp"
#include "tgc/train/checkpoint.hpp"
#include "tgc/train/losses.hpp"

namespace tgc {

/// A mini-batch of real-synthetic triplets before the generator runs:
/// indices of the matched and mismatched real videos, their stacked tensors,
/// the conditioning embeddings and the noise.
struct TripletBatch {
  std::vector<std::size_t> pos, neg;
  Tensor<float> v_pos, v_neg;  // [B, C, L, H, W]
  Tensor<float> s;             // [B x s_dim]
  Tensor<float> z;             // [B x z_dim]
  [[nodiscard]] std::size_t size() const noexcept { return pos.size(); }
};

struct StepReport {
  std::size_t iteration = 0;
  double loss_d = 0, loss_g = 0;  // means over triplets
  double l_v = 0, l_f = 0, l_t = 0;
  double coherence = 0;
  double grad_norm_d = 0, grad_norm_g = 0;
  std::size_t clamped = 0;
};

inline std::string metrics_header() { return "iter,loss_d,loss_g,l_v,l_f,l_t"; }

inline std::string metrics_row(const StepReport& r) {
  char b[256];
  std::snprintf(b, sizeof(b), "%zu,%.9g,%.9g,%.9g,%.9g,%.9g", r.iteration, r.loss_d, r.loss_g, r.l_v, r.l_f, r.l_t);
  return b;
}

/// Stacks same-shaped tensors along a new leading axis.
inline Tensor<float> stack(const std::vector<const Tensor<float>*>& xs) {
  if (xs.empty()) throw InputError("nothing to stack");
  Shape s{xs.size()};
  s.insert(s.end(), xs[0]->shape().begin(), xs[0]->shape().end());
  Tensor<float> out(s);
  const std::size_t n = xs[0]->size();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i]->require_same_shape(*xs[0], "stack");
    std::copy_n(xs[i]->ptr(), n, out.ptr() + i * n);
  }
  return out;
}

/// Row i of a [N, ...] tensor.
inline Tensor<float> row_of(const Tensor<float>& t, std::size_t i) {
  Shape s(t.shape().begin() + 1, t.shape().end());
  const std::size_t n = shape_size(s);
  return Tensor<float>(s, std::vector<float>(t.ptr() + i * n, t.ptr() + (i + 1) * n));
}

/// Rows [b, e) of a [N, ...] tensor.
inline Tensor<float> rows_of(const Tensor<float>& t, std::size_t b, std::size_t e) {
  Shape s = t.shape();
  const std::size_t n = t.size() / s[0];
  s[0] = e - b;
  return Tensor<float>(s, std::vector<float>(t.ptr() + b * n, t.ptr() + e * n));
}

/// Alternating discriminator / generator training over a captioned video set
/// with a frozen sentence encoder.
class Trainer {
 public:
  Trainer(TrainConfig cfg, VideoDataset data, TextEncoder<float> encoder, std::vector<std::string> probe_captions = {})
      : cfg_(std::move(cfg)), data_(std::move(data)), enc_(std::move(encoder)) {
    validate();
    Rng init(derive_seed(cfg_.seed, 0));
    g_ = Generator<float>(cfg_.model, init);
    d_ = Discriminators<float>(cfg_.model, init);
    const AdamConfig ac{cfg_.learning_rate, cfg_.beta1, cfg_.beta2, cfg_.adam_eps};
    g_opt_ = AdamState<float>(ac);
    d_opt_ = AdamState<float>(ac);
    rng_ = Rng(derive_seed(cfg_.seed, 2));
    enc_.params().set_trainable(false);
    enc_fingerprint_ = enc_.params().fingerprint();
    index_captions();
    make_probes(probe_captions);
  }

  [[nodiscard]] const TrainConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] Generator<float>& generator() noexcept { return g_; }
  [[nodiscard]] Discriminators<float>& discriminators() noexcept { return d_; }
  [[nodiscard]] const TextEncoder<float>& encoder() const noexcept { return enc_; }
  [[nodiscard]] const VideoDataset& dataset() const noexcept { return data_; }
  [[nodiscard]] std::size_t iteration() const noexcept { return iteration_; }
  [[nodiscard]] Rng& rng() noexcept { return rng_; }
  [[nodiscard]] const AdamState<float>& g_opt() const noexcept { return g_opt_; }
  [[nodiscard]] const AdamState<float>& d_opt() const noexcept { return d_opt_; }

  /// Cached sentence embedding of a caption (encoded on first use).
  [[nodiscard]] const Tensor<float>& embedding(const std::string& caption) {
    const auto key = normalize_caption(caption);
    auto it = s_cache_.find(key);
    if (it == s_cache_.end()) it = s_cache_.emplace(key, enc_.encode_text(caption)).first;
    return it->second;
  }

  [[nodiscard]] std::size_t caption_id(std::size_t sample) const { return caption_of_[sample]; }

  /// Uniform batch with replacement; each mismatched video is uniform over
  /// the videos whose normalized caption differs; z ~ N(0, 1).
  TripletBatch assemble_triplets(std::size_t batch_size) {
    if (batch_size == 0) throw InputError("batch size must be at least 1");
    TripletBatch t;
    const std::size_t n = data_.size();
    std::vector<const Tensor<float>*> vp, vn, ss;
    for (std::size_t b = 0; b < batch_size; ++b) {
      const std::size_t i = rng_.uniform_index(n);
      std::size_t j = rng_.uniform_index(n);
      while (caption_of_[j] == caption_of_[i]) j = rng_.uniform_index(n);
      t.pos.push_back(i);
      t.neg.push_back(j);
      vp.push_back(&data_.samples[i].video);
      vn.push_back(&data_.samples[j].video);
      ss.push_back(&embedding(data_.samples[i].caption));
    }
    t.v_pos = stack(vp);
    t.v_neg = stack(vn);
    t.s = stack(ss);
    t.z = Tensor<float>(Shape{batch_size, cfg_.model.z_dim});
    for (auto& v : t.z.data()) v = static_cast<float>(rng_.normal());
    return t;
  }

  /// One discriminator update followed by one generator update with the same
  /// noise.
  StepReport train_step(const TripletBatch& t) {
    if (t.size() == 0) throw InputError("empty triplet batch");
    const Scheme scheme = cfg_.scheme;
    const std::size_t B = t.size(), L = cfg_.model.frames;
    StepReport r;
    r.iteration = iteration_ + 1;
    const auto S = Var<float>::constant(t.s);
    const auto vpos = Var<float>::constant(t.v_pos);
    const auto vneg = Var<float>::constant(t.v_neg);

    g_.params().set_trainable(true);
    g_.params().zero_grad();
    const auto v_syn = g_.forward(Var<float>::constant(t.z), S, NormMode::kTrain, true);
    const auto v_syn_d = v_syn.detach();

    // Discriminator step.
    d_.params().set_trainable(true);
    d_.params().zero_grad();
    DiscriminatorTerms<float> dt;
    dt.l_v = matching_loss(d_.video_score(vpos, S, NormMode::kTrain, true),
                           d_.video_score(vneg, S, NormMode::kTrain, true),
                           d_.video_score(v_syn_d, S, NormMode::kTrain, true), &r.clamped);
    if (uses_frames(scheme)) {
      auto fp = d_.frame_scores(vpos, S, NormMode::kTrain, true);
      auto fn = d_.frame_scores(vneg, S, NormMode::kTrain, true);
      auto fs = d_.frame_scores(v_syn_d, S, NormMode::kTrain, true);
      dt.l_f = matching_loss(fp.scores, fn.scores, fs.scores, &r.clamped);
      if (uses_motion(scheme)) {
        const auto mp = d_.motion_scores(Discriminators<float>::motions_from_features(fp.features, B, L), S, L);
        const auto mn = d_.motion_scores(Discriminators<float>::motions_from_features(fn.features, B, L), S, L);
        const auto ms = d_.motion_scores(Discriminators<float>::motions_from_features(fs.features, B, L), S, L);
        dt.l_t = matching_loss(mp, mn, ms, &r.clamped);
      }
    }
    const auto loss_d = discriminator_objective(scheme, dt);
    r.l_v = mean_of(dt.l_v);
    r.l_f = dt.l_f.defined() ? mean_of(dt.l_f) : 0.0;
    r.l_t = dt.l_t.defined() ? mean_of(dt.l_t) : 0.0;
    r.loss_d = static_cast<double>(loss_d.value().item()) / static_cast<double>(B);
    if (!std::isfinite(r.loss_d)) numeric_failure("discriminator", r, v_syn);
    backward(loss_d);
    r.grad_norm_d = d_.params().grad_norm();
    d_.params().adam_step(d_opt_);

    // Generator step against the updated, frozen discriminators.
    d_.params().set_trainable(false);
    GeneratorTerms<float> gt;
    gt.log_d0 = mean_log(d_.video_score(v_syn, S, NormMode::kTrain, false), &r.clamped);
    if (uses_frames(scheme)) {
      auto fs = d_.frame_scores(v_syn, S, NormMode::kTrain, false);
      gt.log_d1 = mean_log(fs.scores, &r.clamped);
      if (L >= 2) gt.coherence = coherence_constraint(fs.features, B, L);
      if (uses_motion(scheme)) {
        gt.log_phi2 =
            mean_log(d_.motion_scores(Discriminators<float>::motions_from_features(fs.features, B, L), S, L), &r.clamped);
      }
    }
    const auto loss_g = generator_objective(scheme, gt);
    r.coherence = gt.coherence.defined() ? mean_of(gt.coherence) : 0.0;
    r.loss_g = static_cast<double>(loss_g.value().item()) / static_cast<double>(B);
    if (!std::isfinite(r.loss_g)) numeric_failure("generator", r, v_syn);
    backward(loss_g);
    r.grad_norm_g = g_.params().grad_norm();
    g_.params().adam_step(g_opt_);
    d_.params().set_trainable(true);
    d_.params().zero_grad();
    ++iteration_;
    return r;
  }

  StepReport step() { return train_step(assemble_triplets(cfg_.batch_size)); }

  [[nodiscard]] Checkpoint checkpoint() const {
    Checkpoint c;
    c.config = cfg_;
    c.iteration = iteration_;
    c.rng = rng_.state();
    c.encoder_fingerprint = enc_fingerprint_;
    c.generator = g_;
    c.discriminators = d_;
    c.g_opt = g_opt_;
    c.d_opt = d_opt_;
    return c;
  }

  /// Restores models, optimizer moments, iteration and RNG stream.
  void restore(Checkpoint c) {
    if (config_hash(c.config) != config_hash(cfg_)) {
      throw ConfigError("checkpoint was written with a different configuration (hash " + hex64(config_hash(c.config)) +
                        ", current " + hex64(config_hash(cfg_)) + ")");
    }
    if (c.encoder_fingerprint != enc_fingerprint_) {
      throw ConfigError("checkpoint was trained with a different text encoder");
    }
    g_ = std::move(c.generator);
    d_ = std::move(c.discriminators);
    g_opt_ = std::move(c.g_opt);
    d_opt_ = std::move(c.d_opt);
    iteration_ = c.iteration;
    rng_.set_state(c.rng);
  }

  void check_encoder_frozen() const {
    if (enc_.params().fingerprint() != enc_fingerprint_) {
      throw ContractError("text encoder parameters changed during adversarial training");
    }
  }

  /// Generator videos for the fixed probe set, inference-mode batch norm.
  [[nodiscard]] std::vector<Tensor<float>> probe_videos() {
    if (probe_z_.size() == 0) return {};
    const auto v = g_.forward(Var<float>::constant(probe_z_), Var<float>::constant(probe_s_), NormMode::kInference, false);
    std::vector<Tensor<float>> out;
    for (std::size_t i = 0; i < probe_captions_.size(); ++i) out.push_back(row_of(v.value(), i));
    return out;
  }

  [[nodiscard]] const std::vector<std::string>& probe_captions() const noexcept { return probe_captions_; }

  /// Runs until cfg.iterations. Writes <out>/metrics.csv, checkpoints under
  /// <out>/checkpoints/iter_NNNNNN (every checkpoint_interval and at the
  /// end), <out>/latest, sample grids under <out>/samples and a copy of the
  /// encoder under <out>/encoder. A resumed run keeps the metrics rows up to
  /// the restored iteration.
  void run(const std::filesystem::path& out, const std::function<void(const StepReport&)>& progress = {}) {
    namespace fs = std::filesystem;
    fs::create_directories(out / "checkpoints");
    fs::create_directories(out / "samples");
    if (!fs::exists(out / "encoder" / "encoder.tgcb")) enc_.save(out / "encoder");
    std::vector<std::string> kept;
    if (iteration_ > 0 && fs::exists(out / "metrics.csv")) {
      std::ifstream in(out / "metrics.csv");
      std::string line;
      std::getline(in, line);
      while (std::getline(in, line) && kept.size() < iteration_) kept.push_back(line);
    }
    std::ofstream metrics(out / "metrics.csv", std::ios::trunc);
    if (!metrics) throw IoError("cannot write " + (out / "metrics.csv").string());
    metrics << metrics_header() << "\n";
    for (const auto& l : kept) metrics << l << "\n";
    metrics.flush();
    const auto save = [&] {
      check_encoder_frozen();
      char name[32];
      std::snprintf(name, sizeof(name), "iter_%06zu", iteration_);
      save_checkpoint(out / "checkpoints" / name, checkpoint());
      std::ofstream(out / "latest") << "checkpoints/" << name << "\n";
      const auto probes = probe_videos();
      if (!probes.empty()) {
        const auto fmt = parse_video_format(cfg_.sample_format);
        export_video(tile_videos(probes), out / "samples" / (std::string(name) + video_extension(fmt)), fmt);
      }
    };
    if (iteration_ == 0 && (cfg_.iterations == 0 || cfg_.checkpoint_interval == 0)) save();
    while (iteration_ < cfg_.iterations) {
      const auto r = step();
      metrics << metrics_row(r) << "\n";
      metrics.flush();
      if (progress) progress(r);
      if ((cfg_.checkpoint_interval && iteration_ % cfg_.checkpoint_interval == 0) || iteration_ == cfg_.iterations) {
        save();
      }
    }
  }

 private:
  void validate() const {
    if (cfg_.batch_size == 0) throw ConfigError("batch_size must be at least 1");
    if (!(cfg_.learning_rate >= 0)) throw ConfigError("learning_rate must be nonnegative");
    if (enc_.embedding_dim() != cfg_.model.s_dim) {
      throw ConfigError("text encoder width " + std::to_string(enc_.embedding_dim()) + " does not match s_dim " +
                        std::to_string(cfg_.model.s_dim));
    }
    if (data_.size() == 0) throw InputError("training dataset is empty");
    if (data_.video_shape() != cfg_.model.video_shape()) {
      throw DimensionError("dataset videos are " + shape_str(data_.video_shape()) + ", model expects " +
                           shape_str(cfg_.model.video_shape()));
    }
  }

  void index_captions() {
    std::map<std::string, std::size_t> ids;
    for (const auto& s : data_.samples) {
      const auto key = normalize_caption(s.caption);
      auto it = ids.emplace(key, ids.size()).first;
      caption_of_.push_back(it->second);
      (void)embedding(s.caption);
    }
    if (ids.size() < 2) throw InputError("dataset needs at least 2 distinct captions to form mismatched pairs");
  }

  void make_probes(std::vector<std::string> captions) {
    if (captions.empty()) captions = data_.distinct_captions();
    Rng rng(derive_seed(cfg_.seed, 1));
    std::vector<const Tensor<float>*> ss;
    for (std::size_t i = 0; i < cfg_.probe_count; ++i) probe_captions_.push_back(captions[rng.uniform_index(captions.size())]);
    if (probe_captions_.empty()) return;
    for (const auto& c : probe_captions_) ss.push_back(&embedding(c));
    probe_s_ = stack(ss);
    probe_z_ = Tensor<float>(Shape{probe_captions_.size(), cfg_.model.z_dim});
    for (auto& v : probe_z_.data()) v = static_cast<float>(rng.normal());
  }

  static double mean_of(const Var<float>& v) {
    double s = 0;
    for (float x : v.value().data()) s += x;
    return s / static_cast<double>(v.size());
  }

  [[noreturn]] void numeric_failure(const char* which, const StepReport& r, const Var<float>& v_syn) const {
    const auto st = tensor_stats(v_syn.value());
    std::ostringstream o;
    o << "non-finite " << which << " loss at iteration " << r.iteration << ": loss_d=" << r.loss_d
      << " loss_g=" << r.loss_g << " l_v=" << r.l_v << " l_f=" << r.l_f << " l_t=" << r.l_t
      << " clamped=" << r.clamped << "; v_syn min=" << st.min << " max=" << st.max << " mean=" << st.mean
      << " non_finite=" << st.non_finite;
    for (const auto* ps : {&g_.params(), &d_.params()}) {
      for (std::size_t i = 0; i < ps->size(); ++i) {
        const auto ps_stats = tensor_stats(ps->params()[i].value());
        if (ps_stats.non_finite) o << "; " << ps->names()[i] << " has " << ps_stats.non_finite << " non-finite values";
      }
    }
    throw NumericError(o.str());
  }

  TrainConfig cfg_;
  VideoDataset data_;
  TextEncoder<float> enc_;
  Generator<float> g_;
  Discriminators<float> d_;
  AdamState<float> g_opt_, d_opt_;
  Rng rng_;
  std::size_t iteration_ = 0;
  std::uint64_t enc_fingerprint_ = 0;
  std::vector<std::size_t> caption_of_;
  std::map<std::string, Tensor<float>> s_cache_;
  std::vector<std::string> probe_captions_;
  Tensor<float> probe_s_, probe_z_;
};

/// Test-time generation: tokenize, encode, draw z from the seed, fuse and
/// generate with inference-mode batch norm. Returns [C, L, H, W].
inline Tensor<float> generate_from_caption(const std::string& caption, Generator<float>& g,
                                           const TextEncoder<float>& enc, std::uint64_t seed,
                                           bool* all_unknown_caption = nullptr) {
  const auto c = tokenize(caption, enc.vocab());
  const bool unk = all_unknown(c);
  if (all_unknown_caption) *all_unknown_caption = unk;
  if (unk) std::cerr << "warning: every word of caption '" << caption << "' is outside the vocabulary\n";
  const auto s = enc.encode(c);
  Rng rng(seed);
  Tensor<float> z(Shape{1, g.config().z_dim});
  for (auto& v : z.data()) v = static_cast<float>(rng.normal());
  const auto v = g.forward(Var<float>::constant(z), Var<float>::constant(s.reshaped({1, s.size()})),
                           NormMode::kInference, false);
  return row_of(v.value(), 0);
}

}  // namespace tgc

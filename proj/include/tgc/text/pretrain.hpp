#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "tgc/core/adam.hpp"
#include "tgc/text/encoder.hpp"

namespace tgc {

struct PretrainOptions {
  std::size_t epochs = 200;
  double learning_rate = 2e-3;
  double clip_norm = 5.0;
  std::size_t batch_size = 4;
  std::uint64_t seed = 1;
};

struct PretrainReport {
  std::vector<double> epoch_loss;  // mean cross-entropy per target token
  double accuracy = 0;             // greedy reconstruction accuracy incl. <eos>
  double chance = 0;               // 1 / vocabulary size
  std::size_t captions = 0;
};

/// Decoder used only during pretraining: LSTM from a zero state whose input
/// at every step is [embedded previous token; S], followed by a projection
/// to the vocabulary. Token embeddings are the encoder's table.
template <typename T>
class CaptionDecoder {
 public:
  CaptionDecoder(const TextEncoder<T>& enc, Rng& rng) {
    const std::size_t H = enc.embedding_dim();
    LstmLayer<T>::create(params_, "dec", enc.config().embed_dim + H, H, rng);
    const double bound = 1.0 / std::sqrt(static_cast<double>(H));
    params_.add("out.w", init_uniform<T>({H, enc.vocab().size()}, -bound, bound, rng));
    params_.add("out.b", Tensor<T>(Shape{enc.vocab().size()}));
  }

  [[nodiscard]] ParamSet<T>& params() noexcept { return params_; }

  /// Summed teacher-forced cross-entropy over the batch and time steps.
  Var<T> loss(const TextEncoder<T>& enc, const std::vector<std::vector<std::size_t>>& batch) const {
    const auto s = enc.encode_batch(batch);
    const auto dec = LstmLayer<T>::bind(params_, "dec");
    const std::size_t n = batch[0].size();
    auto st = lstm_zero_state<T>(s.shape()[0], s.shape()[1]);
    std::vector<Var<T>> terms;
    std::vector<std::size_t> inputs(batch.size(), kBos), targets(batch.size());
    for (std::size_t t = 0; t <= n; ++t) {
      for (std::size_t b = 0; b < batch.size(); ++b) targets[b] = t < n ? batch[b][t] : kEos;
      st = lstm_step(dec, concat<T>({embedding<T>(inputs, enc.embedding_table()), s}, 1), st);
      terms.push_back(softmax_cross_entropy(linear(st.h, params_.get("out.w"), params_.get("out.b")), targets));
      inputs = targets;
    }
    return add_n(terms);
  }

  /// Greedy free-running decode of n tokens plus <eos>; returns hits.
  std::size_t greedy_hits(const TextEncoder<T>& enc, const std::vector<std::size_t>& tokens) const {
    const auto s = enc.encode_batch({tokens});
    const auto dec = LstmLayer<T>::bind(params_, "dec");
    auto st = lstm_zero_state<T>(s.shape()[0], s.shape()[1]);
    std::size_t prev = kBos, hits = 0;
    for (std::size_t t = 0; t <= tokens.size(); ++t) {
      const std::size_t idx[] = {prev};
      st = lstm_step(dec, concat<T>({embedding<T>(idx, enc.embedding_table()), s}, 1), st);
      const auto logits = linear(st.h, params_.get("out.w"), params_.get("out.b"));
      const auto& v = logits.value();
      prev = static_cast<std::size_t>(std::max_element(v.ptr(), v.ptr() + v.size()) - v.ptr());
      const std::size_t target = t < tokens.size() ? tokens[t] : kEos;
      hits += prev == target;
    }
    return hits;
  }

 private:
  ParamSet<T> params_;
};

template <typename T>
double reconstruction_accuracy(const TextEncoder<T>& enc, const CaptionDecoder<T>& dec,
                               const std::vector<Caption>& corpus) {
  std::size_t hits = 0, total = 0;
  for (const auto& c : corpus) {
    hits += dec.greedy_hits(enc, c.tokens);
    total += c.tokens.size() + 1;
  }
  return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

namespace detail {
template <typename T>
void clip_gradients(ParamSet<T>& a, ParamSet<T>& b, double max_norm) {
  const double na = a.grad_norm(), nb = b.grad_norm();
  const double norm = std::sqrt(na * na + nb * nb);
  if (!(norm > max_norm)) return;
  const T f = static_cast<T>(max_norm / norm);
  for (auto* ps : {&a, &b}) {
    for (const auto& p : ps->params()) {
      if (!p.has_grad()) continue;
      auto& g = const_cast<Tensor<T>&>(p.grad());
      for (auto& v : g.data()) v *= f;
    }
  }
}
}  // namespace detail

/// Sequence-autoencoder pretraining. Captions are batched by length; the
/// decoder is discarded afterwards and the encoder is left frozen.
template <typename T>
PretrainReport pretrain_autoencoder(TextEncoder<T>& enc, const std::vector<Caption>& corpus,
                                    const PretrainOptions& opt) {
  if (corpus.empty()) throw InputError("pretraining corpus is empty");
  Rng rng(opt.seed);
  CaptionDecoder<T> dec(enc, rng);
  enc.params().set_trainable(true);
  std::map<std::size_t, std::vector<std::vector<std::size_t>>> by_len;
  std::size_t target_tokens = 0;
  for (const auto& c : corpus) {
    if (c.tokens.empty()) throw InputError("empty caption in pretraining corpus");
    by_len[c.tokens.size()].push_back(c.tokens);
    target_tokens += c.tokens.size() + 1;
  }
  AdamConfig ac;
  ac.learning_rate = opt.learning_rate;
  AdamState<T> enc_state(ac), dec_state(ac);
  PretrainReport report;
  report.captions = corpus.size();
  report.chance = 1.0 / static_cast<double>(enc.vocab().size());
  for (std::size_t e = 0; e < opt.epochs; ++e) {
    double total = 0;
    std::vector<std::vector<std::vector<std::size_t>>> batches;
    for (auto& [len, group] : by_len) {
      for (std::size_t i = group.size(); i > 1; --i) std::swap(group[i - 1], group[rng.uniform_index(i)]);
      for (std::size_t i = 0; i < group.size(); i += std::max<std::size_t>(1, opt.batch_size)) {
        const std::size_t end = std::min(group.size(), i + std::max<std::size_t>(1, opt.batch_size));
        batches.emplace_back(group.begin() + static_cast<long>(i), group.begin() + static_cast<long>(end));
      }
    }
    for (const auto& batch : batches) {
      enc.params().zero_grad();
      dec.params().zero_grad();
      auto l = dec.loss(enc, batch);
      total += static_cast<double>(l.value().item());
      backward(l);
      detail::clip_gradients(enc.params(), dec.params(), opt.clip_norm);
      enc.params().adam_step(enc_state);
      dec.params().adam_step(dec_state);
    }
    const double mean = total / static_cast<double>(target_tokens);
    if (!std::isfinite(mean)) throw NumericError("non-finite pretraining loss at epoch " + std::to_string(e));
    report.epoch_loss.push_back(mean);
  }
  enc.params().zero_grad();
  enc.params().set_trainable(false);
  report.accuracy = reconstruction_accuracy(enc, dec, corpus);
  return report;
}

}  // namespace tgc

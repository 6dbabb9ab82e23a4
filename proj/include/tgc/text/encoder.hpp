#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "tgc/core/serialize.hpp"
#include "tgc/text/lstm.hpp"
#include "tgc/text/vocabulary.hpp"

namespace tgc {

struct TextEncoderConfig {
  std::size_t embed_dim = 256;
  std::size_t hidden = 256;  // also the sentence embedding width
};

/// Token embedding -> bidirectional LSTM -> encoder LSTM whose final hidden
/// state is the sentence embedding S.
template <typename T>
class TextEncoder {
 public:
  TextEncoder() = default;

  TextEncoder(Vocabulary vocab, TextEncoderConfig cfg, Rng& rng) : vocab_(std::move(vocab)), cfg_(cfg) {
    params_.add("embed", init_normal<T>({vocab_.size(), cfg_.embed_dim}, 1.0, rng));
    LstmLayer<T>::create(params_, "fwd", cfg_.embed_dim, cfg_.hidden, rng);
    LstmLayer<T>::create(params_, "bwd", cfg_.embed_dim, cfg_.hidden, rng);
    LstmLayer<T>::create(params_, "enc", 2 * cfg_.hidden, cfg_.hidden, rng);
  }

  [[nodiscard]] const Vocabulary& vocab() const noexcept { return vocab_; }
  [[nodiscard]] const TextEncoderConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] std::size_t embedding_dim() const noexcept { return cfg_.hidden; }
  [[nodiscard]] ParamSet<T>& params() noexcept { return params_; }
  [[nodiscard]] const ParamSet<T>& params() const noexcept { return params_; }

  [[nodiscard]] Var<T> embedding_table() const { return params_.get("embed"); }

  /// Token rows for step t of an equal-length batch.
  [[nodiscard]] Var<T> embed_step(const std::vector<std::vector<std::size_t>>& batch, std::size_t t) const {
    std::vector<std::size_t> idx(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) idx[b] = batch[b][t];
    return embedding<T>(idx, params_.get("embed"));
  }

  /// Per-position [B x 2 hidden] vectors [forward h_t; backward h_t].
  [[nodiscard]] std::vector<Var<T>> bilstm(const std::vector<std::vector<std::size_t>>& batch) const {
    const std::size_t n = check_batch(batch);
    const auto fwd = LstmLayer<T>::bind(params_, "fwd");
    const auto bwd = LstmLayer<T>::bind(params_, "bwd");
    std::vector<Var<T>> x(n), hf(n), hb(n);
    for (std::size_t t = 0; t < n; ++t) x[t] = embed_step(batch, t);
    auto s = lstm_zero_state<T>(batch.size(), cfg_.hidden);
    for (std::size_t t = 0; t < n; ++t) {
      s = lstm_step(fwd, x[t], s);
      hf[t] = s.h;
    }
    s = lstm_zero_state<T>(batch.size(), cfg_.hidden);
    for (std::size_t t = n; t-- > 0;) {
      s = lstm_step(bwd, x[t], s);
      hb[t] = s.h;
    }
    std::vector<Var<T>> out(n);
    for (std::size_t t = 0; t < n; ++t) out[t] = concat<T>({hf[t], hb[t]}, 1);
    return out;
  }

  /// S for an equal-length batch: [B x hidden].
  [[nodiscard]] Var<T> encode_batch(const std::vector<std::vector<std::size_t>>& batch) const {
    const auto enc = LstmLayer<T>::bind(params_, "enc");
    auto s = lstm_zero_state<T>(batch.size(), cfg_.hidden);
    for (const auto& h : bilstm(batch)) s = lstm_step(enc, h, s);
    return s.h;
  }

  [[nodiscard]] std::vector<Tensor<T>> bilstm_embed(const Caption& c) const {
    std::vector<Tensor<T>> out;
    for (const auto& v : bilstm({c.tokens})) out.push_back(v.value().reshaped({2 * cfg_.hidden}));
    return out;
  }

  [[nodiscard]] Tensor<T> encode(const Caption& c) const {
    return encode_batch({c.tokens}).value().reshaped({cfg_.hidden});
  }

  [[nodiscard]] Tensor<T> encode_text(const std::string& text) const { return encode(tokenize(text, vocab_)); }

  /// Directory layout: encoder.tgcb, vocab.txt, encoder.manifest.
  void save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    TensorBundle<T> bundle;
    params_.export_to(bundle, "text");
    save_bundle(dir / "encoder.tgcb", bundle);
    vocab_.save(dir / "vocab.txt");
    std::ofstream m(dir / "encoder.manifest");
    m << "embed_dim = " << cfg_.embed_dim << "\nhidden = " << cfg_.hidden << "\nvocab_size = " << vocab_.size()
      << "\nfingerprint = " << params_.fingerprint() << "\n";
    if (!m) throw IoError("cannot write " + (dir / "encoder.manifest").string());
  }

  static TextEncoder load(const std::filesystem::path& dir) {
    if (!std::filesystem::exists(dir / "encoder.tgcb")) {
      throw IoError("no text encoder at " + dir.string() + " (run pretrain-text first)");
    }
    std::map<std::string, std::string> kv;
    {
      std::ifstream m(dir / "encoder.manifest");
      if (!m) throw IoError("cannot read " + (dir / "encoder.manifest").string());
      for (std::string line; std::getline(m, line);) {
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
          s.erase(0, s.find_first_not_of(" \t"));
          s.erase(s.find_last_not_of(" \t\r") + 1);
          return s;
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
      }
    }
    TextEncoderConfig cfg;
    try {
      cfg.embed_dim = std::stoul(kv.at("embed_dim"));
      cfg.hidden = std::stoul(kv.at("hidden"));
    } catch (const std::exception&) {
      throw FormatError("malformed encoder manifest in " + dir.string());
    }
    Rng rng(0);
    TextEncoder e(Vocabulary::load(dir / "vocab.txt"), cfg, rng);
    e.params_.import_from(load_bundle<T>(dir / "encoder.tgcb"), "text");
    return e;
  }

 private:
  static std::size_t check_batch(const std::vector<std::vector<std::size_t>>& batch) {
    if (batch.empty() || batch[0].empty()) throw InputError("caption batch must be nonempty");
    for (const auto& seq : batch) {
      if (seq.size() != batch[0].size()) throw DimensionError("caption batch must have equal lengths");
    }
    return batch[0].size();
  }

  Vocabulary vocab_;
  TextEncoderConfig cfg_;
  ParamSet<T> params_;
};

}  // namespace tgc

#pragma once

#include <cstddef>

#include "tgc/core/ops.hpp"
#include "tgc/model/config.hpp"

namespace tgc {

/// Scores are clamped to [eps, 1 - eps] before taking logs.
inline constexpr double kScoreEps = 1e-7;

namespace detail {
template <typename T>
Var<T> as_rows(const Var<T>& x) {
  if (x.shape().empty() || x.shape()[0] == 0) throw InputError("empty triplet batch");
  if (x.shape().size() == 1) return reshape(x, {x.shape()[0], 1});
  return reshape(x, {x.shape()[0], x.size() / x.shape()[0]});
}
}  // namespace detail

/// Matching-aware loss per triplet from the scores of (real, matched),
/// (real, mismatched) and (synthetic, matched) inputs. Scores are [B] or
/// [B x K] (K frames or motion steps); returns [B]:
///   -(1 / 3K) sum_k [log pos + log(1 - neg) + log(1 - syn)].
/// `clamped` counts scores that had to be clamped.
template <typename T>
Var<T> matching_loss(const Var<T>& pos, const Var<T>& neg, const Var<T>& syn, std::size_t* clamped = nullptr) {
  pos.value().require_same_shape(neg.value(), "matching_loss");
  pos.value().require_same_shape(syn.value(), "matching_loss");
  const auto p = detail::as_rows(pos);
  const std::size_t k = p.shape()[1];
  const T eps = static_cast<T>(kScoreEps);
  const auto terms = add_n<T>({clamped_log(p, eps, clamped), clamped_log1m(detail::as_rows(neg), eps, clamped),
                               clamped_log1m(detail::as_rows(syn), eps, clamped)});
  return scale(sum_per_row(terms), T(-1) / static_cast<T>(3 * k));
}

/// Per-row mean of log scores: [B] or [B x K] -> [B].
template <typename T>
Var<T> mean_log(const Var<T>& scores, std::size_t* clamped = nullptr) {
  const auto s = detail::as_rows(scores);
  const T k = static_cast<T>(s.shape()[1]);
  return scale(sum_per_row(clamped_log(s, static_cast<T>(kScoreEps), clamped)), T(1) / k);
}

/// Mean squared distance between consecutive frame features, per video.
/// feats: [B*L, ...] frame-major within each video -> [B].
template <typename T>
Var<T> coherence_constraint(const Var<T>& feats, std::size_t B, std::size_t L) {
  if (L < 2) throw PreconditionError("coherence constraint needs at least 2 frames");
  if (B == 0) throw InputError("empty triplet batch");
  if (feats.shape().empty() || feats.shape()[0] != B * L) {
    throw DimensionError("coherence_constraint: expected " + std::to_string(B * L) + " frame features, got " +
                         shape_str(feats.shape()));
  }
  const std::size_t f = feats.size() / (B * L);
  const auto g = reshape(feats, {B, L, f});
  const auto d = sub(slice(g, 1, 1, L), slice(g, 1, 0, L - 1));
  return scale(sum_per_row(square(d)), T(1) / static_cast<T>(L - 1));
}

/// Per-triplet discriminator terms; l_f and l_t may be undefined when the
/// scheme does not use them.
template <typename T>
struct DiscriminatorTerms {
  Var<T> l_v, l_f, l_t;
};

/// Sum over the batch of the scheme's discriminator loss.
template <typename T>
Var<T> discriminator_objective(Scheme scheme, const DiscriminatorTerms<T>& t) {
  if (!t.l_v.defined() || t.l_v.size() == 0) throw InputError("empty triplet batch");
  switch (scheme) {
    case Scheme::kC1: return sum(t.l_v);
    case Scheme::kC2:
    case Scheme::kCC: return scale(sum(add(t.l_v, t.l_f)), T(0.5));
    case Scheme::kCA: return scale(sum(add_n<T>({t.l_v, t.l_f, t.l_t})), T(1) / T(3));
  }
  throw ContractError("unhandled scheme");
}

/// Per-triplet generator terms: log D0(v_syn), frame-mean log D1(v_syn),
/// coherence constraint and step-mean log Phi2 on synthetic motions.
template <typename T>
struct GeneratorTerms {
  Var<T> log_d0, log_d1, coherence, log_phi2;
};

/// Sum over the batch of the scheme's generator loss.
template <typename T>
Var<T> generator_objective(Scheme scheme, const GeneratorTerms<T>& t) {
  if (!t.log_d0.defined() || t.log_d0.size() == 0) throw InputError("empty triplet batch");
  Var<T> bracket;
  switch (scheme) {
    case Scheme::kC1: bracket = t.log_d0; break;
    case Scheme::kC2: bracket = add(t.log_d0, t.log_d1); break;
    case Scheme::kCC: bracket = sub(add(t.log_d0, t.log_d1), t.coherence); break;
    case Scheme::kCA: bracket = add_n<T>({t.log_d0, t.log_d1, t.log_phi2}); break;
  }
  return scale(sum(bracket), T(-1) / T(3));
}

}  // namespace tgc

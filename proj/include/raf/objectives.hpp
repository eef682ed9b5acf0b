#pragma once

// Adversarial objectives and auxiliary losses. All functions build graph
// nodes, so every loss is differentiable with respect to whatever leaves
// feed it. Score tensors are (B x K): one row per sample, one column per
// discriminator head.

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "raf/autodiff.hpp"
#include "raf/dsp.hpp"

namespace raf::objectives {

using ad::Var;

struct LossPair {
  Var generator;
  Var discriminator;
};

struct LossBundle {
  Var generator_loss;
  Var discriminator_loss;
  std::map<std::string, double> diagnostics;
};

/// Function applied to score differences inside the relativistic losses.
enum class GapTransform {
  kSoftplus,  // f(x) = -log(1 + e^-x)
  kIdentity,  // f(x) = x; the "without softplus" ablation
};

/// f(x) = -log(1 + exp(-x)) = -softplus(-x). Negative and increasing.
Var f_transform(Var x);

/// -f(d_fake - d_real). With the softplus transform this equals
/// softplus(d_real - d_fake) and is strictly positive.
Var discriminator_gap(Var d_real, Var d_fake,
                      GapTransform transform = GapTransform::kSoftplus);

/// Batch mean of the squared L2 distance between gap rows and quality rows.
Var raf_disc_loss(Var gap, Var quality);

/// Mean of the gap over every entry.
Var raf_gen_loss(Var gap);

LossPair lsgan_losses(Var d_real, Var d_fake);
LossPair rpgan_losses(Var d_real, Var d_fake,
                      GapTransform transform = GapTransform::kSoftplus);
LossPair hingegan_losses(Var d_real, Var d_fake);

/// Paired-input MetricGAN variant. `d_real_pair` = D(y, y),
/// `d_fake_pair` = D(G(x), y); Q(y, y) is zero by definition.
LossPair metricgan_raf_v1_losses(Var d_real_pair, Var d_fake_pair,
                                 Var quality);

/// Decoupled MetricGAN variant: real scores regress to 0, fake scores to Q.
LossPair metricgan_raf_v2_losses(Var d_real, Var d_fake, Var quality);

struct Penalties {
  Var r1;
  Var r2;
};

/// Zero-centered penalties gamma * E||grad_x D||^2 on the real and fake
/// batches. `real_input` / `fake_input` must be leaves and `d_real` /
/// `d_fake` the discriminator scores computed from them. Multi-head scores
/// are summed before differentiating. Rows are assumed independent, so the
/// gradient of the summed batch score holds each sample's input gradient.
Penalties gradient_penalty(Var d_real, Var real_input, Var d_fake,
                           Var fake_input, double gamma);

/// Single-side penalty gamma * mean_b ||grad_x D||^2.
Var zero_centered_penalty(Var scores, Var input, double gamma);

/// Mean absolute difference of log-mel spectrograms. `y` and `g` are rank-1
/// waveform nodes at cfg.sample_rate.
Var mel_loss(Var y, Var g, const dsp::MelConfig& cfg);

/// sum_l (1/N_l) ||D_l(y) - D_l(g)||_1, averaged over the batch. Each
/// feature tensor is (B x N_l).
Var feature_matching_loss(std::span<const Var> feat_real,
                          std::span<const Var> feat_fake);

inline constexpr double kDefaultLambdaFm = 1.0;
inline constexpr double kDefaultLambdaMel = 26.0;

Var recon_loss(Var fm, Var mel, double lambda_fm = kDefaultLambdaFm,
               double lambda_mel = kDefaultLambdaMel);

/// L(G) = adv_g + recon; L(D) = adv_d (+ r1 + r2 when apply_gp).
LossPair total_losses(Var adv_g, Var adv_d, Var recon, Var r1, Var r2,
                      bool apply_gp);

}  // namespace raf::objectives

#include "raf/objectives.hpp"

#include "raf/errors.hpp"

namespace raf::objectives {
namespace {

void require_same_shape(Var a, Var b, const char* what) {
  RAF_REQUIRE(a.shape() == b.shape(), std::string(what) + ": shape mismatch " +
                                          shape_str(a.shape()) + " vs " +
                                          shape_str(b.shape()));
}

Var apply_transform(Var x, GapTransform t) {
  return t == GapTransform::kSoftplus ? f_transform(x) : x;
}

double batch_size(Var scores) {
  return scores.shape().empty() ? 1.0
                                : static_cast<double>(scores.shape()[0]);
}

}  // namespace

Var f_transform(Var x) { return ad::neg(ad::softplus(ad::neg(x))); }

Var discriminator_gap(Var d_real, Var d_fake, GapTransform transform) {
  require_same_shape(d_real, d_fake, "discriminator_gap");
  if (transform == GapTransform::kSoftplus) {
    // -f(d_fake - d_real) = softplus(d_real - d_fake)
    return ad::softplus(ad::sub(d_real, d_fake));
  }
  return ad::sub(d_real, d_fake);
}

Var raf_disc_loss(Var gap, Var quality) {
  require_same_shape(gap, quality, "raf_disc_loss");
  return ad::scale(ad::sum(ad::square(ad::sub(gap, quality))),
                   1.0 / batch_size(gap));
}

Var raf_gen_loss(Var gap) { return ad::mean(gap); }

LossPair lsgan_losses(Var d_real, Var d_fake) {
  Var gen = ad::mean(ad::square(ad::add_scalar(d_fake, -1.0)));
  Var disc = ad::add(ad::mean(ad::square(ad::add_scalar(d_real, -1.0))),
                     ad::mean(ad::square(d_fake)));
  return {gen, disc};
}

LossPair rpgan_losses(Var d_real, Var d_fake, GapTransform transform) {
  require_same_shape(d_real, d_fake, "rpgan_losses");
  Var gen = ad::mean(apply_transform(ad::sub(d_real, d_fake), transform));
  Var disc = ad::mean(apply_transform(ad::sub(d_fake, d_real), transform));
  return {gen, disc};
}

LossPair hingegan_losses(Var d_real, Var d_fake) {
  Var gen = ad::neg(ad::mean(d_fake));
  Var disc = ad::add(ad::mean(ad::relu(ad::add_scalar(ad::neg(d_real), 1.0))),
                     ad::mean(ad::relu(ad::add_scalar(d_fake, 1.0))));
  return {gen, disc};
}

LossPair metricgan_raf_v1_losses(Var d_real_pair, Var d_fake_pair,
                                 Var quality) {
  require_same_shape(d_real_pair, d_fake_pair, "metricgan_raf_v1_losses");
  require_same_shape(d_fake_pair, quality, "metricgan_raf_v1_losses");
  // Q(y, y) = 0, so the real term regresses D(y, y) to zero.
  Var disc = ad::mean(ad::add(ad::square(d_real_pair),
                              ad::square(ad::sub(d_fake_pair, quality))));
  Var gen = ad::mean(ad::square(d_fake_pair));
  return {gen, disc};
}

LossPair metricgan_raf_v2_losses(Var d_real, Var d_fake, Var quality) {
  require_same_shape(d_real, d_fake, "metricgan_raf_v2_losses");
  require_same_shape(d_fake, quality, "metricgan_raf_v2_losses");
  Var disc = ad::mean(
      ad::add(ad::square(d_real), ad::square(ad::sub(d_fake, quality))));
  Var gen = ad::mean(ad::square(d_fake));
  return {gen, disc};
}

Var zero_centered_penalty(Var scores, Var input, double gamma) {
  Var sq = ad::input_grad_sq_norm(ad::sum(scores), input);
  return ad::scale(sq, gamma / batch_size(input));
}

Penalties gradient_penalty(Var d_real, Var real_input, Var d_fake,
                           Var fake_input, double gamma) {
  return {zero_centered_penalty(d_real, real_input, gamma),
          zero_centered_penalty(d_fake, fake_input, gamma)};
}

Var mel_loss(Var y, Var g, const dsp::MelConfig& cfg) {
  require_same_shape(y, g, "mel_loss");
  Var my = dsp::log_mel_spectrogram(y, cfg);
  Var mg = dsp::log_mel_spectrogram(g, cfg);
  return ad::mean(ad::abs(ad::sub(my, mg)));
}

Var feature_matching_loss(std::span<const Var> feat_real,
                          std::span<const Var> feat_fake) {
  RAF_REQUIRE(feat_real.size() == feat_fake.size() && !feat_real.empty(),
              "feature_matching_loss: layer count mismatch");
  Var total;
  for (std::size_t l = 0; l < feat_real.size(); ++l) {
    require_same_shape(feat_real[l], feat_fake[l], "feature_matching_loss");
    const Shape& s = feat_real[l].shape();
    const double batch = s.empty() ? 1.0 : static_cast<double>(s[0]);
    const double n_l = static_cast<double>(feat_real[l].value().size()) / batch;
    Var term = ad::scale(ad::sum(ad::abs(ad::sub(feat_real[l], feat_fake[l]))),
                         1.0 / (n_l * batch));
    total = total.valid() ? ad::add(total, term) : term;
  }
  return total;
}

Var recon_loss(Var fm, Var mel, double lambda_fm, double lambda_mel) {
  return ad::add(ad::scale(fm, lambda_fm), ad::scale(mel, lambda_mel));
}

LossPair total_losses(Var adv_g, Var adv_d, Var recon, Var r1, Var r2,
                      bool apply_gp) {
  Var gen = ad::add(adv_g, recon);
  Var disc = apply_gp ? ad::add(adv_d, ad::add(r1, r2)) : adv_d;
  return {gen, disc};
}

}  // namespace raf::objectives

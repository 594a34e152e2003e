#pragma once

// Every training objective as a differentiable tape scalar: paired caption
// cross-entropy, confidence-weighted pseudo-label cross-entropy, the
// adversarial pair-matching losses for both players, the triplet ranking
// loss, and the cycle-consistency baseline losses.

#include <string>
#include <vector>

#include "sscap/model.hpp"
#include "sscap/tape.hpp"
#include "sscap/tokens.hpp"

namespace sscap {

struct LossWeights {
    double lambda_x = 0.1;
    double lambda_y = 0.1;
    double lambda_reg = 0.1;
    double w_gan = 0.1;
    double w_triplet = 0.1;

    void validate() const;
};

struct LossReport {
    double cap_paired = 0;
    double cap_pseudo_x = 0;
    double cap_pseudo_y = 0;
    double gan_d = 0;
    double gan_g = 0;
    double reg = 0;
    double triplet = 0;
    double cycle = 0;
    double total = 0;

    // total = cap terms + w_gan*(gan_g + reg) + w_triplet*triplet + cycle;
    // discriminator-side losses are tracked but optimized in their own step.
    double recompute_total(const LossWeights& w) const;
    bool all_finite() const;

    static std::string csv_header();
    std::string csv_row(long iteration) const;
};

// -NLL of one caption under precomputed per-step log-probabilities; PAD
// targets contribute nothing.
ad::Value caption_ce(ad::Tape& t, ad::Value logprobs, const TokenSeq& target);

// Batched: mean over the batch of per-sample summed gold NLL.
ad::Value caption_ce_batch(ParamBinding& pb, const ModelConfig& cfg, ad::Value zx_batch,
                           const std::vector<TokenSeq>& targets);

// lambda * sum_i alpha_i * ce_i over one pseudo-label direction. ce_col is a
// (B x 1) column of per-sample cross-entropies. use_confidence=false treats
// every alpha as 1.
ad::Value weighted_ce_sum(ad::Tape& t, ad::Value ce_col, const std::vector<double>& alpha,
                          double lambda, bool use_confidence);

struct LatentPairBatch {
    ad::Value zx;  // (B x latent_dim), image slot
    ad::Value zy;  // (B x latent_dim), caption slot
};

// Negated discriminator objective: minimizing it maximizes
// E[log D(real)] + (E[log(1-D(fake-from-image))] + E[log(1-D(fake-from-caption))])/2.
// All latents are detached here; only D's parameters receive gradient.
ad::Value gan_discriminator_loss(ParamBinding& pb, const ModelConfig& cfg,
                                 const LatentPairBatch& real, const LatentPairBatch& fake_from_image,
                                 const LatentPairBatch& fake_from_caption);

struct GanGeneratorOut {
    ad::Value total;  // adv + reg
    ad::Value adv;
    ad::Value reg;
};

// Generator-side objective: the fake-pair log terms (D's parameters must be
// bound as constants) plus the paired-feature regressor
// lambda_reg * (mean ||Tvc(zx)-zy||_F^2 + mean ||zx-Tcv(zy)||_F^2).
// The real-pair log D term is deliberately absent.
GanGeneratorOut gan_generator_loss(ParamBinding& pb, const ModelConfig& cfg,
                                   const LatentPairBatch& paired, ad::Value zx_unpaired,
                                   ad::Value zy_unpaired, const LossWeights& w);

// Triplet core over per-sample length-normalized log-likelihood columns:
// mean of -[ll_pos - ll_neg_img] - [ll_pos - ll_neg_cap].
ad::Value triplet_from_logliks(ad::Tape& t, ad::Value ll_pos, ad::Value ll_neg_img,
                               ad::Value ll_neg_cap);

// Full triplet loss: positives are the paired batch, negatives are unpaired
// samples aligned row-for-row with the positives.
ad::Value triplet_loss(ParamBinding& pb, const ModelConfig& cfg, const Array2& paired_images,
                       const std::vector<TokenSeq>& paired_captions, const Array2& neg_images,
                       const std::vector<TokenSeq>& neg_captions);

// Cycle-consistency baseline over feature spaces. D_x judges image-space
// features (real F(x) vs translated Tcv(G(y))), D_y caption-space ones.
// The two players build on separate tapes, mirroring the paired-GAN split.

// Negated domain-discriminator objective; every input is detached here.
ad::Value cycle_discriminator_loss(ParamBinding& pb, const ModelConfig& cfg, ad::Value real_x,
                                   ad::Value fake_x, ad::Value real_y, ad::Value fake_y);

struct CycleGenOut {
    ad::Value total;  // L_cycle + adversarial generator terms
    ad::Value cycle;  // L_cycle alone (unsquared L2 reconstructions), for reporting
};

// Generator side; computes translations internally so gradients reach the
// transformers and encoders. Domain discriminators must be bound as constants.
CycleGenOut cycle_generator_loss(ParamBinding& pb, const ModelConfig& cfg, ad::Value zx_unpaired,
                                 ad::Value zy_unpaired);

struct CycleEval {
    double gen = 0;
    double disc = 0;
    double cycle = 0;
};

// Convenience evaluation of both sides from plain latent batches.
CycleEval cycle_losses(const ParamStore& ps, const ModelConfig& cfg, const Array2& zx_unpaired,
                       const Array2& zy_unpaired);

// Scalar combination used for reporting; mirrors LossReport::recompute_total.
double total_loss(const LossReport& components, const LossWeights& w);

}  // namespace sscap

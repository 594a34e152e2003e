#include "sscap/losses.hpp"

#include <cstdio>
#include <stdexcept>

namespace sscap {

namespace {

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Per-row 1/steps column used for length normalization.
ad::Value inv_steps_column(ad::Tape& t, const std::vector<int>& steps) {
    Array2 inv(static_cast<int>(steps.size()), 1);
    for (size_t i = 0; i < steps.size(); ++i) {
        if (steps[i] < 1)
            throw std::invalid_argument("loss: sequence with no prediction steps");
        inv.at(static_cast<int>(i), 0) = 1.0 / steps[i];
    }
    return t.constant(inv, "inv_steps");
}

}  // namespace

void LossWeights::validate() const {
    if (lambda_x < 0 || lambda_y < 0 || lambda_reg < 0 || w_gan < 0 || w_triplet < 0)
        throw std::invalid_argument("loss weights must be non-negative");
}

double LossReport::recompute_total(const LossWeights& w) const {
    return cap_paired + cap_pseudo_x + cap_pseudo_y + w.w_gan * (gan_g + reg) +
           w.w_triplet * triplet + cycle;
}

bool LossReport::all_finite() const {
    for (double v : {cap_paired, cap_pseudo_x, cap_pseudo_y, gan_d, gan_g, reg, triplet, cycle,
                     total})
        if (!std::isfinite(v)) return false;
    return true;
}

std::string LossReport::csv_header() {
    return "iteration,cap_paired,cap_pseudo_x,cap_pseudo_y,gan_d,gan_g,reg,triplet,cycle,total";
}

std::string LossReport::csv_row(long iteration) const {
    std::string row = std::to_string(iteration);
    for (double v : {cap_paired, cap_pseudo_x, cap_pseudo_y, gan_d, gan_g, reg, triplet, cycle,
                     total})
        row += "," + fmt17(v);
    return row;
}

double total_loss(const LossReport& components, const LossWeights& w) {
    return components.recompute_total(w);
}

ad::Value caption_ce(ad::Tape& t, ad::Value logprobs, const TokenSeq& target) {
    const Array2& lp = t.val(logprobs);
    if (target.size() < 2)
        throw std::invalid_argument("caption_ce: target needs at least two tokens");
    if (lp.rows != static_cast<int>(target.size()) - 1)
        throw std::invalid_argument("caption_ce: " + std::to_string(lp.rows) +
                                    " log-prob rows vs target of length " +
                                    std::to_string(target.size()));
    std::vector<int> gold(target.begin() + 1, target.end());
    bool any_pad = false;
    std::vector<int> picks(gold.size());
    for (size_t i = 0; i < gold.size(); ++i) {
        any_pad = any_pad || gold[i] == PAD;
        picks[i] = gold[i] == PAD ? 0 : gold[i];  // placeholder column, masked below
    }
    ad::Value picked = t.pick_entries(logprobs, picks);
    if (any_pad) {
        Array2 mask(lp.rows, 1);
        for (size_t i = 0; i < gold.size(); ++i)
            mask.at(static_cast<int>(i), 0) = gold[i] == PAD ? 0.0 : 1.0;
        picked = t.mul(picked, t.constant(mask, "pad_mask"));
    }
    return t.scale(t.sum(picked), -1.0);
}

ad::Value caption_ce_batch(ParamBinding& pb, const ModelConfig& cfg, ad::Value zx_batch,
                           const std::vector<TokenSeq>& targets) {
    ad::Value ll = decode_gold_logprob(pb, cfg, zx_batch, targets);
    return pb.tape().scale(pb.tape().mean(ll), -1.0);
}

ad::Value weighted_ce_sum(ad::Tape& t, ad::Value ce_col, const std::vector<double>& alpha,
                          double lambda, bool use_confidence) {
    const Array2& ce = t.val(ce_col);
    if (ce.cols != 1 || ce.rows != static_cast<int>(alpha.size()))
        throw std::invalid_argument("weighted_ce_sum: need one alpha per cross-entropy row, got " +
                                    ce.shape_str() + " vs " + std::to_string(alpha.size()) +
                                    " alphas");
    Array2 a(ce.rows, 1);
    for (size_t i = 0; i < alpha.size(); ++i) {
        if (alpha[i] < 0.0 || alpha[i] > 1.0)
            throw std::invalid_argument("weighted_ce_sum: alpha " + std::to_string(alpha[i]) +
                                        " outside [0,1]");
        a.at(static_cast<int>(i), 0) = use_confidence ? alpha[i] : 1.0;
    }
    return t.scale(t.sum(t.mul(ce_col, t.constant(a, "alpha"))), lambda);
}

ad::Value gan_discriminator_loss(ParamBinding& pb, const ModelConfig& cfg,
                                 const LatentPairBatch& real, const LatentPairBatch& fake_from_image,
                                 const LatentPairBatch& fake_from_caption) {
    ad::Tape& t = pb.tape();
    if (t.val(real.zx).rows < 1)
        throw std::invalid_argument("gan_discriminator_loss: empty real batch");
    ad::Value l_real = discriminate_logit(pb, cfg, t.stop_grad(real.zx), t.stop_grad(real.zy));
    ad::Value l_fi = discriminate_logit(pb, cfg, t.stop_grad(fake_from_image.zx),
                                        t.stop_grad(fake_from_image.zy));
    ad::Value l_fc = discriminate_logit(pb, cfg, t.stop_grad(fake_from_caption.zx),
                                        t.stop_grad(fake_from_caption.zy));
    ad::Value real_term = t.mean(t.log_sigmoid(l_real));
    ad::Value fake_terms = t.scale(t.add(t.mean(t.log_sigmoid(t.scale(l_fi, -1.0))),
                                         t.mean(t.log_sigmoid(t.scale(l_fc, -1.0)))),
                                   0.5);
    return t.scale(t.add(real_term, fake_terms), -1.0);
}

GanGeneratorOut gan_generator_loss(ParamBinding& pb, const ModelConfig& cfg,
                                   const LatentPairBatch& paired, ad::Value zx_unpaired,
                                   ad::Value zy_unpaired, const LossWeights& w) {
    if (pb.trainable("D"))
        throw std::invalid_argument(
            "gan_generator_loss: discriminator parameters must be bound as constants");
    ad::Tape& t = pb.tape();
    if (t.val(paired.zx).rows < 1)
        throw std::invalid_argument("gan_generator_loss: the latent regressor needs a paired "
                                    "batch");
    ad::Value fake_cap = transform_feature(pb, cfg, true, zx_unpaired);
    ad::Value fake_img = transform_feature(pb, cfg, false, zy_unpaired);
    ad::Value l_fi = discriminate_logit(pb, cfg, zx_unpaired, fake_cap);
    ad::Value l_fc = discriminate_logit(pb, cfg, fake_img, zy_unpaired);
    ad::Value adv = t.scale(t.add(t.mean(t.log_sigmoid(t.scale(l_fi, -1.0))),
                                  t.mean(t.log_sigmoid(t.scale(l_fc, -1.0)))),
                            0.5);

    ad::Value diff_vc = t.sub(transform_feature(pb, cfg, true, paired.zx), paired.zy);
    ad::Value diff_cv = t.sub(paired.zx, transform_feature(pb, cfg, false, paired.zy));
    ad::Value reg = t.scale(
        t.add(t.mean(t.rowwise_sumsq(diff_vc)), t.mean(t.rowwise_sumsq(diff_cv))), w.lambda_reg);
    return GanGeneratorOut{t.add(adv, reg), adv, reg};
}

ad::Value triplet_from_logliks(ad::Tape& t, ad::Value ll_pos, ad::Value ll_neg_img,
                               ad::Value ll_neg_cap) {
    // -[pos - neg_img] - [pos - neg_cap], averaged over the batch.
    return t.mean(t.add(t.add(t.scale(ll_pos, -2.0), ll_neg_img), ll_neg_cap));
}

ad::Value triplet_loss(ParamBinding& pb, const ModelConfig& cfg, const Array2& paired_images,
                       const std::vector<TokenSeq>& paired_captions, const Array2& neg_images,
                       const std::vector<TokenSeq>& neg_captions) {
    if (paired_images.rows != static_cast<int>(paired_captions.size()) ||
        neg_images.rows != paired_images.rows ||
        neg_captions.size() != paired_captions.size())
        throw std::invalid_argument("triplet_loss: positives and negatives must align per row");
    ad::Tape& t = pb.tape();
    ad::Value zx_p = encode_images(pb, cfg, paired_images);
    ad::Value zx_n = encode_images(pb, cfg, neg_images);
    std::vector<int> steps_pos, steps_negcap;
    ad::Value ll_pos_raw = decode_gold_logprob(pb, cfg, zx_p, paired_captions, &steps_pos);
    ad::Value ll_ni_raw = decode_gold_logprob(pb, cfg, zx_n, paired_captions);
    ad::Value ll_nc_raw = decode_gold_logprob(pb, cfg, zx_p, neg_captions, &steps_negcap);
    ad::Value inv_pos = inv_steps_column(t, steps_pos);
    ad::Value ll_pos = t.mul(ll_pos_raw, inv_pos);
    ad::Value ll_ni = t.mul(ll_ni_raw, inv_pos);
    ad::Value ll_nc = t.mul(ll_nc_raw, inv_steps_column(t, steps_negcap));
    return triplet_from_logliks(t, ll_pos, ll_ni, ll_nc);
}

ad::Value cycle_discriminator_loss(ParamBinding& pb, const ModelConfig& cfg, ad::Value real_x,
                                   ad::Value fake_x, ad::Value real_y, ad::Value fake_y) {
    ad::Tape& t = pb.tape();
    if (t.val(real_x).rows < 1 || t.val(real_y).rows < 1)
        throw std::invalid_argument("cycle_discriminator_loss: empty batch");
    ad::Value lx_real = discriminate_domain_logit(pb, cfg, 'x', t.stop_grad(real_x));
    ad::Value lx_fake = discriminate_domain_logit(pb, cfg, 'x', t.stop_grad(fake_x));
    ad::Value ly_real = discriminate_domain_logit(pb, cfg, 'y', t.stop_grad(real_y));
    ad::Value ly_fake = discriminate_domain_logit(pb, cfg, 'y', t.stop_grad(fake_y));
    ad::Value gain = t.add(t.add(t.mean(t.log_sigmoid(lx_real)),
                                 t.mean(t.log_sigmoid(t.scale(lx_fake, -1.0)))),
                           t.add(t.mean(t.log_sigmoid(ly_real)),
                                 t.mean(t.log_sigmoid(t.scale(ly_fake, -1.0)))));
    return t.scale(gain, -1.0);
}

CycleGenOut cycle_generator_loss(ParamBinding& pb, const ModelConfig& cfg, ad::Value zx_unpaired,
                                 ad::Value zy_unpaired) {
    if (pb.trainable("D"))
        throw std::invalid_argument(
            "cycle_generator_loss: domain discriminators must be bound as constants");
    ad::Tape& t = pb.tape();
    if (t.val(zx_unpaired).rows < 1 || t.val(zy_unpaired).rows < 1)
        throw std::invalid_argument("cycle_generator_loss: empty batch");
    ad::Value to_cap = transform_feature(pb, cfg, true, zx_unpaired);   // image -> caption space
    ad::Value to_img = transform_feature(pb, cfg, false, zy_unpaired);  // caption -> image space

    ad::Value adv = t.add(
        t.mean(t.log_sigmoid(t.scale(discriminate_domain_logit(pb, cfg, 'x', to_img), -1.0))),
        t.mean(t.log_sigmoid(t.scale(discriminate_domain_logit(pb, cfg, 'y', to_cap), -1.0))));

    ad::Value back_to_img = transform_feature(pb, cfg, false, to_cap);
    ad::Value back_to_cap = transform_feature(pb, cfg, true, to_img);
    ad::Value cyc =
        t.add(t.mean(t.sqrt(t.rowwise_sumsq(t.sub(back_to_img, zx_unpaired)))),
              t.mean(t.sqrt(t.rowwise_sumsq(t.sub(back_to_cap, zy_unpaired)))));
    return CycleGenOut{t.add(cyc, adv), cyc};
}

CycleEval cycle_losses(const ParamStore& ps, const ModelConfig& cfg, const Array2& zx_unpaired,
                       const Array2& zy_unpaired) {
    CycleEval out;
    {
        ad::Tape t;
        ParamBinding pb(t, ps, {"F", "G", "H", "Tvc", "Tcv"});
        ad::Value zx = t.constant(zx_unpaired, "zx_u");
        ad::Value zy = t.constant(zy_unpaired, "zy_u");
        const CycleGenOut gen = cycle_generator_loss(pb, cfg, zx, zy);
        out.gen = t.val(gen.total).scalar();
        out.cycle = t.val(gen.cycle).scalar();
    }
    {
        ad::Tape t;
        ParamBinding pb(t, ps, {"D"});
        ad::Value zx = t.constant(zx_unpaired, "zx_u");
        ad::Value zy = t.constant(zy_unpaired, "zy_u");
        ad::Value fake_y = transform_feature(pb, cfg, true, zx);
        ad::Value fake_x = transform_feature(pb, cfg, false, zy);
        out.disc =
            t.val(cycle_discriminator_loss(pb, cfg, zx, fake_x, zy, fake_y)).scalar();
    }
    return out;
}

}  // namespace sscap

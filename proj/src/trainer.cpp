#include "sscap/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "sscap/checkpoint.hpp"

namespace sscap {

namespace {

constexpr std::uint64_t kStreamData = 0x64617461;  // "data"
constexpr std::uint64_t kStreamPool = 0x706f6f6c;  // "pool"
constexpr std::uint64_t kStreamNeg = 0x6e6567;     // "neg"

std::string fmt17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// id -> row index of a split list
std::unordered_map<int, int> row_index(const std::vector<Sample>& samples) {
    std::unordered_map<int, int> out;
    out.reserve(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) out.emplace(samples[i].id, static_cast<int>(i));
    return out;
}

// Negative batch aligned with n_pos positive rows; cycles when the source is
// smaller than the positive batch.
std::vector<int> negative_rows(Rng& rng, int source_size, int n_pos) {
    std::vector<int> rows = draw_batch(rng, source_size, n_pos);
    const size_t base = rows.size();
    while (static_cast<int>(rows.size()) < n_pos) rows.push_back(rows[rows.size() % base]);
    return rows;
}

}  // namespace

TrainAbort::TrainAbort(long iteration, std::string component, const std::string& detail)
    : std::runtime_error("iteration " + std::to_string(iteration) + ", " + component + ": " +
                         detail),
      iteration_(iteration),
      component_(std::move(component)) {}

std::vector<int> draw_batch(Rng& rng, int n, int k) {
    if (n < 1) throw std::invalid_argument("draw_batch: empty index range");
    if (k < 1) throw std::invalid_argument("draw_batch: batch size must be positive");
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    if (k >= n) return order;
    rng.shuffle(order);
    order.resize(static_cast<size_t>(k));
    return order;
}

TrainState init_train_state(const RunConfig& cfg, const SplitBundle& bundle) {
    cfg.validate();
    const Variant variant = cfg.parsed_variant();

    TrainState st;
    st.model = cfg.model_config();
    st.model.image_dim = bundle.image_dim;
    st.model.vocab_size = bundle.vocab_size;
    st.model.validate();

    st.params = init_params(st.model, cfg.seed, variant == Variant::CycleGan);

    for (AdamState* opt : {&st.opt_gen, &st.opt_disc}) {
        opt->lr = cfg.lr;
        opt->b1 = cfg.adam_b1;
        opt->b2 = cfg.adam_b2;
        opt->eps = cfg.adam_eps;
    }

    const Rng root = make_rng(cfg.seed);
    st.rng_data = root.derive(kStreamData);
    st.rng_pool = root.derive(kStreamPool);
    st.rng_neg = root.derive(kStreamNeg);
    return st;
}

LossReport train_step(TrainState& st, const RunConfig& cfg, const SplitBundle& bundle,
                      const std::vector<int>& paired_rows, const std::vector<int>& ux_rows,
                      const std::vector<int>& uy_rows,
                      const std::function<void(int, const TrainState&)>& observer,
                      std::vector<PseudoPair>* assignments_out) {
    const Variant variant = cfg.parsed_variant();
    const LossWeights weights = cfg.loss_weights();
    const ModelConfig& model = st.model;
    const bool is_gan = variant == Variant::Ver1 || variant == Variant::Ver2 ||
                        variant == Variant::Final;

    if (paired_rows.empty()) throw std::invalid_argument("train_step: empty paired batch");
    if (variant != Variant::PairedOnly && (ux_rows.empty() || uy_rows.empty()))
        throw std::invalid_argument("train_step: this variant needs unpaired batches");

    const Array2 paired_imgs = image_matrix(bundle.paired, paired_rows);
    const std::vector<TokenSeq> paired_caps = caption_list(bundle.paired, paired_rows);
    Array2 ux_imgs;
    std::vector<TokenSeq> uy_caps;
    if (variant != Variant::PairedOnly) {
        ux_imgs = image_matrix(bundle.unpaired_images, ux_rows);
        uy_caps = caption_list(bundle.unpaired_captions, uy_rows);
    }

    LossReport rep;

    // 1: discriminator update
    if (is_gan) {
        try {
            const Array2 zx_p = encode_images_fwd(st.params, model, paired_imgs);
            const Array2 zy_p = encode_captions_fwd(st.params, model, paired_caps);
            const Array2 zx_u = encode_images_fwd(st.params, model, ux_imgs);
            const Array2 zy_u = encode_captions_fwd(st.params, model, uy_caps);

            ad::Tape t;
            ParamBinding pb(t, st.params, {"D"});
            LatentPairBatch real{t.constant(zx_p, "zx_p"), t.constant(zy_p, "zy_p")};
            LatentPairBatch fake_img{
                t.constant(zx_u, "zx_u"),
                t.constant(transform_feature_fwd(st.params, model, true, zx_u), "tvc_zx_u")};
            LatentPairBatch fake_cap{
                t.constant(transform_feature_fwd(st.params, model, false, zy_u), "tcv_zy_u"),
                t.constant(zy_u, "zy_u")};
            const ad::Value loss = gan_discriminator_loss(pb, model, real, fake_img, fake_cap);
            t.backward(loss);
            adam_update(st.params.subset({"D"}), pb.harvest(), st.opt_disc);
            rep.gan_d = t.val(loss).scalar();
        } catch (const TrainAbort&) {
            throw;
        } catch (const std::exception& e) {
            throw TrainAbort(st.iteration, "discriminator update", e.what());
        }
        if (observer) observer(1, st);
    } else if (variant == Variant::CycleGan) {
        try {
            const Array2 zx_u = encode_images_fwd(st.params, model, ux_imgs);
            const Array2 zy_u = encode_captions_fwd(st.params, model, uy_caps);
            const Array2 fake_x = transform_feature_fwd(st.params, model, false, zy_u);
            const Array2 fake_y = transform_feature_fwd(st.params, model, true, zx_u);

            ad::Tape t;
            ParamBinding pb(t, st.params, {"D"});
            const ad::Value loss = cycle_discriminator_loss(
                pb, model, t.constant(zx_u, "real_x"), t.constant(fake_x, "fake_x"),
                t.constant(zy_u, "real_y"), t.constant(fake_y, "fake_y"));
            t.backward(loss);
            adam_update(st.params.subset({"D"}), pb.harvest(), st.opt_disc);
            rep.gan_d = t.val(loss).scalar();
        } catch (const TrainAbort&) {
            throw;
        } catch (const std::exception& e) {
            throw TrainAbort(st.iteration, "discriminator update", e.what());
        }
        if (observer) observer(1, st);
    }

    // 2: generator update (GAN or cycle objective)
    if (is_gan) {
        try {
            ad::Tape t;
            ParamBinding pb(t, st.params, {"F", "G", "Tvc", "Tcv"});
            LatentPairBatch paired{encode_images(pb, model, paired_imgs),
                                   encode_captions(pb, model, paired_caps)};
            const ad::Value zx_u = encode_images(pb, model, ux_imgs);
            const ad::Value zy_u = encode_captions(pb, model, uy_caps);
            const GanGeneratorOut out = gan_generator_loss(pb, model, paired, zx_u, zy_u, weights);
            t.backward(t.scale(out.total, weights.w_gan));
            adam_update(st.params.subset({"F", "G", "Tvc", "Tcv"}), pb.harvest(), st.opt_gen);
            rep.gan_g = t.val(out.adv).scalar();
            rep.reg = t.val(out.reg).scalar();
        } catch (const TrainAbort&) {
            throw;
        } catch (const std::exception& e) {
            throw TrainAbort(st.iteration, "generator update", e.what());
        }
        if (observer) observer(2, st);
    } else if (variant == Variant::CycleGan) {
        try {
            ad::Tape t;
            ParamBinding pb(t, st.params, {"F", "G", "Tvc", "Tcv"});
            const ad::Value zx_u = encode_images(pb, model, ux_imgs);
            const ad::Value zy_u = encode_captions(pb, model, uy_caps);
            const CycleGenOut out = cycle_generator_loss(pb, model, zx_u, zy_u);
            t.backward(out.total);
            adam_update(st.params.subset({"F", "G", "Tvc", "Tcv"}), pb.harvest(), st.opt_gen);
            rep.cycle = t.val(out.total).scalar();
        } catch (const TrainAbort&) {
            throw;
        } catch (const std::exception& e) {
            throw TrainAbort(st.iteration, "generator update", e.what());
        }
        if (observer) observer(2, st);
    }

    // 3: pseudo-label assignment with the freshly updated discriminator
    std::vector<PseudoPair> pairs_x, pairs_y;
    const bool assigns = (variant == Variant::Ver2 || variant == Variant::Final) &&
                         st.iteration >= cfg.warmup_iters;
    if (assigns) {
        try {
            CandidatePool pool_y = sample_pool(bundle.unpaired_captions, 'y', cfg.pool_fraction,
                                               st.params, model, st.rng_pool);
            CandidatePool pool_x = sample_pool(bundle.unpaired_images, 'x', cfg.pool_fraction,
                                               st.params, model, st.rng_pool);
            const Array2 zx_u = encode_images_fwd(st.params, model, ux_imgs);
            const Array2 zy_u = encode_captions_fwd(st.params, model, uy_caps);
            std::vector<int> ux_ids, uy_ids;
            for (int r : ux_rows) ux_ids.push_back(bundle.unpaired_images[r].id);
            for (int r : uy_rows) uy_ids.push_back(bundle.unpaired_captions[r].id);
            pairs_x = assign_pseudo_batch(zx_u, ux_ids, 'x', pool_y, st.params, model);
            pairs_y = assign_pseudo_batch(zy_u, uy_ids, 'y', pool_x, st.params, model);
        } catch (const std::exception& e) {
            throw TrainAbort(st.iteration, "pseudo assignment", e.what());
        }
        st.assignment_window.insert(st.assignment_window.end(), pairs_x.begin(), pairs_x.end());
        st.assignment_window.insert(st.assignment_window.end(), pairs_y.begin(), pairs_y.end());
        if (assignments_out) {
            assignments_out->insert(assignments_out->end(), pairs_x.begin(), pairs_x.end());
            assignments_out->insert(assignments_out->end(), pairs_y.begin(), pairs_y.end());
        }
        if (observer) observer(3, st);
    }

    // 4: captioner update
    try {
        ad::Tape t;
        ParamBinding pb(t, st.params, {"F", "H"});
        const ad::Value cap =
            caption_ce_batch(pb, model, encode_images(pb, model, paired_imgs), paired_caps);
        ad::Value total = cap;

        if (assigns) {
            const auto cap_rows = row_index(bundle.unpaired_captions);
            const auto img_rows = row_index(bundle.unpaired_images);
            const bool use_conf = variant == Variant::Final;

            std::vector<TokenSeq> pseudo_caps;
            std::vector<double> alpha_x;
            for (const PseudoPair& p : pairs_x) {
                pseudo_caps.push_back(
                    bundle.unpaired_captions[cap_rows.at(p.retrieved_id)].caption);
                alpha_x.push_back(p.alpha);
            }
            const ad::Value ll_x = decode_gold_logprob(
                pb, model, encode_images(pb, model, ux_imgs), pseudo_caps);
            const ad::Value term_x = weighted_ce_sum(t, t.scale(ll_x, -1.0), alpha_x,
                                                     weights.lambda_x, use_conf);

            std::vector<int> retrieved_img_rows;
            std::vector<TokenSeq> anchor_caps;
            std::vector<double> alpha_y;
            for (const PseudoPair& p : pairs_y) {
                retrieved_img_rows.push_back(img_rows.at(p.retrieved_id));
                alpha_y.push_back(p.alpha);
            }
            for (int r : uy_rows) anchor_caps.push_back(bundle.unpaired_captions[r].caption);
            const Array2 pseudo_imgs = image_matrix(bundle.unpaired_images, retrieved_img_rows);
            const ad::Value ll_y = decode_gold_logprob(
                pb, model, encode_images(pb, model, pseudo_imgs), anchor_caps);
            const ad::Value term_y = weighted_ce_sum(t, t.scale(ll_y, -1.0), alpha_y,
                                                     weights.lambda_y, use_conf);

            total = t.add(total, t.add(term_x, term_y));
            rep.cap_pseudo_x = t.val(term_x).scalar();
            rep.cap_pseudo_y = t.val(term_y).scalar();
        }

        if (is_gan) {
            const int n_pos = static_cast<int>(paired_rows.size());
            const std::vector<int> ni =
                negative_rows(st.rng_neg, static_cast<int>(bundle.unpaired_images.size()), n_pos);
            const std::vector<int> nc = negative_rows(
                st.rng_neg, static_cast<int>(bundle.unpaired_captions.size()), n_pos);
            const ad::Value trip =
                triplet_loss(pb, model, paired_imgs, paired_caps,
                             image_matrix(bundle.unpaired_images, ni),
                             caption_list(bundle.unpaired_captions, nc));
            total = t.add(total, t.scale(trip, weights.w_triplet));
            rep.triplet = t.val(trip).scalar();
        }

        t.backward(total);
        adam_update(st.params.subset({"F", "H"}), pb.harvest(), st.opt_gen);
        rep.cap_paired = t.val(cap).scalar();
    } catch (const TrainAbort&) {
        throw;
    } catch (const std::exception& e) {
        throw TrainAbort(st.iteration, "captioner update", e.what());
    }
    if (observer) observer(4, st);

    rep.total = rep.recompute_total(weights);
    if (!rep.all_finite())
        throw TrainAbort(st.iteration, "loss report", "non-finite loss component");
    return rep;
}

TrainResult train(const RunConfig& cfg, const SplitBundle& bundle, const std::string& run_dir) {
    cfg.validate();
    const Variant variant = cfg.parsed_variant();
    if (bundle.paired.empty()) throw std::invalid_argument("train: no paired samples");
    if (bundle.test.empty()) throw std::invalid_argument("train: no test samples");
    if (variant != Variant::PairedOnly &&
        (bundle.unpaired_images.empty() || bundle.unpaired_captions.empty()))
        throw std::invalid_argument("train: this variant needs unpaired samples");

    TrainState st = init_train_state(cfg, bundle);

    std::unordered_map<int, int> concept_of;
    if (bundle.has_concepts) {
        for (const Sample& s : bundle.unpaired_images) concept_of.emplace(s.id, s.concept_id);
        for (const Sample& s : bundle.unpaired_captions) concept_of.emplace(s.id, s.concept_id);
    }

    std::string history = LossReport::csv_header() +
                          ",bleu1,bleu2,bleu3,bleu4,token_f1,pseudo_precision_x,"
                          "pseudo_precision_y,n_test\n";
    std::string assignments_text;

    TrainResult result;
    const int n_paired = static_cast<int>(bundle.paired.size());
    const int n_ux = static_cast<int>(bundle.unpaired_images.size());
    const int n_uy = static_cast<int>(bundle.unpaired_captions.size());

    for (long it = 0; it < cfg.iterations; ++it) {
        st.iteration = it;
        const std::vector<int> paired_rows = draw_batch(st.rng_data, n_paired, cfg.batch_size);
        std::vector<int> ux_rows, uy_rows;
        if (variant != Variant::PairedOnly) {
            ux_rows = draw_batch(st.rng_data, n_ux, cfg.batch_size);
            uy_rows = draw_batch(st.rng_data, n_uy, cfg.batch_size);
        }

        std::vector<PseudoPair> step_pairs;
        const LossReport rep =
            train_step(st, cfg, bundle, paired_rows, ux_rows, uy_rows, {}, &step_pairs);

        std::string row = rep.csv_row(it);
        const bool eval_now = (it + 1) % cfg.eval_every == 0 || it + 1 == cfg.iterations;
        if (eval_now) {
            MetricsReport m = evaluate(st.params, st.model, bundle.test, cfg.beam_size);
            if (bundle.has_concepts && !st.assignment_window.empty()) {
                const auto [px, py] = pseudo_label_precision(st.assignment_window, concept_of);
                m.pseudo_precision_x = px;
                m.pseudo_precision_y = py;
            }
            st.assignment_window.clear();
            row += ',' + fmt17(m.bleu1) + ',' + fmt17(m.bleu2) + ',' + fmt17(m.bleu3) + ',' +
                   fmt17(m.bleu4) + ',' + fmt17(m.token_f1) + ',';
            if (!std::isnan(m.pseudo_precision_x)) row += fmt17(m.pseudo_precision_x);
            row += ',';
            if (!std::isnan(m.pseudo_precision_y)) row += fmt17(m.pseudo_precision_y);
            row += ',' + std::to_string(m.n_test);
            result.final_metrics = m;

            for (const PseudoPair& p : step_pairs) assignments_text += assignment_jsonl(it, p) + "\n";
        } else {
            row += ",,,,,,,,";
        }
        history += row + "\n";
    }

    result.params = st.params;
    result.model = st.model;
    result.history_csv = std::move(history);

    if (!run_dir.empty()) {
        std::filesystem::create_directories(run_dir);
        const auto write_file = [&](const std::string& name, const std::string& content) {
            const std::string path = run_dir + "/" + name;
            std::ofstream out(path, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write " + path);
            out << content;
        };
        write_file("history.csv", result.history_csv);
        write_file("assignments.jsonl", assignments_text);
        save_checkpoint(run_dir + "/checkpoint.json", st.model, st.params);
    }
    return result;
}

}  // namespace sscap

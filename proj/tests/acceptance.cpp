// Release gate. Each criterion prints exactly one PASS or FAIL line on
// stdout and the exit code is the number of failures. Progress while a
// criterion runs goes to stderr so stdout stays machine-checkable.
//
// Usage: acceptance <fast|ablation|sweep>
//   fast      gradient checks, closed-form loss anchors, retrieval scan,
//             run determinism, BLEU fixtures (criteria 1, 2, 3, 7, 8)
//   ablation  five-variant ladder on the default benchmark over seeds 0-2
//             (criteria 4 and 5; fifteen trained runs, takes hours)
//   sweep     paired-fraction sweep over both end variants (criterion 6)
//
// Tolerances are fixed here on purpose; loosening one is a release decision,
// not a test edit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sscap/finite_diff.hpp"
#include "sscap/losses.hpp"
#include "sscap/metrics.hpp"
#include "sscap/model.hpp"
#include "sscap/pseudo.hpp"
#include "sscap/rng.hpp"
#include "sscap/trainer.hpp"

using namespace sscap;

namespace {

constexpr double kGradTol = 1e-4;       // finite-difference relative error
constexpr double kGradBudgetSec = 30.0;
constexpr double kAnchorTight = 1e-12;  // closed-form loss anchors
constexpr double kAnchorLoose = 1e-9;   // anchors holding up to summation order
constexpr double kScanBudgetSec = 10.0;
constexpr double kVariantBudgetSec = 900.0;  // per-variant training budget
constexpr int kScanAnchors = 100;
constexpr double kPrecisionLift = 5.0;  // required multiple of chance precision

double now_sec() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct Verdict {
    int id = 0;
    bool pass = false;
    std::string detail;
};

void report(const Verdict& v, int& failures) {
    if (!v.pass) ++failures;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << v.id << ": " << v.detail
              << std::endl;
}

std::string fmt(double x, int digits = 3) {
    std::ostringstream os;
    os.precision(digits);
    os << x;
    return os.str();
}

double median3(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.image_dim = 3;
    cfg.latent_dim = 4;
    cfg.vocab_size = 6;
    cfg.embed_dim = 3;
    cfg.lstm_hidden = 3;
    cfg.transformer_layers = 2;
    cfg.disc_hidden = 3;
    cfg.max_seq_len = 6;
    return cfg;
}

void zero_role(ParamStore& ps, const std::string& role) {
    for (auto& e : ps.entries_mut())
        if (e.role == role)
            for (double& v : e.value.data) v = 0.0;
}

// Biases move off zero so relu kinks sit away from the evaluation point. An
// all-dead relu layer would otherwise leave the next layer's pre-activation
// exactly on the kink, where central differences disagree with the
// subgradient. Matches both plain "b1" and prefixed "dx_b1" style names.
void randomize_biases(ParamStore& ps, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    for (auto& e : ps.entries_mut())
        if (e.name[0] == 'b' || e.name.find("_b") != std::string::npos)
            for (double& v : e.value.data) v = rng.uniform(0.01, 0.1);
}

void set_identity_transform(ParamStore& ps, const std::string& role, int layers) {
    for (int l = 1; l <= layers; ++l) {
        Array2& w = ps.at(role, "w" + std::to_string(l));
        for (int r = 0; r < w.rows; ++r)
            for (int c = 0; c < w.cols; ++c) w.at(r, c) = r == c ? 1.0 : 0.0;
        Array2& b = ps.at(role, "b" + std::to_string(l));
        for (double& v : b.data) v = 0.0;
    }
}

Array2 random_array(int rows, int cols, Rng& rng, double scale = 0.5) {
    Array2 a(rows, cols);
    for (double& v : a.data) v = rng.uniform(-scale, scale);
    return a;
}

TokenSeq random_caption(Rng& rng, int vocab_size) {
    TokenSeq seq{BOS};
    const int len = rng.int_in(1, 3);
    for (int i = 0; i < len; ++i) seq.push_back(rng.int_in(ATTR_BASE, vocab_size - 1));
    seq.push_back(EOS);
    return seq;
}

// Max relative error between analytic and central-difference gradients of a
// rebuilt-loss closure, over every parameter the binding marks trainable.
double fd_max_err(ParamStore& ps, const std::vector<std::string>& roles,
                  const std::function<ad::Value(ParamBinding&)>& build, double eps = 1e-5) {
    GradMap grads;
    {
        ad::Tape t;
        ParamBinding pb(t, ps, roles);
        t.backward(build(pb));
        grads = pb.harvest();
    }
    std::vector<FdParam> fps;
    for (auto& [key, g] : grads) {
        const size_t dot = key.find('.');
        fps.push_back({&ps.at(key.substr(0, dot), key.substr(dot + 1)), &g});
    }
    const auto f = [&] {
        ad::Tape t;
        ParamBinding pb(t, ps, roles);
        return t.val(build(pb)).scalar();
    };
    return finite_diff_check(f, fps, eps);
}

// ---------------------------------------------------------------- criterion 1

Verdict check_gradients() {
    const double t0 = now_sec();
    const ModelConfig cfg = tiny_config();
    double worst = 0.0;
    std::string worst_name = "none";

    const auto track = [&](const std::string& name, double err) {
        if (err > worst) {
            worst = err;
            worst_name = name;
        }
    };

    for (std::uint64_t seed = 0; seed <= 4; ++seed) {
        Rng rng = make_rng(101 + seed);
        const Array2 imgs = random_array(3, cfg.image_dim, rng);
        const Array2 neg_imgs = random_array(3, cfg.image_dim, rng);
        std::vector<TokenSeq> caps, neg_caps;
        for (int i = 0; i < 3; ++i) caps.push_back(random_caption(rng, cfg.vocab_size));
        for (int i = 0; i < 3; ++i) neg_caps.push_back(random_caption(rng, cfg.vocab_size));
        const std::uint64_t base = 1000 + 10 * seed;

        {
            ParamStore ps = init_params(cfg, base + 0);
            randomize_biases(ps, base + 50);
            track("caption_ce", fd_max_err(ps, {"F", "H"}, [&](ParamBinding& pb) {
                      return caption_ce_batch(pb, cfg, encode_images(pb, cfg, imgs), caps);
                  }));
        }
        {
            ParamStore ps = init_params(cfg, base + 1);
            randomize_biases(ps, base + 51);
            track("generator", fd_max_err(ps, {"F", "G", "Tvc", "Tcv"}, [&](ParamBinding& pb) {
                      LatentPairBatch paired{encode_images(pb, cfg, imgs),
                                             encode_captions(pb, cfg, caps)};
                      const ad::Value zx_u = encode_images(pb, cfg, neg_imgs);
                      const ad::Value zy_u = encode_captions(pb, cfg, neg_caps);
                      return gan_generator_loss(pb, cfg, paired, zx_u, zy_u, LossWeights{}).total;
                  }));
        }
        {
            ParamStore ps = init_params(cfg, base + 2);
            randomize_biases(ps, base + 52);
            Rng lat = make_rng(19 + seed);
            const Array2 rzx = random_array(3, cfg.latent_dim, lat);
            const Array2 rzy = random_array(3, cfg.latent_dim, lat);
            const Array2 fzy = random_array(3, cfg.latent_dim, lat);
            const Array2 czx = random_array(3, cfg.latent_dim, lat);
            track("discriminator", fd_max_err(ps, {"D"}, [&](ParamBinding& pb) {
                      ad::Tape& t = pb.tape();
                      LatentPairBatch real{t.constant(rzx, "rzx"), t.constant(rzy, "rzy")};
                      LatentPairBatch fi{t.constant(rzx, "fzx"), t.constant(fzy, "fzy")};
                      LatentPairBatch fc{t.constant(czx, "czx"), t.constant(rzy, "czy")};
                      return gan_discriminator_loss(pb, cfg, real, fi, fc);
                  }));
        }
        {
            ParamStore ps = init_params(cfg, base + 3);
            randomize_biases(ps, base + 53);
            track("triplet", fd_max_err(ps, {"F", "H"}, [&](ParamBinding& pb) {
                      return triplet_loss(pb, cfg, imgs, caps, neg_imgs, neg_caps);
                  }));
        }
        {
            ParamStore ps = init_params(cfg, base + 4, true);
            randomize_biases(ps, base + 54);
            track("cycle_generator", fd_max_err(ps, {"F", "G", "Tvc", "Tcv"},
                                                [&](ParamBinding& pb) {
                                                    const ad::Value zx =
                                                        encode_images(pb, cfg, imgs);
                                                    const ad::Value zy =
                                                        encode_captions(pb, cfg, caps);
                                                    return cycle_generator_loss(pb, cfg, zx, zy)
                                                        .total;
                                                }));
        }
        {
            ParamStore ps = init_params(cfg, base + 5, true);
            randomize_biases(ps, base + 55);
            Rng lat = make_rng(21 + seed);
            const Array2 rx = random_array(3, cfg.latent_dim, lat);
            const Array2 fx = random_array(3, cfg.latent_dim, lat);
            const Array2 ry = random_array(3, cfg.latent_dim, lat);
            const Array2 fy = random_array(3, cfg.latent_dim, lat);
            track("cycle_discriminator", fd_max_err(ps, {"D"}, [&](ParamBinding& pb) {
                      ad::Tape& t = pb.tape();
                      return cycle_discriminator_loss(pb, cfg, t.constant(rx, "rx"),
                                                      t.constant(fx, "fx"), t.constant(ry, "ry"),
                                                      t.constant(fy, "fy"));
                  }));
        }
        {
            ParamStore ps = init_params(cfg, base + 6);
            randomize_biases(ps, base + 56);
            const std::vector<double> alphas{0.8, 0.3, 0.6};
            track("captioner_total", fd_max_err(ps, {"F", "H"}, [&](ParamBinding& pb) {
                      ad::Tape& t = pb.tape();
                      const ad::Value cap =
                          caption_ce_batch(pb, cfg, encode_images(pb, cfg, imgs), caps);
                      const ad::Value ll =
                          decode_gold_logprob(pb, cfg, encode_images(pb, cfg, neg_imgs), neg_caps);
                      const ad::Value pseudo =
                          weighted_ce_sum(t, t.scale(ll, -1.0), alphas, 0.1, true);
                      const ad::Value trip = triplet_loss(pb, cfg, imgs, caps, neg_imgs, neg_caps);
                      return t.add(t.add(cap, pseudo), t.scale(trip, 0.1));
                  }));
        }
        std::cerr << "criterion 1: seed " << seed << " done, worst so far " << fmt(worst, 2)
                  << " (" << worst_name << ")\n";
    }

    const double secs = now_sec() - t0;
    Verdict v;
    v.id = 1;
    v.pass = worst < kGradTol && secs < kGradBudgetSec;
    v.detail = "max relative gradient error " + fmt(worst, 2) + " (" + worst_name +
               ") over 7 losses x seeds 0-4 in " + fmt(secs) + " s (tol " + fmt(kGradTol, 1) +
               ", budget " + fmt(kGradBudgetSec, 2) + " s)";
    return v;
}

// ---------------------------------------------------------------- criterion 2

Verdict check_loss_anchors() {
    const ModelConfig cfg = tiny_config();
    bool ok = true;
    std::ostringstream detail;

    {  // constant-half discriminator scores 2 ln 2
        ParamStore ps = init_params(cfg, 17);
        zero_role(ps, "D");
        Rng rng = make_rng(31);
        ad::Tape t;
        ParamBinding pb(t, ps, {"D"});
        LatentPairBatch real{t.constant(random_array(2, cfg.latent_dim, rng), "rzx"),
                             t.constant(random_array(2, cfg.latent_dim, rng), "rzy")};
        LatentPairBatch fi{t.constant(random_array(2, cfg.latent_dim, rng), "fzx"),
                           t.constant(random_array(2, cfg.latent_dim, rng), "fzy")};
        LatentPairBatch fc{t.constant(random_array(2, cfg.latent_dim, rng), "czx"),
                           t.constant(random_array(2, cfg.latent_dim, rng), "czy")};
        const double got = t.val(gan_discriminator_loss(pb, cfg, real, fi, fc)).scalar();
        const double err = std::fabs(got - 2.0 * std::log(2.0));
        ok = ok && err <= kAnchorTight;
        detail << "|disc@half - 2ln2| = " << fmt(err, 2);
    }
    {  // identity transformers: feature regressor vanishes on matched latents
        ParamStore ps = init_params(cfg, 41);
        set_identity_transform(ps, "Tvc", cfg.transformer_layers);
        set_identity_transform(ps, "Tcv", cfg.transformer_layers);
        ad::Tape t;
        ParamBinding pb(t, ps, {"Tvc", "Tcv"});
        const Array2 z(2, 4, {0.5, 0.0, 1.5, 0.25, 2.0, 0.75, 0.0, 1.0});  // non-negative
        LatentPairBatch paired{t.constant(z, "zx"), t.constant(z, "zy")};
        Rng rng = make_rng(6);
        const GanGeneratorOut out =
            gan_generator_loss(pb, cfg, paired, t.constant(random_array(2, 4, rng), "u"),
                               t.constant(random_array(2, 4, rng), "v"), LossWeights{});
        const double reg = t.val(out.reg).scalar();
        ok = ok && reg == 0.0;
        detail << ", reg@identity = " << fmt(reg, 2);
    }
    {  // identity transformers: cycle reconstruction vanishes
        ParamStore ps = init_params(cfg, 61, true);
        set_identity_transform(ps, "Tvc", cfg.transformer_layers);
        set_identity_transform(ps, "Tcv", cfg.transformer_layers);
        const Array2 zx(2, 4, 0.5);
        const Array2 zy(2, 4, 1.25);
        const CycleEval eval = cycle_losses(ps, cfg, zx, zy);
        ok = ok && eval.cycle == 0.0;
        detail << ", cycle@identity = " << fmt(eval.cycle, 2);
    }
    {  // all-zero decoder emits the uniform distribution
        ParamStore ps = init_params(cfg, 8);
        zero_role(ps, "H");
        const std::vector<TokenSeq> caps{{BOS, 3, EOS}, {BOS, 4, 5, EOS}};
        ad::Tape t;
        ParamBinding pb(t, ps, {"H"});
        Rng rng = make_rng(4);
        const Array2 z = random_array(2, cfg.latent_dim, rng);
        const ad::Value ce = caption_ce_batch(pb, cfg, t.constant(z, "z"), caps);
        const double expect = 0.5 * (2 + 3) * std::log(6.0);
        const double err = std::fabs(t.val(ce).scalar() - expect);
        ok = ok && err <= kAnchorLoose;
        detail << ", |uniform CE - steps*ln(vocab)| = " << fmt(err, 2);
    }

    Verdict v;
    v.id = 2;
    v.pass = ok;
    v.detail = detail.str();
    return v;
}

// ---------------------------------------------------------------- criterion 3

Verdict check_retrieval_scan() {
    const double t0 = now_sec();

    GenConfig gc;
    gc.num_concepts = 8;
    gc.attributes_per_concept = 3;
    gc.attribute_vocab = 16;
    gc.samples_per_concept = 30;
    gc.image_dim = 8;
    gc.noise_sigma = 0.2;
    gc.seed = 11;
    const Dataset data = generate(gc);
    const SplitBundle bundle = split_scarcely_paired(data, 0.2, 0.2, 11);

    ModelConfig cfg;
    cfg.image_dim = bundle.image_dim;
    cfg.vocab_size = bundle.vocab_size;
    cfg.latent_dim = 8;
    cfg.embed_dim = 4;
    cfg.lstm_hidden = 8;
    cfg.transformer_layers = 2;
    cfg.disc_hidden = 8;
    cfg.max_seq_len = 8;
    const ParamStore ps = init_params(cfg, 7);

    Rng pool_rng = make_rng(13);
    const CandidatePool pool_caps =
        sample_pool(bundle.unpaired_captions, 'y', 1.0, ps, cfg, pool_rng);
    const CandidatePool pool_imgs =
        sample_pool(bundle.unpaired_images, 'x', 1.0, ps, cfg, pool_rng);

    // Independent scan: score the anchor against every pool row one pair at a
    // time and keep the best, breaking score ties toward the lower sample id.
    const auto scan = [&](const Array2& anchor_z, const CandidatePool& pool, bool anchor_is_image) {
        int best_id = -1;
        double best = 0.0;
        for (int j = 0; j < pool.latents.rows; ++j) {
            Array2 zj(1, cfg.latent_dim);
            for (int c = 0; c < cfg.latent_dim; ++c) zj.at(0, c) = pool.latents.at(j, c);
            const double s = anchor_is_image ? discriminate_fwd(ps, cfg, anchor_z, zj).at(0, 0)
                                             : discriminate_fwd(ps, cfg, zj, anchor_z).at(0, 0);
            const int sid = pool.sample_ids[j];
            if (best_id < 0 || s > best || (s == best && sid < best_id)) {
                best = s;
                best_id = sid;
            }
        }
        return best_id;
    };

    Rng pick = make_rng(17);
    int mismatches = 0;
    for (int i = 0; i < kScanAnchors; ++i) {
        const Sample& a =
            bundle.unpaired_images[pick.below(bundle.unpaired_images.size())];
        const Array2 za = encode_images_fwd(ps, cfg, Array2(1, cfg.image_dim, a.image));
        const PseudoPair got = assign_pseudo_caption(a, pool_caps, ps, cfg);
        if (got.retrieved_id != scan(za, pool_caps, true)) ++mismatches;
    }
    for (int i = 0; i < kScanAnchors; ++i) {
        const Sample& a =
            bundle.unpaired_captions[pick.below(bundle.unpaired_captions.size())];
        const Array2 za = encode_captions_fwd(ps, cfg, {a.caption});
        const PseudoPair got = assign_pseudo_image(a, pool_imgs, ps, cfg);
        if (got.retrieved_id != scan(za, pool_imgs, false)) ++mismatches;
    }

    const double secs = now_sec() - t0;
    Verdict v;
    v.id = 3;
    v.pass = mismatches == 0 && secs < kScanBudgetSec;
    v.detail = std::to_string(mismatches) + " mismatches against the brute-force scan over 2x" +
               std::to_string(kScanAnchors) + " anchors at full pool in " + fmt(secs) +
               " s (budget " + fmt(kScanBudgetSec, 2) + " s)";
    return v;
}

// ---------------------------------------------------------------- criterion 7

Verdict check_determinism() {
    RunConfig cfg;
    cfg.num_concepts = 6;
    cfg.attributes_per_concept = 3;
    cfg.attribute_vocab = 12;
    cfg.samples_per_concept = 12;
    cfg.image_dim = 8;
    cfg.noise_sigma = 0.2;
    cfg.paired_fraction = 0.25;
    cfg.test_fraction = 0.15;
    cfg.latent_dim = 8;
    cfg.embed_dim = 4;
    cfg.lstm_hidden = 8;
    cfg.transformer_layers = 2;
    cfg.disc_hidden = 8;
    cfg.max_seq_len = 6;
    cfg.variant = "final";
    cfg.batch_size = 4;
    cfg.iterations = 30;
    cfg.warmup_iters = 5;
    cfg.pool_fraction = 0.5;
    cfg.eval_every = 10;
    cfg.beam_size = 2;
    cfg.seed = 3;

    const auto run = [&] {
        const Dataset data = generate(cfg.gen_config());
        const SplitBundle bundle =
            split_scarcely_paired(data, cfg.paired_fraction, cfg.test_fraction, cfg.seed);
        return train(cfg, bundle, "");
    };
    const TrainResult r1 = run();
    const TrainResult r2 = run();

    const bool same_csv = r1.history_csv == r2.history_csv;
    const bool same_metrics = r1.final_metrics.to_json() == r2.final_metrics.to_json();
    Verdict v;
    v.id = 7;
    v.pass = same_csv && same_metrics;
    v.detail = std::string("two identical runs: history CSV ") +
               (same_csv ? "bit-identical" : "DIFFERS") + ", final metrics " +
               (same_metrics ? "bit-identical" : "DIFFERS");
    return v;
}

// ---------------------------------------------------------------- criterion 8

Verdict check_bleu_fixtures() {
    int failed = 0;
    const auto expect_near = [&](double got, double want) {
        if (!(std::fabs(got - want) < kAnchorLoose)) ++failed;
    };

    {  // identity scores one at every reachable order
        const std::vector<TokenSeq> cand{{3, 4, 5}};
        const std::vector<std::vector<TokenSeq>> refs{{{3, 4, 5}}};
        for (int n = 1; n <= 3; ++n)
            if (bleu(cand, refs, n) != 1.0) ++failed;
        // a length-3 sequence has no 4-grams: zero denominator scores zero
        if (bleu(cand, refs, 4) != 0.0) ++failed;
    }
    expect_near(bleu({{3, 4, 6}}, {{{3, 4, 5}}}, 1), 2.0 / 3.0);  // one unigram miss
    if (bleu({{3, 5, 4}}, {{{3, 4, 5}}}, 2) != 0.0) ++failed;     // no bigram survives
    expect_near(bleu({{3, 4}}, {{{3, 4, 5, 6}}}, 1), std::exp(-1.0));  // brevity penalty
    expect_near(bleu({{3, 3, 3, 4}}, {{{3, 3, 4, 5}}}, 1), 0.75);      // clipped unigrams
    expect_near(bleu({{3, 4, 3}}, {{{3, 3, 4}}}, 2), std::sqrt(0.5));  // two-gram composite
    // corpus totals are summed before dividing; per-sentence would give 1/2
    expect_near(bleu({{3, 4}, {5}}, {{{3, 4}}, {{6}}}, 1), 2.0 / 3.0);
    // closest lengths to 3 are 2 and 4; the tie picks the shorter, no penalty
    expect_near(bleu({{3, 4, 5}}, {{{6, 6}, {3, 4, 5, 6}}}, 1), 1.0);
    // clipping takes the max count over references
    expect_near(bleu({{3, 3}}, {{{3}, {3, 3, 3}}}, 1), 1.0);
    if (bleu({}, {}, 4) != 0.0) ++failed;             // empty corpus
    if (bleu({TokenSeq{}}, {{{3}}}, 1) != 0.0) ++failed;  // empty candidate
    {
        bool threw = false;
        try {
            bleu({{3}}, {}, 1);
        } catch (const std::invalid_argument&) {
            threw = true;
        }
        if (!threw) ++failed;
        threw = false;
        try {
            bleu({{3}}, {{{3}}}, 0);
        } catch (const std::invalid_argument&) {
            threw = true;
        }
        if (!threw) ++failed;
    }

    Verdict v;
    v.id = 8;
    v.pass = failed == 0;
    v.detail = std::to_string(failed) +
               " failures across 11 hand fixtures (identity, misses, ordering, brevity penalty, "
               "clipping, corpus totals, empties, argument checks) at 1e-9";
    return v;
}

// --------------------------------------------------------- criteria 4 and 5

struct LadderCell {
    double bleu4 = 0.0;
    double precision_x = NAN;
    double precision_y = NAN;
    double secs = 0.0;
};

void run_ladder(std::vector<Verdict>& out) {
    const std::vector<std::string> variants{"paired-only", "cyclegan", "ver1", "ver2", "final"};
    RunConfig base;  // benchmark defaults
    std::map<std::string, std::vector<LadderCell>> cells;

    for (std::uint64_t seed = 0; seed <= 2; ++seed) {
        RunConfig cfg = base;
        cfg.seed = seed;
        const Dataset data = generate(cfg.gen_config());
        const SplitBundle bundle =
            split_scarcely_paired(data, cfg.paired_fraction, cfg.test_fraction, cfg.seed);
        for (const std::string& variant : variants) {
            cfg.variant = variant;
            const double t0 = now_sec();
            const TrainResult r = train(cfg, bundle, "");
            LadderCell cell;
            cell.bleu4 = r.final_metrics.bleu4;
            cell.precision_x = r.final_metrics.pseudo_precision_x;
            cell.precision_y = r.final_metrics.pseudo_precision_y;
            cell.secs = now_sec() - t0;
            cells[variant].push_back(cell);
            std::cerr << "ladder seed " << seed << " " << variant << ": bleu4 "
                      << fmt(cell.bleu4) << " precision " << fmt(cell.precision_x) << "/"
                      << fmt(cell.precision_y) << " in " << fmt(cell.secs, 4) << " s\n";
        }
    }

    std::map<std::string, double> med, med_secs;
    for (const auto& [variant, list] : cells) {
        std::vector<double> b, s;
        for (const LadderCell& c : list) {
            b.push_back(c.bleu4);
            s.push_back(c.secs);
        }
        med[variant] = median3(b);
        med_secs[variant] = median3(s);
    }

    {
        const bool order = med["final"] > med["ver2"] && med["ver2"] > med["ver1"] &&
                           med["ver1"] > med["paired-only"] && med["final"] > med["cyclegan"];
        double slowest = 0.0;
        std::string slowest_name;
        for (const auto& [variant, s] : med_secs)
            if (s > slowest) {
                slowest = s;
                slowest_name = variant;
            }
        const bool on_time = slowest < kVariantBudgetSec;
        Verdict v;
        v.id = 4;
        v.pass = order && on_time;
        v.detail = "median BLEU-4 over seeds 0-2: final " + fmt(med["final"]) + " > ver2 " +
                   fmt(med["ver2"]) + " > ver1 " + fmt(med["ver1"]) + " > paired-only " +
                   fmt(med["paired-only"]) + ", final > cyclegan " + fmt(med["cyclegan"]) +
                   (order ? "" : " (ORDER VIOLATED)") + "; slowest median " + slowest_name + " " +
                   fmt(slowest, 4) + " s (budget " + fmt(kVariantBudgetSec, 4) + " s)";
        out.push_back(v);
    }
    {
        const double chance = 1.0 / RunConfig().num_concepts;
        const double threshold = kPrecisionLift * chance;
        bool ok = true;
        std::ostringstream d;
        d << "trained final-variant pseudo-label precision vs " << fmt(threshold) << " (" <<
            fmt(kPrecisionLift, 2) << "x chance):";
        for (size_t s = 0; s < cells["final"].size(); ++s) {
            const LadderCell& c = cells["final"][s];
            const bool cell_ok = !std::isnan(c.precision_x) && !std::isnan(c.precision_y) &&
                                 c.precision_x >= threshold && c.precision_y >= threshold;
            ok = ok && cell_ok;
            d << " seed" << s << " " << fmt(c.precision_x) << "/" << fmt(c.precision_y);
        }
        Verdict v;
        v.id = 5;
        v.pass = ok;
        v.detail = d.str();
        out.push_back(v);
    }
}

// ---------------------------------------------------------------- criterion 6

Verdict run_fraction_sweep() {
    const std::vector<double> fractions{0.01, 0.05, 0.2, 0.6};
    const std::vector<std::string> variants{"paired-only", "final"};
    std::map<std::string, std::vector<double>> med;  // variant -> per-fraction median

    for (const double frac : fractions) {
        std::map<std::string, std::vector<double>> bleu4;
        for (std::uint64_t seed = 0; seed <= 2; ++seed) {
            RunConfig cfg;
            cfg.paired_fraction = frac;
            cfg.seed = seed;
            const Dataset data = generate(cfg.gen_config());
            const SplitBundle bundle =
                split_scarcely_paired(data, cfg.paired_fraction, cfg.test_fraction, cfg.seed);
            for (const std::string& variant : variants) {
                cfg.variant = variant;
                const double t0 = now_sec();
                const TrainResult r = train(cfg, bundle, "");
                bleu4[variant].push_back(r.final_metrics.bleu4);
                std::cerr << "sweep fraction " << frac << " seed " << seed << " " << variant
                          << ": bleu4 " << fmt(r.final_metrics.bleu4) << " in "
                          << fmt(now_sec() - t0, 4) << " s\n";
            }
        }
        for (const std::string& variant : variants) med[variant].push_back(median3(bleu4[variant]));
    }

    bool monotone = true, dominates = true;
    for (const std::string& variant : variants)
        for (size_t i = 1; i < fractions.size(); ++i)
            if (med[variant][i] < med[variant][i - 1]) monotone = false;
    for (size_t i = 0; i < fractions.size(); ++i)
        if (med["final"][i] < med["paired-only"][i]) dominates = false;

    std::ostringstream d;
    d << "median BLEU-4 by paired fraction {0.01, 0.05, 0.2, 0.6}: paired-only [";
    for (size_t i = 0; i < fractions.size(); ++i)
        d << (i ? " " : "") << fmt(med["paired-only"][i]);
    d << "], final [";
    for (size_t i = 0; i < fractions.size(); ++i) d << (i ? " " : "") << fmt(med["final"][i]);
    d << "]; " << (monotone ? "both non-decreasing" : "MONOTONICITY VIOLATED") << ", "
      << (dominates ? "final >= paired-only at every fraction" : "DOMINANCE VIOLATED");

    Verdict v;
    v.id = 6;
    v.pass = monotone && dominates;
    v.detail = d.str();
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string mode = argc > 1 ? argv[1] : "fast";
    int failures = 0;
    if (mode == "fast") {
        report(check_gradients(), failures);
        report(check_loss_anchors(), failures);
        report(check_retrieval_scan(), failures);
        report(check_determinism(), failures);
        report(check_bleu_fixtures(), failures);
    } else if (mode == "ablation") {
        std::vector<Verdict> verdicts;
        run_ladder(verdicts);
        for (const Verdict& v : verdicts) report(v, failures);
    } else if (mode == "sweep") {
        report(run_fraction_sweep(), failures);
    } else {
        std::cerr << "usage: acceptance <fast|ablation|sweep>\n";
        return 2;
    }
    return failures;
}

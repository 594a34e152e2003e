#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "sscap/checkpoint.hpp"
#include "sscap/model.hpp"
#include "sscap/rng.hpp"

using namespace sscap;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.image_dim = 2;
    cfg.latent_dim = 3;
    cfg.vocab_size = 5;
    cfg.embed_dim = 2;
    cfg.lstm_hidden = 2;
    cfg.transformer_layers = 4;
    cfg.disc_hidden = 2;
    cfg.max_seq_len = 6;
    return cfg;
}

void fill(Array2& a, Rng& rng) {
    for (double& v : a.data) v = rng.uniform(-0.5, 0.5);
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Independent scalar LSTM step used as the recurrence oracle. Gate order in
// the packed matrices is input, forget, cell, output.
void oracle_lstm_step(const Array2& wx, const Array2& wh, const Array2& b,
                      const std::vector<double>& x, std::vector<double>& h,
                      std::vector<double>& c) {
    const int hidden = static_cast<int>(h.size());
    std::vector<double> pre(static_cast<size_t>(4 * hidden), 0.0);
    for (int j = 0; j < 4 * hidden; ++j) {
        double acc = b.at(0, j);
        for (size_t k = 0; k < x.size(); ++k) acc += x[k] * wx.at(static_cast<int>(k), j);
        for (int k = 0; k < hidden; ++k) acc += h[static_cast<size_t>(k)] * wh.at(k, j);
        pre[static_cast<size_t>(j)] = acc;
    }
    for (int k = 0; k < hidden; ++k) {
        const double i = sig(pre[static_cast<size_t>(k)]);
        const double f = sig(pre[static_cast<size_t>(hidden + k)]);
        const double g = std::tanh(pre[static_cast<size_t>(2 * hidden + k)]);
        const double o = sig(pre[static_cast<size_t>(3 * hidden + k)]);
        c[static_cast<size_t>(k)] = f * c[static_cast<size_t>(k)] + i * g;
        h[static_cast<size_t>(k)] = o * std::tanh(c[static_cast<size_t>(k)]);
    }
}

}  // namespace

TEST_CASE("parameter initialization is seed-deterministic") {
    const ModelConfig cfg = tiny_config();
    const ParamStore a = init_params(cfg, 11);
    const ParamStore b = init_params(cfg, 11);
    const ParamStore c = init_params(cfg, 12);
    REQUIRE(a.entries().size() == b.entries().size());
    bool any_diff = false;
    for (size_t i = 0; i < a.entries().size(); ++i) {
        CHECK(a.entries()[i].role == b.entries()[i].role);
        CHECK(a.entries()[i].name == b.entries()[i].name);
        CHECK(a.entries()[i].value.data == b.entries()[i].value.data);
        if (a.entries()[i].value.data != c.entries()[i].value.data) any_diff = true;
    }
    CHECK(any_diff);
}

TEST_CASE("parameter inventory per role") {
    const ModelConfig cfg = tiny_config();
    auto count_role = [](const ParamStore& ps, const std::string& role) {
        int n = 0;
        for (const auto& e : ps.entries()) n += e.role == role;
        return n;
    };
    const ParamStore ps = init_params(cfg, 0);
    CHECK(count_role(ps, "F") == 4);
    CHECK(count_role(ps, "G") == 6);
    CHECK(count_role(ps, "H") == 10);
    CHECK(count_role(ps, "Tvc") == 2 * cfg.transformer_layers);
    CHECK(count_role(ps, "Tcv") == 2 * cfg.transformer_layers);
    CHECK(count_role(ps, "D") == 6);
    const ParamStore with_domain = init_params(cfg, 0, true);
    CHECK(count_role(with_domain, "D") == 18);
    CHECK(with_domain.has("D", "dx_w1"));
    CHECK(with_domain.has("D", "dy_b3"));
}

TEST_CASE("image encoder matches a hand-computed two-layer MLP") {
    const ModelConfig cfg = tiny_config();
    ParamStore ps = init_params(cfg, 5);
    Rng rng = make_rng(77);
    fill(ps.at("F", "w1"), rng);
    fill(ps.at("F", "b1"), rng);
    fill(ps.at("F", "w2"), rng);
    fill(ps.at("F", "b2"), rng);

    Array2 x(2, 2, {0.3, -1.2, 0.7, 0.05});
    const Array2 z = encode_images_fwd(ps, cfg, x);
    REQUIRE(z.rows == 2);
    REQUIRE(z.cols == 3);

    for (int r = 0; r < 2; ++r) {
        std::vector<double> h1(3);
        for (int j = 0; j < 3; ++j) {
            double acc = ps.at("F", "b1").at(0, j);
            for (int k = 0; k < 2; ++k) acc += x.at(r, k) * ps.at("F", "w1").at(k, j);
            h1[static_cast<size_t>(j)] = acc > 0 ? acc : 0.0;
        }
        for (int j = 0; j < 3; ++j) {
            double acc = ps.at("F", "b2").at(0, j);
            for (int k = 0; k < 3; ++k) acc += h1[static_cast<size_t>(k)] * ps.at("F", "w2").at(k, j);
            CHECK(z.at(r, j) == doctest::Approx(acc).epsilon(1e-14));
        }
    }
}

TEST_CASE("caption encoder matches an independent LSTM recurrence") {
    const ModelConfig cfg = tiny_config();
    ParamStore ps = init_params(cfg, 5);
    Rng rng = make_rng(78);
    for (const char* name : {"embed", "wx", "wh", "b", "proj_w", "proj_b"})
        fill(ps.at("G", name), rng);

    const TokenSeq caption{BOS, 3, 4, EOS};
    const Array2 z = encode_captions_fwd(ps, cfg, {caption});
    REQUIRE(z.rows == 1);
    REQUIRE(z.cols == 3);

    std::vector<double> h(2, 0.0), c(2, 0.0);
    const Array2& embed = ps.at("G", "embed");
    for (int tok : caption) {
        std::vector<double> x{embed.at(tok, 0), embed.at(tok, 1)};
        oracle_lstm_step(ps.at("G", "wx"), ps.at("G", "wh"), ps.at("G", "b"), x, h, c);
    }
    for (int j = 0; j < 3; ++j) {
        double acc = ps.at("G", "proj_b").at(0, j);
        for (int k = 0; k < 2; ++k) acc += h[static_cast<size_t>(k)] * ps.at("G", "proj_w").at(k, j);
        CHECK(z.at(0, j) == doctest::Approx(acc).epsilon(1e-13));
    }
}

TEST_CASE("ragged caption batch equals per-item encoding") {
    const ModelConfig cfg = tiny_config();
    const ParamStore ps = init_params(cfg, 9);
    const std::vector<TokenSeq> caps{{BOS, 3, EOS}, {BOS, 4, 3, EOS}, {BOS, 3, EOS},
                                     {BOS, 3, 4, 3, EOS}};
    const Array2 batch = encode_captions_fwd(ps, cfg, caps);
    REQUIRE(batch.rows == 4);
    for (size_t i = 0; i < caps.size(); ++i) {
        const Array2 single = encode_captions_fwd(ps, cfg, {caps[i]});
        for (int j = 0; j < batch.cols; ++j)
            CHECK(batch.at(static_cast<int>(i), j) == single.at(0, j));
    }
}

TEST_CASE("tape caption encoder agrees with the forward-only one") {
    const ModelConfig cfg = tiny_config();
    const ParamStore ps = init_params(cfg, 9);
    const std::vector<TokenSeq> caps{{BOS, 3, EOS}, {BOS, 4, 3, EOS}};
    const Array2 fwd = encode_captions_fwd(ps, cfg, caps);

    ad::Tape t;
    ParamBinding pb(t, ps, {"G"});
    const Array2& taped = t.val(encode_captions(pb, cfg, caps));
    REQUIRE(taped.rows == fwd.rows);
    for (int r = 0; r < fwd.rows; ++r)
        for (int j = 0; j < fwd.cols; ++j)
            CHECK(taped.at(r, j) == doctest::Approx(fwd.at(r, j)).epsilon(1e-14));
}

TEST_CASE("caption validation rejects malformed sequences") {
    const ModelConfig cfg = tiny_config();
    const ParamStore ps = init_params(cfg, 1);
    CHECK_THROWS_AS(encode_captions_fwd(ps, cfg, {{3, 4, EOS}}), std::invalid_argument);
    CHECK_THROWS_AS(encode_captions_fwd(ps, cfg, {{BOS, 3, 4}}), std::invalid_argument);
    CHECK_THROWS_AS(encode_captions_fwd(ps, cfg, {{BOS, 3, 3, 3, 3, 3, EOS}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(encode_captions_fwd(ps, cfg, {{BOS, 5, EOS}}), std::invalid_argument);
    CHECK_THROWS_AS(encode_captions_fwd(ps, cfg, {}), std::invalid_argument);
}

TEST_CASE("teacher-forced decode rows are log-distributions") {
    const ModelConfig cfg = tiny_config();
    const ParamStore ps = init_params(cfg, 21);
    const Array2 z = encode_images_fwd(ps, cfg, Array2(1, 2, {0.4, -0.2}));

    ad::Tape t;
    ParamBinding pb(t, ps, {"H"});
    const TokenSeq y{BOS, 3, 4, EOS};
    const Array2& lp = t.val(decode_teacher_forced(pb, cfg, t.constant(z, "z"), y));
    REQUIRE(lp.rows == 3);
    REQUIRE(lp.cols == cfg.vocab_size);
    for (int r = 0; r < lp.rows; ++r) {
        double mass = 0.0;
        for (int j = 0; j < lp.cols; ++j) mass += std::exp(lp.at(r, j));
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("stepwise decoder agrees with teacher forcing") {
    const ModelConfig cfg = tiny_config();
    const ParamStore ps = init_params(cfg, 3);
    const Array2 z = encode_images_fwd(ps, cfg, Array2(1, 2, {1.0, -0.4}));
    const TokenSeq y{BOS, 4, 3, EOS};

    ad::Tape t;
    ParamBinding pb(t, ps, {"H"});
    const Array2& lp = t.val(decode_teacher_forced(pb, cfg, t.constant(z, "z"), y));

    DecoderState state = decoder_init_fwd(ps, cfg, z);
    for (size_t step = 0; step + 1 < y.size(); ++step) {
        const Array2 row = decoder_step_fwd(ps, cfg, state, y[step]);
        for (int j = 0; j < cfg.vocab_size; ++j)
            CHECK(row.at(0, j) == doctest::Approx(lp.at(static_cast<int>(step), j)).epsilon(1e-13));
    }
}

TEST_CASE("batched gold log-likelihood matches per-sample teacher forcing") {
    const ModelConfig cfg = tiny_config();
    const ParamStore ps = init_params(cfg, 13);
    Rng rng = make_rng(4);
    Array2 images(3, 2);
    fill(images, rng);
    const std::vector<TokenSeq> caps{{BOS, 3, EOS}, {BOS, 4, 3, EOS}, {BOS, 3, 4, 3, EOS}};
    const Array2 z = encode_images_fwd(ps, cfg, images);

    ad::Tape t;
    ParamBinding pb(t, ps, {"H"});
    std::vector<int> steps;
    const Array2& col =
        t.val(decode_gold_logprob(pb, cfg, t.constant(z, "z"), caps, &steps));
    REQUIRE(col.rows == 3);
    REQUIRE(col.cols == 1);
    CHECK(steps == std::vector<int>{2, 3, 4});

    for (int i = 0; i < 3; ++i) {
        Array2 zi(1, 3);
        for (int j = 0; j < 3; ++j) zi.at(0, j) = z.at(i, j);
        ad::Tape ti;
        ParamBinding pbi(ti, ps, {"H"});
        const Array2& lp =
            ti.val(decode_teacher_forced(pbi, cfg, ti.constant(zi, "z"), caps[static_cast<size_t>(i)]));
        double total = 0.0;
        for (size_t s = 1; s < caps[static_cast<size_t>(i)].size(); ++s)
            total += lp.at(static_cast<int>(s) - 1, caps[static_cast<size_t>(i)][s]);
        CHECK(col.at(i, 0) == doctest::Approx(total).epsilon(1e-12));
    }
}

TEST_CASE("feature transformer applies exactly the configured affine stack") {
    ModelConfig cfg = tiny_config();
    ParamStore ps = init_params(cfg, 2);
    auto set_identity = [&](const char* role) {
        for (int l = 1; l <= cfg.transformer_layers; ++l) {
            Array2& w = ps.at(role, "w" + std::to_string(l));
            for (int r = 0; r < w.rows; ++r)
                for (int c = 0; c < w.cols; ++c) w.at(r, c) = r == c ? 1.0 : 0.0;
            Array2& b = ps.at(role, "b" + std::to_string(l));
            for (double& v : b.data) v = 0.0;
        }
    };
    set_identity("Tvc");
    set_identity("Tcv");

    // Identity stack on non-negative input passes through untouched.
    const Array2 x(2, 3, {0.5, 0.0, 2.0, 1.0, 0.25, 0.0});
    const Array2 y = transform_feature_fwd(ps, cfg, true, x);
    CHECK(y.data == x.data);

    // A negative bias on the last layer survives: no activation after it.
    ps.at("Tvc", "b4") = Array2(1, 3, -5.0);
    const Array2 y2 = transform_feature_fwd(ps, cfg, true, x);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c) CHECK(y2.at(r, c) == x.at(r, c) - 5.0);

    // Negating the first layer and keeping the rest identity yields zero for
    // positive input, which only happens with an activation between layers.
    set_identity("Tvc");
    Array2& w1 = ps.at("Tvc", "w1");
    for (double& v : w1.data) v = -v;
    const Array2 positive(1, 3, {0.3, 0.7, 1.1});
    const Array2 y3 = transform_feature_fwd(ps, cfg, true, positive);
    for (double v : y3.data) CHECK(v == 0.0);

    // Tape build agrees with the forward evaluator.
    ad::Tape t;
    ParamBinding pb(t, ps, {"Tcv"});
    const Array2& taped = t.val(transform_feature(pb, cfg, false, t.constant(x, "x")));
    const Array2 fwd = transform_feature_fwd(ps, cfg, false, x);
    for (size_t i = 0; i < fwd.data.size(); ++i)
        CHECK(taped.data[i] == doctest::Approx(fwd.data[i]).epsilon(1e-14));
}

TEST_CASE("pair discriminator matches a hand-computed MLP and is order-sensitive") {
    const ModelConfig cfg = tiny_config();
    ParamStore ps = init_params(cfg, 6);
    Rng rng = make_rng(91);
    Array2 zx(1, 3), zy(1, 3);
    fill(zx, rng);
    fill(zy, rng);

    const Array2 s = discriminate_fwd(ps, cfg, zx, zy);
    REQUIRE(s.rows == 1);
    REQUIRE(s.cols == 1);
    CHECK(s.scalar() > 0.0);
    CHECK(s.scalar() < 1.0);

    std::vector<double> cat{zx.at(0, 0), zx.at(0, 1), zx.at(0, 2),
                            zy.at(0, 0), zy.at(0, 1), zy.at(0, 2)};
    std::vector<double> h1(2), h2(2);
    for (int j = 0; j < 2; ++j) {
        double acc = ps.at("D", "b1").at(0, j);
        for (int k = 0; k < 6; ++k) acc += cat[static_cast<size_t>(k)] * ps.at("D", "w1").at(k, j);
        h1[static_cast<size_t>(j)] = acc > 0 ? acc : 0;
    }
    for (int j = 0; j < 2; ++j) {
        double acc = ps.at("D", "b2").at(0, j);
        for (int k = 0; k < 2; ++k) acc += h1[static_cast<size_t>(k)] * ps.at("D", "w2").at(k, j);
        h2[static_cast<size_t>(j)] = acc > 0 ? acc : 0;
    }
    double logit = ps.at("D", "b3").at(0, 0);
    for (int k = 0; k < 2; ++k) logit += h2[static_cast<size_t>(k)] * ps.at("D", "w3").at(k, 0);
    CHECK(s.scalar() == doctest::Approx(sig(logit)).epsilon(1e-13));

    const Array2 swapped = discriminate_fwd(ps, cfg, zy, zx);
    CHECK(std::fabs(s.scalar() - swapped.scalar()) > 1e-12);
}

TEST_CASE("all-pairs scores equal a pairwise scan") {
    const ModelConfig cfg = tiny_config();
    const ParamStore ps = init_params(cfg, 14);
    Rng rng = make_rng(15);
    Array2 anchors(3, 3), cands(4, 3);
    fill(anchors, rng);
    fill(cands, rng);

    for (bool anchor_is_image : {true, false}) {
        const Array2 grid = discriminate_all_pairs_fwd(ps, cfg, anchors, cands, anchor_is_image);
        REQUIRE(grid.rows == 3);
        REQUIRE(grid.cols == 4);
        for (int i = 0; i < 3; ++i) {
            Array2 a(1, 3);
            for (int j = 0; j < 3; ++j) a.at(0, j) = anchors.at(i, j);
            for (int k = 0; k < 4; ++k) {
                Array2 c(1, 3);
                for (int j = 0; j < 3; ++j) c.at(0, j) = cands.at(k, j);
                const Array2 one = anchor_is_image ? discriminate_fwd(ps, cfg, a, c)
                                                   : discriminate_fwd(ps, cfg, c, a);
                CHECK(grid.at(i, k) == one.scalar());
            }
        }
    }
}

TEST_CASE("gradient harvesting respects the trainable role set") {
    const ModelConfig cfg = tiny_config();
    const ParamStore ps = init_params(cfg, 30);
    const std::vector<TokenSeq> caps{{BOS, 3, EOS}, {BOS, 4, EOS}};

    ad::Tape t;
    ParamBinding pb(t, ps, {"F"});  // F never appears in this graph
    t.backward(t.sum(encode_captions(pb, cfg, caps)));
    const GradMap grads = pb.harvest();
    CHECK(grads.size() == 4);
    for (const auto& [key, g] : grads) {
        CHECK(key.rfind("F.", 0) == 0);
        for (double v : g.data) CHECK(v == 0.0);
    }

    ad::Tape t2;
    ParamBinding pb2(t2, ps, {"G"});
    t2.backward(t2.sum(encode_captions(pb2, cfg, caps)));
    const GradMap g2 = pb2.harvest();
    CHECK(g2.size() == 6);
    double norm = 0.0;
    for (const auto& [key, g] : g2)
        for (double v : g.data) norm += v * v;
    CHECK(norm > 0.0);
}

TEST_CASE("checkpoint round trip is bit-exact") {
    const ModelConfig cfg = tiny_config();
    const ParamStore ps = init_params(cfg, 123, true);
    const std::string path =
        (std::filesystem::temp_directory_path() / "sscap_ckpt_roundtrip.json").string();
    save_checkpoint(path, cfg, ps);
    const Checkpoint back = load_checkpoint(path);

    CHECK(back.config.image_dim == cfg.image_dim);
    CHECK(back.config.latent_dim == cfg.latent_dim);
    CHECK(back.config.vocab_size == cfg.vocab_size);
    CHECK(back.config.max_seq_len == cfg.max_seq_len);
    REQUIRE(back.params.entries().size() == ps.entries().size());
    for (size_t i = 0; i < ps.entries().size(); ++i) {
        const auto& a = ps.entries()[i];
        const auto& b = back.params.entries()[i];
        CHECK(a.role == b.role);
        CHECK(a.name == b.name);
        CHECK(a.value.data == b.value.data);
    }
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint loader rejects unknown format versions") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "sscap_ckpt_badver.json").string();
    std::FILE* f = std::fopen(path.c_str(), "w");
    REQUIRE(f != nullptr);
    std::fputs("{\"format_version\": 2, \"config\": {}, \"params\": []}", f);
    std::fclose(f);
    CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
    std::filesystem::remove(path);
}

#include "sscap/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sscap/kernels.hpp"
#include "sscap/rng.hpp"

namespace sscap {

namespace {

std::string qualify(const std::string& role, const std::string& name) { return role + "." + name; }

void validate_caption(const ModelConfig& cfg, const TokenSeq& y, const char* where) {
    if (y.empty()) throw std::invalid_argument(std::string(where) + ": empty sequence");
    if (y.front() != BOS)
        throw std::invalid_argument(std::string(where) + ": sequence must start with BOS");
    if (y.back() != EOS)
        throw std::invalid_argument(std::string(where) + ": sequence must end with EOS");
    if (static_cast<int>(y.size()) > cfg.max_seq_len)
        throw std::invalid_argument(std::string(where) + ": sequence length " +
                                    std::to_string(y.size()) + " exceeds max_seq_len " +
                                    std::to_string(cfg.max_seq_len));
    for (int id : y)
        if (id < 0 || id >= cfg.vocab_size)
            throw std::invalid_argument(std::string(where) + ": token id " + std::to_string(id) +
                                        " outside vocab of size " +
                                        std::to_string(cfg.vocab_size));
}

// Stable grouping by sequence length so equal-length captions batch together.
std::vector<std::vector<int>> group_by_length(const std::vector<TokenSeq>& seqs) {
    std::vector<size_t> lengths;
    for (const auto& s : seqs)
        if (std::find(lengths.begin(), lengths.end(), s.size()) == lengths.end())
            lengths.push_back(s.size());
    std::sort(lengths.begin(), lengths.end());
    std::vector<std::vector<int>> groups;
    for (size_t len : lengths) {
        std::vector<int> g;
        for (size_t i = 0; i < seqs.size(); ++i)
            if (seqs[i].size() == len) g.push_back(static_cast<int>(i));
        groups.push_back(std::move(g));
    }
    return groups;
}

// Reassembles per-group row blocks into the original sample order.
ad::Value stitch_groups(ad::Tape& t, const std::vector<ad::Value>& blocks,
                        const std::vector<std::vector<int>>& groups, int total_rows) {
    ad::Value cat = blocks[0];
    for (size_t k = 1; k < blocks.size(); ++k) cat = t.concat_rows(cat, blocks[k]);
    if (groups.size() == 1) return cat;  // single group keeps original order
    std::vector<int> inv(static_cast<size_t>(total_rows));
    int pos = 0;
    for (const auto& g : groups)
        for (int orig : g) inv[static_cast<size_t>(orig)] = pos++;
    return t.gather_rows(cat, inv);
}

struct LstmCell {
    ad::Value h;
    ad::Value c;
};

LstmCell lstm_step(ParamBinding& pb, const std::string& role, ad::Value x, LstmCell s,
                   int hidden) {
    ad::Tape& t = pb.tape();
    ad::Value pre = t.add_bias(
        t.add(t.matmul(x, pb.get(role, "wx")), t.matmul(s.h, pb.get(role, "wh"))),
        pb.get(role, "b"));
    ad::Value i = t.sigmoid(t.slice_cols(pre, 0, hidden));
    ad::Value f = t.sigmoid(t.slice_cols(pre, hidden, 2 * hidden));
    ad::Value g = t.tanh(t.slice_cols(pre, 2 * hidden, 3 * hidden));
    ad::Value o = t.sigmoid(t.slice_cols(pre, 3 * hidden, 4 * hidden));
    ad::Value c = t.add(t.mul(f, s.c), t.mul(i, g));
    ad::Value h = t.mul(o, t.tanh(c));
    return {h, c};
}

// Forward-only twin of lstm_step.
void lstm_step_fwd(const Array2& wx, const Array2& wh, const Array2& b, const Array2& x,
                   Array2& h, Array2& c) {
    const int hidden = h.cols;
    Array2 xw, hw, pre, tmp;
    kernels::matmul_nn(x, wx, xw);
    kernels::matmul_nn(h, wh, hw);
    kernels::add(xw, hw, tmp);
    kernels::add_row_broadcast(tmp, b, pre);
    Array2 hn(h.rows, hidden), cn(h.rows, hidden);
    for (int r = 0; r < h.rows; ++r) {
        for (int j = 0; j < hidden; ++j) {
            const double iv = 1.0 / (1.0 + std::exp(-pre.at(r, j)));
            const double fv = 1.0 / (1.0 + std::exp(-pre.at(r, hidden + j)));
            const double gv = std::tanh(pre.at(r, 2 * hidden + j));
            const double ov = 1.0 / (1.0 + std::exp(-pre.at(r, 3 * hidden + j)));
            const double cv = fv * c.at(r, j) + iv * gv;
            cn.at(r, j) = cv;
            hn.at(r, j) = ov * std::tanh(cv);
        }
    }
    h = std::move(hn);
    c = std::move(cn);
}

Array2 embed_rows_fwd(const Array2& table, const std::vector<int>& ids) {
    Array2 out(static_cast<int>(ids.size()), table.cols);
    for (size_t i = 0; i < ids.size(); ++i) {
        const double* src = table.row(ids[i]);
        std::copy(src, src + table.cols, out.row(static_cast<int>(i)));
    }
    return out;
}

Array2 affine_fwd(const Array2& x, const Array2& w, const Array2& b) {
    Array2 xw, out;
    kernels::matmul_nn(x, w, xw);
    kernels::add_row_broadcast(xw, b, out);
    return out;
}

}  // namespace

void ModelConfig::validate() const {
    if (image_dim < 1 || latent_dim < 1 || embed_dim < 1 || lstm_hidden < 1 || disc_hidden < 1)
        throw std::invalid_argument("model config: all dimensions must be positive");
    if (vocab_size < ATTR_BASE + 1)
        throw std::invalid_argument("model config: vocab_size must cover PAD, BOS, EOS and at "
                                    "least one attribute token");
    if (transformer_layers < 1)
        throw std::invalid_argument("model config: transformer_layers must be at least 1");
    if (max_seq_len < 3)
        throw std::invalid_argument("model config: max_seq_len must allow BOS, one token, EOS");
}

void ParamStore::add(std::string role, std::string name, Array2 value) {
    const std::string key = qualify(role, name);
    if (index_.count(key)) throw std::invalid_argument("param store: duplicate parameter " + key);
    index_.emplace(key, entries_.size());
    entries_.push_back(ParamEntry{std::move(role), std::move(name), std::move(value)});
}

Array2& ParamStore::at(const std::string& role, const std::string& name) {
    const auto it = index_.find(qualify(role, name));
    if (it == index_.end())
        throw std::invalid_argument("param store: unknown parameter " + qualify(role, name));
    return entries_[it->second].value;
}

const Array2& ParamStore::at(const std::string& role, const std::string& name) const {
    return const_cast<ParamStore*>(this)->at(role, name);
}

bool ParamStore::has(const std::string& role, const std::string& name) const {
    return index_.count(qualify(role, name)) > 0;
}

std::vector<std::pair<std::string, Array2*>> ParamStore::subset(
    const std::vector<std::string>& roles) {
    std::vector<std::pair<std::string, Array2*>> out;
    for (auto& e : entries_)
        if (std::find(roles.begin(), roles.end(), e.role) != roles.end())
            out.emplace_back(qualify(e.role, e.name), &e.value);
    if (out.empty()) throw std::invalid_argument("param store: no parameters in requested roles");
    return out;
}

ParamStore init_params(const ModelConfig& cfg, std::uint64_t seed,
                       bool with_domain_discriminators) {
    cfg.validate();
    ParamStore ps;
    Rng rng = make_rng(seed).derive(0x6d6f64656cULL);  // model-init stream

    auto glorot = [&rng](int rows, int cols) {
        Array2 w(rows, cols);
        const double lim = std::sqrt(6.0 / static_cast<double>(rows + cols));
        for (double& v : w.data) v = rng.uniform(-lim, lim);
        return w;
    };
    auto zeros = [](int rows, int cols) { return Array2(rows, cols, 0.0); };

    const int dz = cfg.latent_dim, e = cfg.embed_dim, h = cfg.lstm_hidden, v = cfg.vocab_size;

    ps.add("F", "w1", glorot(cfg.image_dim, dz));
    ps.add("F", "b1", zeros(1, dz));
    ps.add("F", "w2", glorot(dz, dz));
    ps.add("F", "b2", zeros(1, dz));

    ps.add("G", "embed", glorot(v, e));
    ps.add("G", "wx", glorot(e, 4 * h));
    ps.add("G", "wh", glorot(h, 4 * h));
    ps.add("G", "b", zeros(1, 4 * h));
    ps.add("G", "proj_w", glorot(h, dz));
    ps.add("G", "proj_b", zeros(1, dz));

    ps.add("H", "embed", glorot(v, e));
    ps.add("H", "h0_w", glorot(dz, h));
    ps.add("H", "h0_b", zeros(1, h));
    ps.add("H", "c0_w", glorot(dz, h));
    ps.add("H", "c0_b", zeros(1, h));
    ps.add("H", "wx", glorot(e, 4 * h));
    ps.add("H", "wh", glorot(h, 4 * h));
    ps.add("H", "b", zeros(1, 4 * h));
    ps.add("H", "out_w", glorot(h, v));
    ps.add("H", "out_b", zeros(1, v));

    for (const char* role : {"Tvc", "Tcv"}) {
        for (int layer = 1; layer <= cfg.transformer_layers; ++layer) {
            ps.add(role, "w" + std::to_string(layer), glorot(dz, dz));
            ps.add(role, "b" + std::to_string(layer), zeros(1, dz));
        }
    }

    ps.add("D", "w1", glorot(2 * dz, cfg.disc_hidden));
    ps.add("D", "b1", zeros(1, cfg.disc_hidden));
    ps.add("D", "w2", glorot(cfg.disc_hidden, cfg.disc_hidden));
    ps.add("D", "b2", zeros(1, cfg.disc_hidden));
    ps.add("D", "w3", glorot(cfg.disc_hidden, 1));
    ps.add("D", "b3", zeros(1, 1));

    if (with_domain_discriminators) {
        for (const char* prefix : {"dx", "dy"}) {
            const std::string p = prefix;
            ps.add("D", p + "_w1", glorot(dz, cfg.disc_hidden));
            ps.add("D", p + "_b1", zeros(1, cfg.disc_hidden));
            ps.add("D", p + "_w2", glorot(cfg.disc_hidden, cfg.disc_hidden));
            ps.add("D", p + "_b2", zeros(1, cfg.disc_hidden));
            ps.add("D", p + "_w3", glorot(cfg.disc_hidden, 1));
            ps.add("D", p + "_b3", zeros(1, 1));
        }
    }
    return ps;
}

ParamBinding::ParamBinding(ad::Tape& tape, const ParamStore& store,
                           std::vector<std::string> trainable_roles)
    : tape_(tape), store_(store), trainable_roles_(std::move(trainable_roles)) {}

bool ParamBinding::trainable(const std::string& role) const {
    return std::find(trainable_roles_.begin(), trainable_roles_.end(), role) !=
           trainable_roles_.end();
}

ad::Value ParamBinding::get(const std::string& role, const std::string& name) {
    const std::string key = qualify(role, name);
    const auto it = leaves_.find(key);
    if (it != leaves_.end()) return it->second;
    const Array2& v = store_.at(role, name);
    const ad::Value leaf = trainable(role) ? tape_.param(v, key) : tape_.constant(v, key);
    leaves_.emplace(key, leaf);
    return leaf;
}

GradMap ParamBinding::harvest() const {
    GradMap grads;
    for (const auto& e : store_.entries()) {
        if (!trainable(e.role)) continue;
        const std::string key = qualify(e.role, e.name);
        const auto it = leaves_.find(key);
        if (it != leaves_.end())
            grads.emplace(key, tape_.grad_or_zero(it->second));
        else
            grads.emplace(key, Array2(e.value.rows, e.value.cols, 0.0));
    }
    return grads;
}

ad::Value encode_images(ParamBinding& pb, const ModelConfig& cfg, const Array2& images) {
    if (images.cols != cfg.image_dim)
        throw std::invalid_argument("encode_images: input has " + std::to_string(images.cols) +
                                    " features, expected image_dim " +
                                    std::to_string(cfg.image_dim));
    ad::Tape& t = pb.tape();
    ad::Value x = t.constant(images, "images");
    ad::Value h1 = t.relu(t.add_bias(t.matmul(x, pb.get("F", "w1")), pb.get("F", "b1")));
    return t.add_bias(t.matmul(h1, pb.get("F", "w2")), pb.get("F", "b2"));
}

namespace {

// Runs the caption-encoder LSTM over one equal-length group of captions and
// projects the final hidden state. Rows follow the group order.
ad::Value encode_caption_group(ParamBinding& pb, const ModelConfig& cfg,
                               const std::vector<TokenSeq>& captions,
                               const std::vector<int>& group) {
    ad::Tape& t = pb.tape();
    const int bg = static_cast<int>(group.size());
    const size_t len = captions[static_cast<size_t>(group[0])].size();
    ad::Value embed = pb.get("G", "embed");
    LstmCell s{t.constant(Array2(bg, cfg.lstm_hidden, 0.0), "h0"),
               t.constant(Array2(bg, cfg.lstm_hidden, 0.0), "c0")};
    for (size_t step = 0; step < len; ++step) {
        std::vector<int> ids(group.size());
        for (size_t r = 0; r < group.size(); ++r)
            ids[r] = captions[static_cast<size_t>(group[r])][step];
        s = lstm_step(pb, "G", t.gather_rows(embed, ids), s, cfg.lstm_hidden);
    }
    return t.add_bias(t.matmul(s.h, pb.get("G", "proj_w")), pb.get("G", "proj_b"));
}

}  // namespace

ad::Value encode_captions(ParamBinding& pb, const ModelConfig& cfg,
                          const std::vector<TokenSeq>& captions) {
    if (captions.empty()) throw std::invalid_argument("encode_captions: empty batch");
    for (const auto& y : captions) validate_caption(cfg, y, "encode_captions");
    const auto groups = group_by_length(captions);
    std::vector<ad::Value> blocks;
    for (const auto& g : groups) blocks.push_back(encode_caption_group(pb, cfg, captions, g));
    return stitch_groups(pb.tape(), blocks, groups, static_cast<int>(captions.size()));
}

namespace {

// Teacher-forced decode over one equal-length group. Returns the per-step
// log-probability matrices (each bg x vocab), len-1 of them.
std::vector<ad::Value> decode_group(ParamBinding& pb, const ModelConfig& cfg, ad::Value zx_group,
                                    const std::vector<TokenSeq>& targets,
                                    const std::vector<int>& group) {
    ad::Tape& t = pb.tape();
    const size_t len = targets[static_cast<size_t>(group[0])].size();
    ad::Value embed = pb.get("H", "embed");
    LstmCell s{t.add_bias(t.matmul(zx_group, pb.get("H", "h0_w")), pb.get("H", "h0_b")),
               t.add_bias(t.matmul(zx_group, pb.get("H", "c0_w")), pb.get("H", "c0_b"))};
    std::vector<ad::Value> logprobs;
    for (size_t step = 0; step + 1 < len; ++step) {
        std::vector<int> ids(group.size());
        for (size_t r = 0; r < group.size(); ++r)
            ids[r] = targets[static_cast<size_t>(group[r])][step];
        s = lstm_step(pb, "H", t.gather_rows(embed, ids), s, cfg.lstm_hidden);
        ad::Value logits = t.add_bias(t.matmul(s.h, pb.get("H", "out_w")), pb.get("H", "out_b"));
        logprobs.push_back(t.log_softmax_rows(logits));
    }
    return logprobs;
}

}  // namespace

ad::Value decode_teacher_forced(ParamBinding& pb, const ModelConfig& cfg, ad::Value zx,
                                const TokenSeq& y) {
    validate_caption(cfg, y, "decode_teacher_forced");
    if (pb.tape().val(zx).rows != 1 || pb.tape().val(zx).cols != cfg.latent_dim)
        throw std::invalid_argument("decode_teacher_forced: latent must be 1 x latent_dim");
    const auto steps = decode_group(pb, cfg, zx, {y}, {0});
    ad::Value out = steps[0];
    for (size_t i = 1; i < steps.size(); ++i) out = pb.tape().concat_rows(out, steps[i]);
    return out;
}

ad::Value decode_gold_logprob(ParamBinding& pb, const ModelConfig& cfg, ad::Value zx_batch,
                              const std::vector<TokenSeq>& targets,
                              std::vector<int>* steps_out) {
    ad::Tape& t = pb.tape();
    if (targets.empty()) throw std::invalid_argument("decode_gold_logprob: empty batch");
    if (t.val(zx_batch).rows != static_cast<int>(targets.size()))
        throw std::invalid_argument("decode_gold_logprob: latent rows " +
                                    std::to_string(t.val(zx_batch).rows) + " vs " +
                                    std::to_string(targets.size()) + " targets");
    for (const auto& y : targets) validate_caption(cfg, y, "decode_gold_logprob");
    if (steps_out) {
        steps_out->clear();
        for (const auto& y : targets) {
            int real = 0;
            for (size_t s = 1; s < y.size(); ++s)
                if (y[s] != PAD) ++real;
            steps_out->push_back(real);
        }
    }
    const auto groups = group_by_length(targets);
    std::vector<ad::Value> blocks;
    for (const auto& g : groups) {
        ad::Value zx_group = groups.size() == 1 ? zx_batch : t.gather_rows(zx_batch, g);
        const auto logprobs = decode_group(pb, cfg, zx_group, targets, g);
        ad::Value total;  // (bg x 1) running sum of gold log-probs
        for (size_t step = 0; step < logprobs.size(); ++step) {
            std::vector<int> gold(g.size());
            bool any_pad = false;
            for (size_t r = 0; r < g.size(); ++r) {
                gold[r] = targets[static_cast<size_t>(g[r])][step + 1];
                any_pad = any_pad || gold[r] == PAD;
            }
            ad::Value picked = t.pick_entries(logprobs[step], gold);
            if (any_pad) {
                Array2 mask(static_cast<int>(g.size()), 1);
                for (size_t r = 0; r < g.size(); ++r) mask.at(static_cast<int>(r), 0) =
                    gold[r] == PAD ? 0.0 : 1.0;
                picked = t.mul(picked, t.constant(mask, "pad_mask"));
            }
            total = step == 0 ? picked : t.add(total, picked);
        }
        blocks.push_back(total);
    }
    return stitch_groups(t, blocks, groups, static_cast<int>(targets.size()));
}

ad::Value transform_feature(ParamBinding& pb, const ModelConfig& cfg, bool v_to_c, ad::Value z) {
    ad::Tape& t = pb.tape();
    if (t.val(z).cols != cfg.latent_dim)
        throw std::invalid_argument("transform_feature: input has " +
                                    std::to_string(t.val(z).cols) + " cols, expected latent_dim " +
                                    std::to_string(cfg.latent_dim));
    const std::string role = v_to_c ? "Tvc" : "Tcv";
    ad::Value h = z;
    for (int layer = 1; layer <= cfg.transformer_layers; ++layer) {
        const std::string idx = std::to_string(layer);
        h = t.add_bias(t.matmul(h, pb.get(role, "w" + idx)), pb.get(role, "b" + idx));
        if (layer < cfg.transformer_layers) h = t.relu(h);
    }
    return h;
}

ad::Value discriminate_logit(ParamBinding& pb, const ModelConfig& cfg, ad::Value zx,
                             ad::Value zy) {
    ad::Tape& t = pb.tape();
    if (t.val(zx).cols != cfg.latent_dim || t.val(zy).cols != cfg.latent_dim)
        throw std::invalid_argument("discriminate: latents must have latent_dim cols");
    ad::Value h = t.concat_cols(zx, zy);
    h = t.relu(t.add_bias(t.matmul(h, pb.get("D", "w1")), pb.get("D", "b1")));
    h = t.relu(t.add_bias(t.matmul(h, pb.get("D", "w2")), pb.get("D", "b2")));
    return t.add_bias(t.matmul(h, pb.get("D", "w3")), pb.get("D", "b3"));
}

ad::Value discriminate(ParamBinding& pb, const ModelConfig& cfg, ad::Value zx, ad::Value zy) {
    return pb.tape().sigmoid(discriminate_logit(pb, cfg, zx, zy));
}

ad::Value discriminate_domain_logit(ParamBinding& pb, const ModelConfig& cfg, char domain,
                                    ad::Value z) {
    if (domain != 'x' && domain != 'y')
        throw std::invalid_argument("discriminate_domain: domain must be 'x' or 'y'");
    ad::Tape& t = pb.tape();
    if (t.val(z).cols != cfg.latent_dim)
        throw std::invalid_argument("discriminate_domain: latents must have latent_dim cols");
    const std::string p = domain == 'x' ? "dx" : "dy";
    ad::Value h = z;
    h = t.relu(t.add_bias(t.matmul(h, pb.get("D", p + "_w1")), pb.get("D", p + "_b1")));
    h = t.relu(t.add_bias(t.matmul(h, pb.get("D", p + "_w2")), pb.get("D", p + "_b2")));
    return t.add_bias(t.matmul(h, pb.get("D", p + "_w3")), pb.get("D", p + "_b3"));
}

ad::Value discriminate_domain(ParamBinding& pb, const ModelConfig& cfg, char domain,
                              ad::Value z) {
    return pb.tape().sigmoid(discriminate_domain_logit(pb, cfg, domain, z));
}

// ---- forward-only evaluators ----

Array2 encode_images_fwd(const ParamStore& ps, const ModelConfig& cfg, const Array2& images) {
    if (images.cols != cfg.image_dim)
        throw std::invalid_argument("encode_images_fwd: wrong feature width");
    Array2 h = affine_fwd(images, ps.at("F", "w1"), ps.at("F", "b1"));
    Array2 r;
    kernels::relu(h, r);
    return affine_fwd(r, ps.at("F", "w2"), ps.at("F", "b2"));
}

Array2 encode_captions_fwd(const ParamStore& ps, const ModelConfig& cfg,
                           const std::vector<TokenSeq>& captions) {
    if (captions.empty()) throw std::invalid_argument("encode_captions_fwd: empty batch");
    for (const auto& y : captions) validate_caption(cfg, y, "encode_captions_fwd");
    const auto groups = group_by_length(captions);
    Array2 out(static_cast<int>(captions.size()), cfg.latent_dim);
    const Array2& embed = ps.at("G", "embed");
    for (const auto& g : groups) {
        const int bg = static_cast<int>(g.size());
        const size_t len = captions[static_cast<size_t>(g[0])].size();
        Array2 h(bg, cfg.lstm_hidden, 0.0), c(bg, cfg.lstm_hidden, 0.0);
        for (size_t step = 0; step < len; ++step) {
            std::vector<int> ids(g.size());
            for (size_t r = 0; r < g.size(); ++r) ids[r] = captions[static_cast<size_t>(g[r])][step];
            lstm_step_fwd(ps.at("G", "wx"), ps.at("G", "wh"), ps.at("G", "b"),
                          embed_rows_fwd(embed, ids), h, c);
        }
        Array2 z = affine_fwd(h, ps.at("G", "proj_w"), ps.at("G", "proj_b"));
        for (size_t r = 0; r < g.size(); ++r)
            std::copy(z.row(static_cast<int>(r)), z.row(static_cast<int>(r)) + z.cols,
                      out.row(g[r]));
    }
    return out;
}

Array2 transform_feature_fwd(const ParamStore& ps, const ModelConfig& cfg, bool v_to_c,
                             const Array2& z) {
    const std::string role = v_to_c ? "Tvc" : "Tcv";
    Array2 h = z;
    for (int layer = 1; layer <= cfg.transformer_layers; ++layer) {
        const std::string idx = std::to_string(layer);
        h = affine_fwd(h, ps.at(role, "w" + idx), ps.at(role, "b" + idx));
        if (layer < cfg.transformer_layers) {
            Array2 r;
            kernels::relu(h, r);
            h = std::move(r);
        }
    }
    return h;
}

namespace {

Array2 disc_mlp_fwd(const ParamStore& ps, const std::string& p, const Array2& input) {
    Array2 h = affine_fwd(input, ps.at("D", p + "w1"), ps.at("D", p + "b1"));
    Array2 r;
    kernels::relu(h, r);
    h = affine_fwd(r, ps.at("D", p + "w2"), ps.at("D", p + "b2"));
    kernels::relu(h, r);
    h = affine_fwd(r, ps.at("D", p + "w3"), ps.at("D", p + "b3"));
    Array2 s;
    kernels::sigmoid(h, s);
    return s;
}

}  // namespace

Array2 discriminate_fwd(const ParamStore& ps, const ModelConfig& cfg, const Array2& zx,
                        const Array2& zy) {
    if (zx.rows != zy.rows || zx.cols != cfg.latent_dim || zy.cols != cfg.latent_dim)
        throw std::invalid_argument("discriminate_fwd: latent shapes " + zx.shape_str() + " vs " +
                                    zy.shape_str());
    Array2 cat(zx.rows, 2 * cfg.latent_dim);
    for (int i = 0; i < zx.rows; ++i) {
        std::copy(zx.row(i), zx.row(i) + zx.cols, cat.row(i));
        std::copy(zy.row(i), zy.row(i) + zy.cols, cat.row(i) + zx.cols);
    }
    return disc_mlp_fwd(ps, "", cat);
}

Array2 discriminate_all_pairs_fwd(const ParamStore& ps, const ModelConfig& cfg,
                                  const Array2& anchors, const Array2& candidates,
                                  bool anchor_is_image) {
    const int na = anchors.rows, nc = candidates.rows, dz = cfg.latent_dim;
    if (anchors.cols != dz || candidates.cols != dz)
        throw std::invalid_argument("discriminate_all_pairs_fwd: latent width mismatch");
    Array2 cat(na * nc, 2 * dz);
    for (int i = 0; i < na; ++i) {
        for (int j = 0; j < nc; ++j) {
            double* dst = cat.row(i * nc + j);
            const double* img = anchor_is_image ? anchors.row(i) : candidates.row(j);
            const double* cap = anchor_is_image ? candidates.row(j) : anchors.row(i);
            std::copy(img, img + dz, dst);
            std::copy(cap, cap + dz, dst + dz);
        }
    }
    Array2 flat = disc_mlp_fwd(ps, "", cat);  // (na*nc x 1)
    Array2 out(na, nc);
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nc; ++j) out.at(i, j) = flat.at(i * nc + j, 0);
    return out;
}

DecoderState decoder_init_fwd(const ParamStore& ps, const ModelConfig& cfg,
                              const Array2& zx_row) {
    if (zx_row.rows != 1 || zx_row.cols != cfg.latent_dim)
        throw std::invalid_argument("decoder_init_fwd: latent must be 1 x latent_dim");
    DecoderState s;
    s.h = affine_fwd(zx_row, ps.at("H", "h0_w"), ps.at("H", "h0_b"));
    s.c = affine_fwd(zx_row, ps.at("H", "c0_w"), ps.at("H", "c0_b"));
    return s;
}

Array2 decoder_step_fwd(const ParamStore& ps, const ModelConfig& cfg, DecoderState& state,
                        int token) {
    if (token < 0 || token >= cfg.vocab_size)
        throw std::invalid_argument("decoder_step_fwd: token id out of vocab");
    const Array2 x = embed_rows_fwd(ps.at("H", "embed"), {token});
    lstm_step_fwd(ps.at("H", "wx"), ps.at("H", "wh"), ps.at("H", "b"), x, state.h, state.c);
    Array2 logits = affine_fwd(state.h, ps.at("H", "out_w"), ps.at("H", "out_b"));
    Array2 lp;
    kernels::log_softmax_rows(logits, lp);
    return lp;
}

}  // namespace sscap

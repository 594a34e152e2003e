#include "sscap/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <stdexcept>

namespace sscap {

namespace {

struct Beam {
    TokenSeq seq;  // starts at BOS
    double logprob = 0.0;
    DecoderState state;
    bool done = false;
};

bool beam_order(const Beam& a, const Beam& b) {
    if (a.logprob != b.logprob) return a.logprob > b.logprob;
    return a.seq < b.seq;
}

void append_double(std::string& out, const char* key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += '"';
    out += key;
    out += "\":";
    out += buf;
}

}  // namespace

TokenSeq decode(const ParamStore& ps, const ModelConfig& cfg, const Array2& zx_row,
                int beam_size) {
    if (beam_size < 1) throw std::invalid_argument("decode: beam_size must be at least 1");
    if (zx_row.rows != 1) throw std::invalid_argument("decode: expected a single latent row");

    std::vector<Beam> beams(1);
    beams[0].seq = {BOS};
    beams[0].state = decoder_init_fwd(ps, cfg, zx_row);

    while (true) {
        bool any_live = false;
        std::vector<Beam> candidates;
        for (const Beam& b : beams) {
            if (b.done) {
                candidates.push_back(b);
                continue;
            }
            any_live = true;
            Beam advanced = b;
            const Array2 logprobs = decoder_step_fwd(ps, cfg, advanced.state, b.seq.back());
            for (int t = 0; t < cfg.vocab_size; ++t) {
                Beam next = advanced;
                next.seq.push_back(t);
                next.logprob += logprobs.at(0, t);
                next.done = t == EOS || static_cast<int>(next.seq.size()) >= cfg.max_seq_len;
                candidates.push_back(std::move(next));
            }
        }
        if (!any_live) break;
        std::sort(candidates.begin(), candidates.end(), beam_order);
        if (static_cast<int>(candidates.size()) > beam_size) candidates.resize(beam_size);
        beams = std::move(candidates);
    }
    return beams.front().seq;
}

double sequence_logprob(const ParamStore& ps, const ModelConfig& cfg, const Array2& zx_row,
                        const TokenSeq& seq) {
    if (zx_row.rows != 1)
        throw std::invalid_argument("sequence_logprob: expected a single latent row");
    if (seq.empty() || seq.front() != BOS)
        throw std::invalid_argument("sequence_logprob: sequence must start with BOS");
    if (seq.size() < 2)
        throw std::invalid_argument("sequence_logprob: nothing to score after BOS");
    DecoderState state = decoder_init_fwd(ps, cfg, zx_row);
    double total = 0.0;
    for (size_t i = 1; i < seq.size(); ++i) {
        const Array2 logprobs = decoder_step_fwd(ps, cfg, state, seq[i - 1]);
        if (seq[i] < 0 || seq[i] >= cfg.vocab_size)
            throw std::invalid_argument("sequence_logprob: token id out of range");
        total += logprobs.at(0, seq[i]);
    }
    return total;
}

TokenSeq strip_specials(const TokenSeq& seq) {
    TokenSeq out;
    for (int t : seq)
        if (t != PAD && t != BOS && t != EOS) out.push_back(t);
    return out;
}

double bleu(const std::vector<TokenSeq>& candidates,
            const std::vector<std::vector<TokenSeq>>& references, int max_n) {
    if (max_n < 1) throw std::invalid_argument("bleu: max_n must be at least 1");
    if (candidates.size() != references.size())
        throw std::invalid_argument("bleu: need one reference list per candidate");
    if (candidates.empty()) return 0.0;

    long cand_len = 0;
    long ref_len = 0;
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (references[i].empty())
            throw std::invalid_argument("bleu: candidate without references");
        const long lc = static_cast<long>(candidates[i].size());
        cand_len += lc;
        long best = static_cast<long>(references[i][0].size());
        for (const TokenSeq& r : references[i]) {
            const long lr = static_cast<long>(r.size());
            const long d_new = std::labs(lr - lc);
            const long d_old = std::labs(best - lc);
            if (d_new < d_old || (d_new == d_old && lr < best)) best = lr;
        }
        ref_len += best;
    }
    if (cand_len == 0) return 0.0;

    double log_precisions = 0.0;
    for (int n = 1; n <= max_n; ++n) {
        long matched = 0;
        long total = 0;
        for (size_t i = 0; i < candidates.size(); ++i) {
            const TokenSeq& c = candidates[i];
            const long lc = static_cast<long>(c.size());
            if (lc < n) continue;
            total += lc - n + 1;

            std::map<TokenSeq, long> cand_counts;
            for (long s = 0; s + n <= lc; ++s)
                ++cand_counts[TokenSeq(c.begin() + s, c.begin() + s + n)];

            std::map<TokenSeq, long> ref_max;
            for (const TokenSeq& r : references[i]) {
                std::map<TokenSeq, long> counts;
                for (long s = 0; s + n <= static_cast<long>(r.size()); ++s)
                    ++counts[TokenSeq(r.begin() + s, r.begin() + s + n)];
                for (const auto& [gram, cnt] : counts) {
                    long& cur = ref_max[gram];
                    cur = std::max(cur, cnt);
                }
            }
            for (const auto& [gram, cnt] : cand_counts) {
                const auto it = ref_max.find(gram);
                if (it != ref_max.end()) matched += std::min(cnt, it->second);
            }
        }
        if (total == 0 || matched == 0) return 0.0;
        log_precisions +=
            std::log(static_cast<double>(matched) / static_cast<double>(total)) / max_n;
    }

    const double bp = cand_len > ref_len
                          ? 1.0
                          : std::exp(1.0 - static_cast<double>(ref_len) /
                                               static_cast<double>(cand_len));
    return bp * std::exp(log_precisions);
}

double token_f1(const std::vector<TokenSeq>& predicted, const std::vector<TokenSeq>& gold) {
    if (predicted.size() != gold.size())
        throw std::invalid_argument("token_f1: prediction and gold counts differ");
    if (predicted.empty()) throw std::invalid_argument("token_f1: empty corpus");
    double sum = 0.0;
    for (size_t i = 0; i < predicted.size(); ++i) {
        const std::set<int> p(predicted[i].begin(), predicted[i].end());
        const std::set<int> g(gold[i].begin(), gold[i].end());
        if (p.empty() && g.empty()) {
            sum += 1.0;
            continue;
        }
        long inter = 0;
        for (int t : p) inter += g.count(t);
        if (inter == 0) continue;
        const double prec = static_cast<double>(inter) / static_cast<double>(p.size());
        const double rec = static_cast<double>(inter) / static_cast<double>(g.size());
        sum += 2.0 * prec * rec / (prec + rec);
    }
    return sum / static_cast<double>(predicted.size());
}

std::pair<double, double> pseudo_label_precision(
    const std::vector<PseudoPair>& pairs, const std::unordered_map<int, int>& concept_of) {
    long hits_x = 0, n_x = 0, hits_y = 0, n_y = 0;
    for (const PseudoPair& p : pairs) {
        const auto a = concept_of.find(p.anchor_id);
        const auto r = concept_of.find(p.retrieved_id);
        if (a == concept_of.end() || r == concept_of.end())
            throw std::invalid_argument("pseudo_label_precision: unknown sample id " +
                                        std::to_string(a == concept_of.end() ? p.anchor_id
                                                                             : p.retrieved_id));
        const bool hit = a->second == r->second;
        if (p.direction == 'x') {
            ++n_x;
            hits_x += hit;
        } else {
            ++n_y;
            hits_y += hit;
        }
    }
    const double px = n_x ? static_cast<double>(hits_x) / static_cast<double>(n_x) : NAN;
    const double py = n_y ? static_cast<double>(hits_y) / static_cast<double>(n_y) : NAN;
    return {px, py};
}

MetricsReport evaluate(const ParamStore& ps, const ModelConfig& cfg,
                       const std::vector<Sample>& test, int beam_size) {
    if (test.empty()) throw std::invalid_argument("evaluate: empty test split");

    std::unordered_map<int, std::vector<TokenSeq>> refs_by_concept;
    for (const Sample& s : test)
        if (s.concept_id >= 0) refs_by_concept[s.concept_id].push_back(strip_specials(s.caption));

    std::vector<TokenSeq> hyps, golds;
    std::vector<std::vector<TokenSeq>> refs;
    hyps.reserve(test.size());
    for (const Sample& s : test) {
        Array2 img(1, static_cast<int>(s.image.size()), s.image);
        const Array2 z = encode_images_fwd(ps, cfg, img);
        hyps.push_back(strip_specials(decode(ps, cfg, z, beam_size)));
        golds.push_back(strip_specials(s.caption));
        if (s.concept_id >= 0)
            refs.push_back(refs_by_concept.at(s.concept_id));
        else
            refs.push_back({golds.back()});
    }

    MetricsReport m;
    m.bleu1 = bleu(hyps, refs, 1);
    m.bleu2 = bleu(hyps, refs, 2);
    m.bleu3 = bleu(hyps, refs, 3);
    m.bleu4 = bleu(hyps, refs, 4);
    m.token_f1 = token_f1(hyps, golds);
    m.n_test = static_cast<int>(test.size());
    return m;
}

std::string MetricsReport::to_json() const {
    std::string out = "{";
    append_double(out, "bleu1", bleu1);
    out += ',';
    append_double(out, "bleu2", bleu2);
    out += ',';
    append_double(out, "bleu3", bleu3);
    out += ',';
    append_double(out, "bleu4", bleu4);
    out += ',';
    append_double(out, "token_f1", token_f1);
    if (!std::isnan(pseudo_precision_x)) {
        out += ',';
        append_double(out, "pseudo_precision_x", pseudo_precision_x);
    }
    if (!std::isnan(pseudo_precision_y)) {
        out += ',';
        append_double(out, "pseudo_precision_y", pseudo_precision_y);
    }
    out += ",\"n_test\":" + std::to_string(n_test) + "}";
    return out;
}

}  // namespace sscap

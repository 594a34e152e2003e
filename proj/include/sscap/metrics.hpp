#pragma once

// Evaluation: beam-search decoding, corpus BLEU, attribute-token F1, and
// pseudo-label precision against hidden concept ids.

#include <cmath>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sscap/dataset.hpp"
#include "sscap/model.hpp"
#include "sscap/pseudo.hpp"

namespace sscap {

struct MetricsReport {
    double bleu1 = 0.0;
    double bleu2 = 0.0;
    double bleu3 = 0.0;
    double bleu4 = 0.0;
    double token_f1 = 0.0;
    // NAN marks "not measured" (no assignments or no concept ids).
    double pseudo_precision_x = NAN;
    double pseudo_precision_y = NAN;
    int n_test = 0;

    std::string to_json() const;
};

// Beam search from one latent row. Returns the completed sequence (BOS ...
// EOS, or cut at max_seq_len) with the highest cumulative log-probability;
// exact ties resolve to the lexicographically smallest token sequence.
TokenSeq decode(const ParamStore& ps, const ModelConfig& cfg, const Array2& zx_row, int beam_size);

// Forward-only log-probability of a full sequence under the decoder. The
// sequence must start with BOS; every following token is scored.
double sequence_logprob(const ParamStore& ps, const ModelConfig& cfg, const Array2& zx_row,
                        const TokenSeq& seq);

// Removes PAD/BOS/EOS, keeping attribute tokens in order.
TokenSeq strip_specials(const TokenSeq& seq);

// Corpus BLEU-n over stripped sequences: clipped n-gram precision with
// geometric mean over orders 1..max_n and the closest-reference-length
// brevity penalty (length ties favour the shorter reference). Any zero
// precision, empty candidate corpus, or zero denominator gives 0.
double bleu(const std::vector<TokenSeq>& candidates,
            const std::vector<std::vector<TokenSeq>>& references, int max_n);

// Mean per-item F1 between predicted and gold attribute-token sets.
double token_f1(const std::vector<TokenSeq>& predicted, const std::vector<TokenSeq>& gold);

// Fraction of assignments whose anchor and retrieved sample share a concept,
// split by direction ('x' first, 'y' second). NAN when a direction is empty.
std::pair<double, double> pseudo_label_precision(
    const std::vector<PseudoPair>& pairs, const std::unordered_map<int, int>& concept_of);

// Decodes every test image with beam search and scores it against all
// same-concept test captions (the sample's own caption when concepts are
// unknown). Pseudo precisions are left unset; the trainer fills them from
// its assignment window.
MetricsReport evaluate(const ParamStore& ps, const ModelConfig& cfg,
                       const std::vector<Sample>& test, int beam_size);

}  // namespace sscap

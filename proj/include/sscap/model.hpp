#pragma once

// The five networks: image encoder F, caption encoder G, caption decoder H,
// feature transformers Tvc/Tcv, and the pair discriminator D. Each network
// exists twice: a tape build (differentiable, via ParamBinding) and a
// forward-only evaluator over plain arrays (pool scoring, beam decode).

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sscap/adam.hpp"
#include "sscap/array.hpp"
#include "sscap/tape.hpp"
#include "sscap/tokens.hpp"

namespace sscap {

struct ModelConfig {
    int image_dim = 32;
    int latent_dim = 64;
    int vocab_size = 0;  // set from the dataset
    int embed_dim = 32;
    int lstm_hidden = 64;
    int transformer_layers = 4;
    int disc_hidden = 64;
    int max_seq_len = 10;

    void validate() const;
};

struct ParamEntry {
    std::string role;  // one of F, G, H, Tvc, Tcv, D
    std::string name;
    Array2 value;
};

// Ordered, name-addressable parameter container. Iteration order is creation
// order, which keeps checkpoints and optimizer walks deterministic.
class ParamStore {
   public:
    void add(std::string role, std::string name, Array2 value);
    Array2& at(const std::string& role, const std::string& name);
    const Array2& at(const std::string& role, const std::string& name) const;
    bool has(const std::string& role, const std::string& name) const;

    // Mutable views over whole roles, for the optimizer. Keys are "role.name".
    std::vector<std::pair<std::string, Array2*>> subset(const std::vector<std::string>& roles);

    const std::vector<ParamEntry>& entries() const { return entries_; }
    std::vector<ParamEntry>& entries_mut() { return entries_; }

   private:
    std::vector<ParamEntry> entries_;
    std::unordered_map<std::string, size_t> index_;  // "role.name" -> position
};

// Glorot-uniform weights, zero biases. with_domain_discriminators adds the
// two single-domain discriminators used by the cycle-consistency baseline
// (names dx_*/dy_* under role D).
ParamStore init_params(const ModelConfig& cfg, std::uint64_t seed,
                       bool with_domain_discriminators = false);

// Resolves store parameters as tape leaves, memoized per (role, name), so a
// parameter used in several places accumulates one gradient. Parameters of
// trainable roles become tracked leaves; everything else enters the graph as
// a constant and receives exactly zero gradient.
class ParamBinding {
   public:
    ParamBinding(ad::Tape& tape, const ParamStore& store, std::vector<std::string> trainable_roles);

    ad::Value get(const std::string& role, const std::string& name);
    bool trainable(const std::string& role) const;

    // After Tape::backward: gradients for every parameter of the trainable
    // roles, keyed "role.name"; zero arrays for parameters off the loss path.
    GradMap harvest() const;

    ad::Tape& tape() { return tape_; }
    const ModelConfig* config = nullptr;  // optional, set by callers that need it

   private:
    ad::Tape& tape_;
    const ParamStore& store_;
    std::vector<std::string> trainable_roles_;
    std::unordered_map<std::string, ad::Value> leaves_;
};

// ---- tape builds ----

// images: (B x image_dim) -> latents (B x latent_dim)
ad::Value encode_images(ParamBinding& pb, const ModelConfig& cfg, const Array2& images);

// captions -> latents (B x latent_dim); ragged lengths are grouped internally
ad::Value encode_captions(ParamBinding& pb, const ModelConfig& cfg,
                          const std::vector<TokenSeq>& captions);

// Teacher-forced decode of one caption from one latent row; returns the
// (len(y)-1 x vocab) matrix of per-step log-probabilities.
ad::Value decode_teacher_forced(ParamBinding& pb, const ModelConfig& cfg, ad::Value zx,
                                const TokenSeq& y);

// Batched gold log-likelihoods: column (B x 1) of per-sample summed gold
// log-probs. steps_out (optional) receives each sample's prediction count.
ad::Value decode_gold_logprob(ParamBinding& pb, const ModelConfig& cfg, ad::Value zx_batch,
                              const std::vector<TokenSeq>& targets,
                              std::vector<int>* steps_out = nullptr);

// z: (B x latent_dim) through the 4-layer MLP of the requested direction.
ad::Value transform_feature(ParamBinding& pb, const ModelConfig& cfg, bool v_to_c, ad::Value z);

// Pair scores in (0,1), shape (B x 1). The pair is ordered: image slot first.
ad::Value discriminate(ParamBinding& pb, const ModelConfig& cfg, ad::Value zx, ad::Value zy);
// Pre-sigmoid score; the adversarial losses evaluate log D and log(1 - D) as
// log_sigmoid of (+/-) logit so saturation never produces an infinity.
ad::Value discriminate_logit(ParamBinding& pb, const ModelConfig& cfg, ad::Value zx, ad::Value zy);

// Single-domain discriminators of the cycle baseline ('x' or 'y').
ad::Value discriminate_domain(ParamBinding& pb, const ModelConfig& cfg, char domain, ad::Value z);
ad::Value discriminate_domain_logit(ParamBinding& pb, const ModelConfig& cfg, char domain,
                                    ad::Value z);

// ---- forward-only evaluators (no tape, shared read-only params) ----

Array2 encode_images_fwd(const ParamStore& ps, const ModelConfig& cfg, const Array2& images);
Array2 encode_captions_fwd(const ParamStore& ps, const ModelConfig& cfg,
                           const std::vector<TokenSeq>& captions);
Array2 transform_feature_fwd(const ParamStore& ps, const ModelConfig& cfg, bool v_to_c,
                             const Array2& z);
Array2 discriminate_fwd(const ParamStore& ps, const ModelConfig& cfg, const Array2& zx,
                        const Array2& zy);

// All-pairs scores: (anchors.rows x candidates.rows). anchor_is_image picks
// which side of the pair the anchor occupies.
Array2 discriminate_all_pairs_fwd(const ParamStore& ps, const ModelConfig& cfg,
                                  const Array2& anchors, const Array2& candidates,
                                  bool anchor_is_image);

// Stepwise decoder interface for beam search.
struct DecoderState {
    Array2 h;  // (1 x lstm_hidden)
    Array2 c;
};

DecoderState decoder_init_fwd(const ParamStore& ps, const ModelConfig& cfg, const Array2& zx_row);
// Feeds one token; returns the log-probability row (1 x vocab) for the next
// token and advances the state.
Array2 decoder_step_fwd(const ParamStore& ps, const ModelConfig& cfg, DecoderState& state,
                        int token);

}  // namespace sscap

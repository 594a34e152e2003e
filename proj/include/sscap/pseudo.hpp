#pragma once

// Discriminator-driven retrieval: every unpaired sample gets the counterpart
// from a candidate pool that the pair discriminator scores highest, and the
// score itself becomes the confidence weight alpha.

#include <string>
#include <vector>

#include "sscap/dataset.hpp"
#include "sscap/model.hpp"
#include "sscap/rng.hpp"

namespace sscap {

struct CandidatePool {
    char source = 'y';            // 'x' = unpaired images, 'y' = unpaired captions
    double fraction = 1.0;
    std::vector<int> sample_ids;  // pool membership, dataset ids
    Array2 latents;               // one row per entry, current encoder parameters
};

struct PseudoPair {
    int anchor_id = -1;
    int retrieved_id = -1;
    char direction = 'x';  // 'x': image anchor, caption retrieved; 'y': the mirror
    double alpha = 0.0;
};

// Uniform subset without replacement of size max(1, round(fraction * |source|)),
// with latents encoded once. source_kind 'x' encodes images, 'y' captions.
CandidatePool sample_pool(const std::vector<Sample>& source, char source_kind, double fraction,
                          const ParamStore& ps, const ModelConfig& cfg, Rng& rng);

// Index of the best score; ties go to the lowest sample id. Exposed for tests.
int pick_best(const std::vector<double>& scores, const std::vector<int>& sample_ids);

// Batched assignment: one PseudoPair per anchor row. anchor_latents come from
// the matching encoder; the pool must hold the opposite modality.
std::vector<PseudoPair> assign_pseudo_batch(const Array2& anchor_latents,
                                            const std::vector<int>& anchor_ids, char direction,
                                            const CandidatePool& pool, const ParamStore& ps,
                                            const ModelConfig& cfg);

// Single-anchor forms used by tests and tools.
PseudoPair assign_pseudo_caption(const Sample& image_anchor, const CandidatePool& pool,
                                 const ParamStore& ps, const ModelConfig& cfg);
PseudoPair assign_pseudo_image(const Sample& caption_anchor, const CandidatePool& pool,
                               const ParamStore& ps, const ModelConfig& cfg);

// One JSONL line per assignment.
std::string assignment_jsonl(long iteration, const PseudoPair& pair);

}  // namespace sscap

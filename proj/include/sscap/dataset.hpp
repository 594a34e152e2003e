#pragma once

// Synthetic scarcely-paired benchmark: each hidden concept is a small set of
// attribute tokens; captions spell the attributes in random order and images
// are noisy means of the attributes' embedding rows. Correct cross-modal
// matches therefore exist by construction and are known for evaluation.

#include <cstdint>
#include <string>
#include <vector>

#include "sscap/array.hpp"
#include "sscap/tokens.hpp"

namespace sscap {

struct GenConfig {
    int num_concepts = 40;
    int attributes_per_concept = 3;
    int attribute_vocab = 24;
    int samples_per_concept = 125;
    int image_dim = 32;
    double noise_sigma = 0.1;
    std::uint64_t seed = 0;

    int vocab_size() const { return attribute_vocab + ATTR_BASE; }
    void validate() const;
};

struct Sample {
    int id = -1;
    int concept_id = -1;  // hidden label, used by evaluation only; -1 = unknown
    std::vector<double> image;
    TokenSeq caption;
};

struct Dataset {
    int image_dim = 0;
    int vocab_size = 0;
    bool has_concepts = false;
    std::vector<Sample> samples;
};

struct SplitBundle {
    int image_dim = 0;
    int vocab_size = 0;
    bool has_concepts = false;
    std::vector<Sample> paired;
    std::vector<Sample> unpaired_images;    // captions withheld
    std::vector<Sample> unpaired_captions;  // images withheld
    std::vector<Sample> test;
};

Dataset generate(const GenConfig& cfg);

// Shuffles by seed, carves the test split, keeps round(paired_fraction *
// train size) pairs, and divides the remainder per concept: one half keeps
// images only, the other captions only, so every unpaired sample still has a
// same-concept counterpart across the gap.
SplitBundle split_scarcely_paired(const Dataset& data, double paired_fraction,
                                  double test_fraction, std::uint64_t seed);

// JSONL with a header line {"format_version":1,"image_dim":..,"vocab_size":..},
// then one record per sample.
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_external(const std::string& path);

// Batch assembly helpers.
Array2 image_matrix(const std::vector<Sample>& samples, const std::vector<int>& rows);
std::vector<TokenSeq> caption_list(const std::vector<Sample>& samples,
                                   const std::vector<int>& rows);

}  // namespace sscap

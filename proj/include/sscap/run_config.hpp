#pragma once

// One flat key=value configuration covering data generation, model sizes,
// and training. Files use '#' comments; unknown or duplicate keys are errors
// so a typo cannot silently fall back to a default.

#include <cstdint>
#include <string>

#include "sscap/dataset.hpp"
#include "sscap/losses.hpp"
#include "sscap/model.hpp"

namespace sscap {

enum class Variant { PairedOnly, CycleGan, Ver1, Ver2, Final };

Variant parse_variant(const std::string& name);
const char* variant_name(Variant v);

struct RunConfig {
    // dataset generation (defaults give the 5000-sample benchmark)
    int num_concepts = 40;
    int attributes_per_concept = 5;
    int attribute_vocab = 24;
    int samples_per_concept = 125;
    int image_dim = 32;
    double noise_sigma = 0.1;

    // split
    double paired_fraction = 0.01;
    double test_fraction = 0.1;

    // model sizes
    int latent_dim = 64;
    int embed_dim = 32;
    int lstm_hidden = 64;
    int transformer_layers = 4;
    int disc_hidden = 64;
    int max_seq_len = 10;

    // training
    std::string variant = "final";
    int batch_size = 32;
    long iterations = 3000;
    long warmup_iters = 200;
    double pool_fraction = 0.01;
    std::uint64_t seed = 0;
    long eval_every = 1000;
    int beam_size = 3;

    // loss weights
    double lambda_x = 0.1;
    double lambda_y = 0.1;
    double lambda_reg = 0.1;
    double w_gan = 0.1;
    double w_triplet = 0.1;

    // optimizer
    double lr = 5e-4;
    double adam_b1 = 0.9;
    double adam_b2 = 0.999;
    double adam_eps = 1e-8;

    // optional external dataset (JSONL); empty means generate synthetically
    std::string dataset;

    void validate() const;

    GenConfig gen_config() const;
    ModelConfig model_config() const;  // vocab/image_dim still come from the data
    LossWeights loss_weights() const;
    Variant parsed_variant() const { return parse_variant(variant); }
};

// Applies key=value lines from a file on top of the given base config.
RunConfig load_run_config(const std::string& path, RunConfig base = RunConfig());

// Applies a single "key=value" assignment (CLI overrides).
void apply_assignment(RunConfig& cfg, const std::string& key, const std::string& value);

// Canonical serialization; load_run_config of the output reproduces cfg.
std::string resolved_config(const RunConfig& cfg);

}  // namespace sscap

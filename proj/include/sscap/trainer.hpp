#pragma once

// Alternating-player training loop. Each iteration runs up to four
// sub-steps, gated by the variant:
//   1 discriminator update (GAN variants and the cycle baseline)
//   2 generator update: adversarial + feature-regression (or cycle) terms
//   3 pseudo-label assignment via discriminator retrieval
//   4 captioner update: paired CE, weighted pseudo CE, triplet ranking
// The generator-side roles share one Adam state, the discriminators another,
// so the two players never mix moment estimates.

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sscap/adam.hpp"
#include "sscap/dataset.hpp"
#include "sscap/losses.hpp"
#include "sscap/metrics.hpp"
#include "sscap/model.hpp"
#include "sscap/pseudo.hpp"
#include "sscap/rng.hpp"
#include "sscap/run_config.hpp"

namespace sscap {

// Raised when any loss or gradient stops being finite.
class TrainAbort : public std::runtime_error {
   public:
    TrainAbort(long iteration, std::string component, const std::string& detail);
    long iteration() const { return iteration_; }
    const std::string& component() const { return component_; }

   private:
    long iteration_;
    std::string component_;
};

struct TrainState {
    ModelConfig model;
    ParamStore params;
    AdamState opt_gen;   // F, G, H, Tvc, Tcv
    AdamState opt_disc;  // D
    Rng rng_data = make_rng(0);
    Rng rng_pool = make_rng(0);
    Rng rng_neg = make_rng(0);
    long iteration = 0;
    std::vector<PseudoPair> assignment_window;  // cleared at each evaluation
};

TrainState init_train_state(const RunConfig& cfg, const SplitBundle& bundle);

// k distinct indices from [0, n); k >= n yields the identity batch.
std::vector<int> draw_batch(Rng& rng, int n, int k);

// One iteration over explicit batch rows (indices into bundle.paired,
// bundle.unpaired_images, bundle.unpaired_captions). observer, when given,
// fires after each sub-step that actually ran, with its number.
LossReport train_step(TrainState& st, const RunConfig& cfg, const SplitBundle& bundle,
                      const std::vector<int>& paired_rows, const std::vector<int>& ux_rows,
                      const std::vector<int>& uy_rows,
                      const std::function<void(int, const TrainState&)>& observer = {},
                      std::vector<PseudoPair>* assignments_out = nullptr);

struct TrainResult {
    ParamStore params;
    ModelConfig model;
    std::string history_csv;      // per-iteration losses, metrics at eval rows
    MetricsReport final_metrics;  // last evaluation (default when iterations=0)
};

// Full loop. When run_dir is non-empty it is created and receives
// history.csv, assignments.jsonl, and checkpoint.json.
TrainResult train(const RunConfig& cfg, const SplitBundle& bundle, const std::string& run_dir);

}  // namespace sscap

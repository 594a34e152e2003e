#pragma once

// Reverse-mode autodiff over Array2. A Tape records every op in creation
// order, which is already a topological order, so the backward sweep is a
// single reverse pass. Gradients accumulate additively across fan-out. The
// tape is rebuilt from scratch every training step; nothing here is reused
// across steps.

#include <cstddef>
#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sscap/array.hpp"

namespace sscap::ad {

class Tape;

// Lightweight handle into a tape. Copying is free; the tape owns all storage.
struct Value {
    Tape* tape = nullptr;
    int idx = -1;
    bool valid() const { return tape != nullptr && idx >= 0; }
};

class Tape {
   public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaves. param tracks gradients; constant never receives any.
    Value param(Array2 v, std::string name);
    Value constant(Array2 v, std::string name = "const");

    // Elementwise and matrix ops.
    Value matmul(Value a, Value b);
    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    Value add_bias(Value a, Value bias_row);  // broadcast a 1xC row over all rows
    Value mul(Value a, Value b);              // elementwise
    Value scale(Value a, double c);
    Value relu(Value a);
    Value tanh(Value a);
    Value sigmoid(Value a);
    Value log_sigmoid(Value a);  // log(sigmoid(a)), finite for all finite inputs
    Value softmax_rows(Value a);
    Value log_softmax_rows(Value a);
    Value log(Value a);
    Value sqrt(Value a);

    // Shape ops.
    Value concat_cols(Value a, Value b);
    Value concat_rows(Value a, Value b);
    Value slice_cols(Value a, int col_begin, int col_end);  // half-open
    Value gather_rows(Value a, std::vector<int> row_ids);
    Value pick_entries(Value a, std::vector<int> col_per_row);  // (R x 1)

    // Reductions.
    Value mean(Value a);           // 1x1
    Value sum(Value a);            // 1x1
    Value sumsq(Value a);          // 1x1, squared Frobenius norm
    Value rowwise_sumsq(Value a);  // (R x 1)

    // Forwards the value, blocks all gradient flow.
    Value stop_grad(Value a);

    // Runs the reverse sweep from a scalar loss. One call per tape.
    void backward(Value loss);

    // References stay valid for the tape's lifetime; recording further ops
    // never relocates earlier nodes.
    const Array2& val(Value v) const;
    // Gradient of the last backward target w.r.t. v. Throws if v never
    // received one; use has_grad to distinguish "zero" from "untracked".
    const Array2& grad(Value v) const;
    bool has_grad(Value v) const;
    Array2 grad_or_zero(Value v) const;

    bool tracked(Value v) const;
    size_t size() const { return nodes_.size(); }

   private:
    using BackFn = std::function<void(Tape&, int)>;

    struct Node {
        Array2 value;
        Array2 grad;
        bool tracked = false;
        bool has_grad = false;
        const char* op = "leaf";
        std::string name;
        BackFn back;
    };

    // Deque keeps node addresses stable as the tape grows, so callers may
    // hold val() references while recording more ops.
    std::deque<Node> nodes_;
    bool backward_done_ = false;

    int push(Array2 value, const char* op, bool tracked, BackFn back);
    Value make(Array2 value, const char* op, bool tracked, BackFn back);
    const Node& node(Value v) const;
    Node& node_mut(Value v);
    void check_same_tape(Value v, const char* op) const;
    // Adds delta into the node's grad buffer, allocating it on first touch.
    void accum(int idx, const Array2& delta, const char* op);

    friend struct Value;
};

}  // namespace sscap::ad

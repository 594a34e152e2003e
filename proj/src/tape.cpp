#include "sscap/tape.hpp"

#include <cmath>
#include <utility>

#include "sscap/kernels.hpp"

namespace sscap::ad {

namespace {

[[noreturn]] void numeric_error(const char* op, const char* phase) {
    throw std::runtime_error(std::string("numeric error: op '") + op + "' produced non-finite " +
                             phase);
}

void check_finite_value(const char* op, const Array2& v) {
    if (!v.all_finite()) numeric_error(op, "values");
}

}  // namespace

int Tape::push(Array2 value, const char* op, bool tracked, BackFn back) {
    check_finite_value(op, value);
    Node n;
    n.value = std::move(value);
    n.tracked = tracked;
    n.op = op;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

Value Tape::make(Array2 value, const char* op, bool tracked, BackFn back) {
    return Value{this, push(std::move(value), op, tracked, std::move(back))};
}

const Tape::Node& Tape::node(Value v) const {
    if (v.tape != this || v.idx < 0 || v.idx >= static_cast<int>(nodes_.size()))
        throw std::invalid_argument("tape: value handle does not belong to this tape");
    return nodes_[static_cast<size_t>(v.idx)];
}

Tape::Node& Tape::node_mut(Value v) { return const_cast<Node&>(node(v)); }

void Tape::check_same_tape(Value v, const char* op) const {
    if (v.tape != this)
        throw std::invalid_argument(std::string(op) + ": value handle from a different tape");
    if (v.idx < 0 || v.idx >= static_cast<int>(nodes_.size()))
        throw std::invalid_argument(std::string(op) + ": dangling value handle");
}

void Tape::accum(int idx, const Array2& delta, const char* op) {
    Node& n = nodes_[static_cast<size_t>(idx)];
    if (!n.tracked) return;
    if (!n.has_grad) {
        n.grad = Array2(n.value.rows, n.value.cols);
        n.has_grad = true;
    }
    if (!n.grad.same_shape(delta))
        throw std::invalid_argument(std::string(op) + ": gradient shape " + delta.shape_str() +
                                    " does not match value " + n.grad.shape_str());
    for (size_t i = 0; i < delta.data.size(); ++i) n.grad.data[i] += delta.data[i];
}

Value Tape::param(Array2 v, std::string name) {
    Value out = make(std::move(v), "param", true, nullptr);
    nodes_.back().name = std::move(name);
    return out;
}

Value Tape::constant(Array2 v, std::string name) {
    Value out = make(std::move(v), "constant", false, nullptr);
    nodes_.back().name = std::move(name);
    return out;
}

Value Tape::matmul(Value a, Value b) {
    check_same_tape(a, "matmul");
    check_same_tape(b, "matmul");
    const Array2& av = val(a);
    const Array2& bv = val(b);
    Array2 out;
    kernels::matmul_nn(av, bv, out);
    const bool tracked = node(a).tracked || node(b).tracked;
    const int ai = a.idx, bi = b.idx;
    return make(std::move(out), "matmul", tracked, [ai, bi](Tape& t, int self) {
        const Array2& g = t.nodes_[self].grad;
        const Array2& av2 = t.nodes_[ai].value;
        const Array2& bv2 = t.nodes_[bi].value;
        if (t.nodes_[ai].tracked) {
            Array2 da;
            kernels::matmul_nt(g, bv2, da);
            t.accum(ai, da, "matmul");
        }
        if (t.nodes_[bi].tracked) {
            Array2 db;
            kernels::matmul_tn(av2, g, db);
            t.accum(bi, db, "matmul");
        }
    });
}

Value Tape::add(Value a, Value b) {
    check_same_tape(a, "add");
    check_same_tape(b, "add");
    Array2 out;
    kernels::add(val(a), val(b), out);
    const bool tracked = node(a).tracked || node(b).tracked;
    const int ai = a.idx, bi = b.idx;
    return make(std::move(out), "add", tracked, [ai, bi](Tape& t, int self) {
        const Array2& g = t.nodes_[self].grad;
        t.accum(ai, g, "add");
        t.accum(bi, g, "add");
    });
}

Value Tape::sub(Value a, Value b) {
    check_same_tape(a, "sub");
    check_same_tape(b, "sub");
    Array2 out;
    kernels::sub(val(a), val(b), out);
    const bool tracked = node(a).tracked || node(b).tracked;
    const int ai = a.idx, bi = b.idx;
    return make(std::move(out), "sub", tracked, [ai, bi](Tape& t, int self) {
        const Array2& g = t.nodes_[self].grad;
        t.accum(ai, g, "sub");
        if (t.nodes_[bi].tracked) {
            Array2 neg(g.rows, g.cols);
            for (size_t i = 0; i < g.data.size(); ++i) neg.data[i] = -g.data[i];
            t.accum(bi, neg, "sub");
        }
    });
}

Value Tape::add_bias(Value a, Value bias_row) {
    check_same_tape(a, "add_bias");
    check_same_tape(bias_row, "add_bias");
    Array2 out;
    kernels::add_row_broadcast(val(a), val(bias_row), out);
    const bool tracked = node(a).tracked || node(bias_row).tracked;
    const int ai = a.idx, bi = bias_row.idx;
    return make(std::move(out), "add_bias", tracked, [ai, bi](Tape& t, int self) {
        const Array2& g = t.nodes_[self].grad;
        t.accum(ai, g, "add_bias");
        if (t.nodes_[bi].tracked) {
            Array2 db(1, g.cols, 0.0);
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < g.cols; ++j) db.data[j] += g.at(i, j);
            t.accum(bi, db, "add_bias");
        }
    });
}

Value Tape::mul(Value a, Value b) {
    check_same_tape(a, "mul");
    check_same_tape(b, "mul");
    Array2 out;
    kernels::mul(val(a), val(b), out);
    const bool tracked = node(a).tracked || node(b).tracked;
    const int ai = a.idx, bi = b.idx;
    return make(std::move(out), "mul", tracked, [ai, bi](Tape& t, int self) {
        const Array2& g = t.nodes_[self].grad;
        if (t.nodes_[ai].tracked) {
            Array2 da;
            kernels::mul(g, t.nodes_[bi].value, da);
            t.accum(ai, da, "mul");
        }
        if (t.nodes_[bi].tracked) {
            Array2 db;
            kernels::mul(g, t.nodes_[ai].value, db);
            t.accum(bi, db, "mul");
        }
    });
}

Value Tape::scale(Value a, double c) {
    check_same_tape(a, "scale");
    const Array2& av = val(a);
    Array2 out(av.rows, av.cols);
    for (size_t i = 0; i < av.data.size(); ++i) out.data[i] = c * av.data[i];
    const int ai = a.idx;
    return make(std::move(out), "scale", node(a).tracked, [ai, c](Tape& t, int self) {
        const Array2& g = t.nodes_[self].grad;
        Array2 da(g.rows, g.cols);
        for (size_t i = 0; i < g.data.size(); ++i) da.data[i] = c * g.data[i];
        t.accum(ai, da, "scale");
    });
}

Value Tape::relu(Value a) {
    check_same_tape(a, "relu");
    Array2 out;
    kernels::relu(val(a), out);
    const int ai = a.idx;
    return make(std::move(out), "relu", node(a).tracked, [ai](Tape& t, int self) {
        const Array2& g = t.nodes_[self].grad;
        const Array2& av = t.nodes_[ai].value;
        Array2 da(g.rows, g.cols);
        // Subgradient 0 at exactly 0.
        for (size_t i = 0; i < g.data.size(); ++i) da.data[i] = av.data[i] > 0.0 ? g.data[i] : 0.0;
        t.accum(ai, da, "relu");
    });
}

Value Tape::tanh(Value a) {
    check_same_tape(a, "tanh");
    Array2 out;
    kernels::tanh(val(a), out);
    const int ai = a.idx;
    return make(std::move(out), "tanh", node(a).tracked, [ai](Tape& t, int self) {
        const Array2& g = t.nodes_[self].grad;
        const Array2& ov = t.nodes_[self].value;
        Array2 da(g.rows, g.cols);
        for (size_t i = 0; i < g.data.size(); ++i)
            da.data[i] = g.data[i] * (1.0 - ov.data[i] * ov.data[i]);
        t.accum(ai, da, "tanh");
    });
}

Value Tape::sigmoid(Value a) {
    check_same_tape(a, "sigmoid");
    Array2 out;
    kernels::sigmoid(val(a), out);
    const int ai = a.idx;
    return make(std::move(out), "sigmoid", node(a).tracked, [ai](Tape& t, int self) {
        const Array2& g = t.nodes_[self].grad;
        const Array2& ov = t.nodes_[self].value;
        Array2 da(g.rows, g.cols);
        for (size_t i = 0; i < g.data.size(); ++i)
            da.data[i] = g.data[i] * ov.data[i] * (1.0 - ov.data[i]);
        t.accum(ai, da, "sigmoid");
    });
}

Value Tape::log_sigmoid(Value a) {
    check_same_tape(a, "log_sigmoid");
    Array2 out;
    kernels::log_sigmoid(val(a), out);
    const int ai = a.idx;
    return make(std::move(out), "log_sigmoid", node(a).tracked, [ai](Tape& t, int self) {
        const Array2& g = t.nodes_[self].grad;
        const Array2& ov = t.nodes_[self].value;
        Array2 da(g.rows, g.cols);
        // d/dz log sigmoid(z) = 1 - sigmoid(z) = -expm1(log sigmoid(z))
        for (size_t i = 0; i < g.data.size(); ++i)
            da.data[i] = g.data[i] * -std::expm1(ov.data[i]);
        t.accum(ai, da, "log_sigmoid");
    });
}

Value Tape::softmax_rows(Value a) {
    check_same_tape(a, "softmax_rows");
    Array2 out;
    kernels::softmax_rows(val(a), out);
    const int ai = a.idx;
    return make(std::move(out), "softmax_rows", node(a).tracked, [ai](Tape& t, int self) {
        const Array2& g = t.nodes_[self].grad;
        const Array2& ov = t.nodes_[self].value;
        Array2 da(g.rows, g.cols);
        for (int i = 0; i < g.rows; ++i) {
            double dot = 0.0;
            for (int j = 0; j < g.cols; ++j) dot += g.at(i, j) * ov.at(i, j);
            for (int j = 0; j < g.cols; ++j)
                da.at(i, j) = ov.at(i, j) * (g.at(i, j) - dot);
        }
        t.accum(ai, da, "softmax_rows");
    });
}

Value Tape::log_softmax_rows(Value a) {
    check_same_tape(a, "log_softmax_rows");
    Array2 out;
    kernels::log_softmax_rows(val(a), out);
    const int ai = a.idx;
    return make(std::move(out), "log_softmax_rows", node(a).tracked, [ai](Tape& t, int self) {
        const Array2& g = t.nodes_[self].grad;
        const Array2& ov = t.nodes_[self].value;
        Array2 da(g.rows, g.cols);
        for (int i = 0; i < g.rows; ++i) {
            double rowsum = 0.0;
            for (int j = 0; j < g.cols; ++j) rowsum += g.at(i, j);
            for (int j = 0; j < g.cols; ++j)
                da.at(i, j) = g.at(i, j) - std::exp(ov.at(i, j)) * rowsum;
        }
        t.accum(ai, da, "log_softmax_rows");
    });
}

Value Tape::log(Value a) {
    check_same_tape(a, "log");
    const Array2& av = val(a);
    Array2 out(av.rows, av.cols);
    for (size_t i = 0; i < av.data.size(); ++i) out.data[i] = std::log(av.data[i]);
    const int ai = a.idx;
    return make(std::move(out), "log", node(a).tracked, [ai](Tape& t, int self) {
        const Array2& g = t.nodes_[self].grad;
        const Array2& av2 = t.nodes_[ai].value;
        Array2 da(g.rows, g.cols);
        for (size_t i = 0; i < g.data.size(); ++i) da.data[i] = g.data[i] / av2.data[i];
        t.accum(ai, da, "log");
    });
}

Value Tape::sqrt(Value a) {
    check_same_tape(a, "sqrt");
    const Array2& av = val(a);
    Array2 out(av.rows, av.cols);
    for (size_t i = 0; i < av.data.size(); ++i) out.data[i] = std::sqrt(av.data[i]);
    const int ai = a.idx;
    return make(std::move(out), "sqrt", node(a).tracked, [ai](Tape& t, int self) {
        const Array2& g = t.nodes_[self].grad;
        const Array2& ov = t.nodes_[self].value;
        Array2 da(g.rows, g.cols);
        // Subgradient 0 at exactly 0, same convention as the relu kink.
        for (size_t i = 0; i < g.data.size(); ++i)
            da.data[i] = ov.data[i] > 0.0 ? g.data[i] * 0.5 / ov.data[i] : 0.0;
        t.accum(ai, da, "sqrt");
    });
}

Value Tape::concat_cols(Value a, Value b) {
    check_same_tape(a, "concat_cols");
    check_same_tape(b, "concat_cols");
    const Array2& av = val(a);
    const Array2& bv = val(b);
    if (av.rows != bv.rows)
        throw std::invalid_argument("concat_cols: row counts differ " + av.shape_str() + " vs " +
                                    bv.shape_str());
    Array2 out(av.rows, av.cols + bv.cols);
    for (int i = 0; i < av.rows; ++i) {
        for (int j = 0; j < av.cols; ++j) out.at(i, j) = av.at(i, j);
        for (int j = 0; j < bv.cols; ++j) out.at(i, av.cols + j) = bv.at(i, j);
    }
    const bool tracked = node(a).tracked || node(b).tracked;
    const int ai = a.idx, bi = b.idx, ac = av.cols, bc = bv.cols;
    return make(std::move(out), "concat_cols", tracked, [ai, bi, ac, bc](Tape& t, int self) {
        const Array2& g = t.nodes_[self].grad;
        if (t.nodes_[ai].tracked) {
            Array2 da(g.rows, ac);
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < ac; ++j) da.at(i, j) = g.at(i, j);
            t.accum(ai, da, "concat_cols");
        }
        if (t.nodes_[bi].tracked) {
            Array2 db(g.rows, bc);
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < bc; ++j) db.at(i, j) = g.at(i, ac + j);
            t.accum(bi, db, "concat_cols");
        }
    });
}

Value Tape::concat_rows(Value a, Value b) {
    check_same_tape(a, "concat_rows");
    check_same_tape(b, "concat_rows");
    const Array2& av = val(a);
    const Array2& bv = val(b);
    if (av.cols != bv.cols)
        throw std::invalid_argument("concat_rows: col counts differ " + av.shape_str() + " vs " +
                                    bv.shape_str());
    Array2 out(av.rows + bv.rows, av.cols);
    std::copy(av.data.begin(), av.data.end(), out.data.begin());
    std::copy(bv.data.begin(), bv.data.end(), out.data.begin() + av.data.size());
    const bool tracked = node(a).tracked || node(b).tracked;
    const int ai = a.idx, bi = b.idx, ar = av.rows;
    return make(std::move(out), "concat_rows", tracked, [ai, bi, ar](Tape& t, int self) {
        const Array2& g = t.nodes_[self].grad;
        const int cols = g.cols;
        if (t.nodes_[ai].tracked) {
            Array2 da(ar, cols);
            std::copy(g.data.begin(), g.data.begin() + static_cast<size_t>(ar) * cols,
                      da.data.begin());
            t.accum(ai, da, "concat_rows");
        }
        if (t.nodes_[bi].tracked) {
            Array2 db(g.rows - ar, cols);
            std::copy(g.data.begin() + static_cast<size_t>(ar) * cols, g.data.end(),
                      db.data.begin());
            t.accum(bi, db, "concat_rows");
        }
    });
}

Value Tape::slice_cols(Value a, int col_begin, int col_end) {
    check_same_tape(a, "slice_cols");
    const Array2& av = val(a);
    if (col_begin < 0 || col_end > av.cols || col_begin >= col_end)
        throw std::invalid_argument("slice_cols: range [" + std::to_string(col_begin) + "," +
                                    std::to_string(col_end) + ") invalid for " + av.shape_str());
    Array2 out(av.rows, col_end - col_begin);
    for (int i = 0; i < av.rows; ++i)
        for (int j = col_begin; j < col_end; ++j) out.at(i, j - col_begin) = av.at(i, j);
    const int ai = a.idx, c0 = col_begin, cols = av.cols;
    return make(std::move(out), "slice_cols", node(a).tracked, [ai, c0, cols](Tape& t, int self) {
        const Array2& g = t.nodes_[self].grad;
        Array2 da(g.rows, cols, 0.0);
        for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) da.at(i, c0 + j) = g.at(i, j);
        t.accum(ai, da, "slice_cols");
    });
}

Value Tape::gather_rows(Value a, std::vector<int> row_ids) {
    check_same_tape(a, "gather_rows");
    const Array2& av = val(a);
    for (int id : row_ids)
        if (id < 0 || id >= av.rows)
            throw std::invalid_argument("gather_rows: row id " + std::to_string(id) +
                                        " out of range for " + av.shape_str());
    Array2 out(static_cast<int>(row_ids.size()), av.cols);
    for (size_t i = 0; i < row_ids.size(); ++i) {
        const double* src = av.row(row_ids[i]);
        std::copy(src, src + av.cols, out.row(static_cast<int>(i)));
    }
    const int ai = a.idx, src_rows = av.rows;
    return make(std::move(out), "gather_rows", node(a).tracked,
                [ai, src_rows, ids = std::move(row_ids)](Tape& t, int self) {
                    const Array2& g = t.nodes_[self].grad;
                    Array2 da(src_rows, g.cols, 0.0);
                    for (size_t i = 0; i < ids.size(); ++i) {
                        double* dst = da.row(ids[i]);
                        const double* src = g.row(static_cast<int>(i));
                        for (int j = 0; j < g.cols; ++j) dst[j] += src[j];
                    }
                    t.accum(ai, da, "gather_rows");
                });
}

Value Tape::pick_entries(Value a, std::vector<int> col_per_row) {
    check_same_tape(a, "pick_entries");
    const Array2& av = val(a);
    if (static_cast<int>(col_per_row.size()) != av.rows)
        throw std::invalid_argument("pick_entries: need one column index per row of " +
                                    av.shape_str() + ", got " +
                                    std::to_string(col_per_row.size()));
    for (int c : col_per_row)
        if (c < 0 || c >= av.cols)
            throw std::invalid_argument("pick_entries: column " + std::to_string(c) +
                                        " out of range for " + av.shape_str());
    Array2 out(av.rows, 1);
    for (int i = 0; i < av.rows; ++i) out.at(i, 0) = av.at(i, col_per_row[static_cast<size_t>(i)]);
    const int ai = a.idx, cols = av.cols;
    return make(std::move(out), "pick_entries", node(a).tracked,
                [ai, cols, picks = std::move(col_per_row)](Tape& t, int self) {
                    const Array2& g = t.nodes_[self].grad;
                    Array2 da(g.rows, cols, 0.0);
                    for (int i = 0; i < g.rows; ++i)
                        da.at(i, picks[static_cast<size_t>(i)]) = g.at(i, 0);
                    t.accum(ai, da, "pick_entries");
                });
}

Value Tape::mean(Value a) {
    check_same_tape(a, "mean");
    const Array2& av = val(a);
    if (av.data.empty()) throw std::invalid_argument("mean: empty array");
    double s = 0.0;
    for (double v : av.data) s += v;
    const double inv_n = 1.0 / static_cast<double>(av.data.size());
    Array2 out(1, 1, s * inv_n);
    const int ai = a.idx;
    return make(std::move(out), "mean", node(a).tracked, [ai, inv_n](Tape& t, int self) {
        const double g = t.nodes_[self].grad.scalar() * inv_n;
        const Array2& av2 = t.nodes_[ai].value;
        Array2 da(av2.rows, av2.cols, g);
        t.accum(ai, da, "mean");
    });
}

Value Tape::sum(Value a) {
    check_same_tape(a, "sum");
    const Array2& av = val(a);
    double s = 0.0;
    for (double v : av.data) s += v;
    Array2 out(1, 1, s);
    const int ai = a.idx;
    return make(std::move(out), "sum", node(a).tracked, [ai](Tape& t, int self) {
        const double g = t.nodes_[self].grad.scalar();
        const Array2& av2 = t.nodes_[ai].value;
        Array2 da(av2.rows, av2.cols, g);
        t.accum(ai, da, "sum");
    });
}

Value Tape::sumsq(Value a) {
    check_same_tape(a, "sumsq");
    const Array2& av = val(a);
    double s = 0.0;
    for (double v : av.data) s += v * v;
    Array2 out(1, 1, s);
    const int ai = a.idx;
    return make(std::move(out), "sumsq", node(a).tracked, [ai](Tape& t, int self) {
        const double g = t.nodes_[self].grad.scalar();
        const Array2& av2 = t.nodes_[ai].value;
        Array2 da(av2.rows, av2.cols);
        for (size_t i = 0; i < av2.data.size(); ++i) da.data[i] = 2.0 * g * av2.data[i];
        t.accum(ai, da, "sumsq");
    });
}

Value Tape::rowwise_sumsq(Value a) {
    check_same_tape(a, "rowwise_sumsq");
    const Array2& av = val(a);
    Array2 out(av.rows, 1, 0.0);
    for (int i = 0; i < av.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < av.cols; ++j) s += av.at(i, j) * av.at(i, j);
        out.at(i, 0) = s;
    }
    const int ai = a.idx;
    return make(std::move(out), "rowwise_sumsq", node(a).tracked, [ai](Tape& t, int self) {
        const Array2& g = t.nodes_[self].grad;
        const Array2& av2 = t.nodes_[ai].value;
        Array2 da(av2.rows, av2.cols);
        for (int i = 0; i < av2.rows; ++i)
            for (int j = 0; j < av2.cols; ++j) da.at(i, j) = 2.0 * g.at(i, 0) * av2.at(i, j);
        t.accum(ai, da, "rowwise_sumsq");
    });
}

Value Tape::stop_grad(Value a) {
    check_same_tape(a, "stop_grad");
    return make(val(a), "stop_grad", false, nullptr);
}

void Tape::backward(Value loss) {
    check_same_tape(loss, "backward");
    if (backward_done_)
        throw std::logic_error("backward: tape already swept; build a fresh tape per loss");
    const Node& ln = node(loss);
    if (ln.value.rows != 1 || ln.value.cols != 1)
        throw std::invalid_argument("backward: loss must be a 1x1 scalar, got " +
                                    ln.value.shape_str());
    backward_done_ = true;
    if (!ln.tracked) return;
    Node& lm = node_mut(loss);
    lm.grad = Array2(1, 1, 1.0);
    lm.has_grad = true;
    for (int i = loss.idx; i >= 0; --i) {
        Node& n = nodes_[static_cast<size_t>(i)];
        if (!n.has_grad || !n.back) continue;
        if (!n.grad.all_finite()) numeric_error(n.op, "gradients");
        n.back(*this, i);
    }
}

const Array2& Tape::val(Value v) const { return node(v).value; }

const Array2& Tape::grad(Value v) const {
    const Node& n = node(v);
    if (!n.has_grad)
        throw std::logic_error(std::string("grad: node '") + n.op +
                               "' received no gradient (untracked or off the loss path)");
    return n.grad;
}

bool Tape::has_grad(Value v) const { return node(v).has_grad; }

Array2 Tape::grad_or_zero(Value v) const {
    const Node& n = node(v);
    if (n.has_grad) return n.grad;
    return Array2(n.value.rows, n.value.cols, 0.0);
}

bool Tape::tracked(Value v) const { return node(v).tracked; }

}  // namespace sscap::ad

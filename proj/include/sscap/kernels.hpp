#pragma once

#include "sscap/array.hpp"

namespace sscap::kernels {

// Dense kernels behind the autodiff ops. Each kernel has a serial reference
// in kernels::serial and an OpenMP front door here that splits the same
// per-row routine across threads, so parallel output is bit-identical to the
// serial reference regardless of thread count (reductions stay serial).

namespace serial {

void matmul_nn(const Array2& a, const Array2& b, Array2& out);   // out = a * b
void matmul_tn(const Array2& a, const Array2& b, Array2& out);   // out = a^T * b
void matmul_nt(const Array2& a, const Array2& b, Array2& out);   // out = a * b^T
void add(const Array2& a, const Array2& b, Array2& out);
void sub(const Array2& a, const Array2& b, Array2& out);
void mul(const Array2& a, const Array2& b, Array2& out);
void add_row_broadcast(const Array2& a, const Array2& bias_row, Array2& out);
void relu(const Array2& a, Array2& out);
void sigmoid(const Array2& a, Array2& out);
void log_sigmoid(const Array2& a, Array2& out);
void tanh(const Array2& a, Array2& out);
void softmax_rows(const Array2& a, Array2& out);
void log_softmax_rows(const Array2& a, Array2& out);

}  // namespace serial

void matmul_nn(const Array2& a, const Array2& b, Array2& out);
void matmul_tn(const Array2& a, const Array2& b, Array2& out);
void matmul_nt(const Array2& a, const Array2& b, Array2& out);
void add(const Array2& a, const Array2& b, Array2& out);
void sub(const Array2& a, const Array2& b, Array2& out);
void mul(const Array2& a, const Array2& b, Array2& out);
void add_row_broadcast(const Array2& a, const Array2& bias_row, Array2& out);
void relu(const Array2& a, Array2& out);
void sigmoid(const Array2& a, Array2& out);
void log_sigmoid(const Array2& a, Array2& out);
void tanh(const Array2& a, Array2& out);
void softmax_rows(const Array2& a, Array2& out);
void log_softmax_rows(const Array2& a, Array2& out);

// Row threshold below which the OpenMP front doors stay on the calling
// thread; keeps desk-scale graphs from paying fork/join overhead.
int parallel_row_threshold();
void set_parallel_row_threshold(int rows);

}  // namespace sscap::kernels

#include "sscap/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sscap::kernels {

namespace {

int g_parallel_row_threshold = 256;

// Per-row workers. Both the serial reference and the OpenMP front doors call
// these, so each output element is produced by identical code in identical
// order and the two paths agree bitwise.

inline void matmul_nn_rows(const Array2& a, const Array2& b, Array2& out, int r0, int r1) {
    const int k_dim = a.cols;
    const int n = b.cols;
    const double* bd = b.data.data();
    for (int i = r0; i < r1; ++i) {
        const double* arow = a.data.data() + static_cast<size_t>(i) * k_dim;
        double* orow = out.data.data() + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) orow[j] = 0.0;
        for (int k = 0; k < k_dim; ++k) {
            const double av = arow[k];
            const double* brow = bd + static_cast<size_t>(k) * n;
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
}

// out = a^T * b, out is (a.cols x b.cols); rows of out indexed by columns of a.
inline void matmul_tn_rows(const Array2& a, const Array2& b, Array2& out, int r0, int r1) {
    const int m = a.rows;
    const int n = b.cols;
    for (int i = r0; i < r1; ++i) {
        double* orow = out.data.data() + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) orow[j] = 0.0;
        for (int k = 0; k < m; ++k) {
            const double av = a.data[static_cast<size_t>(k) * a.cols + i];
            const double* brow = b.data.data() + static_cast<size_t>(k) * n;
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
}

// out = a * b^T, out is (a.rows x b.rows).
inline void matmul_nt_rows(const Array2& a, const Array2& b, Array2& out, int r0, int r1) {
    const int k_dim = a.cols;
    const int n = b.rows;
    for (int i = r0; i < r1; ++i) {
        const double* arow = a.data.data() + static_cast<size_t>(i) * k_dim;
        double* orow = out.data.data() + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* brow = b.data.data() + static_cast<size_t>(j) * k_dim;
            double acc = 0.0;
            for (int k = 0; k < k_dim; ++k) acc += arow[k] * brow[k];
            orow[j] = acc;
        }
    }
}

inline void add_rows(const Array2& a, const Array2& b, Array2& out, int r0, int r1) {
    const size_t c = a.cols;
    for (int i = r0; i < r1; ++i) {
        const size_t off = static_cast<size_t>(i) * c;
        for (size_t j = 0; j < c; ++j) out.data[off + j] = a.data[off + j] + b.data[off + j];
    }
}

inline void sub_rows(const Array2& a, const Array2& b, Array2& out, int r0, int r1) {
    const size_t c = a.cols;
    for (int i = r0; i < r1; ++i) {
        const size_t off = static_cast<size_t>(i) * c;
        for (size_t j = 0; j < c; ++j) out.data[off + j] = a.data[off + j] - b.data[off + j];
    }
}

inline void mul_rows(const Array2& a, const Array2& b, Array2& out, int r0, int r1) {
    const size_t c = a.cols;
    for (int i = r0; i < r1; ++i) {
        const size_t off = static_cast<size_t>(i) * c;
        for (size_t j = 0; j < c; ++j) out.data[off + j] = a.data[off + j] * b.data[off + j];
    }
}

inline void add_row_broadcast_rows(const Array2& a, const Array2& bias, Array2& out, int r0,
                                   int r1) {
    const size_t c = a.cols;
    for (int i = r0; i < r1; ++i) {
        const size_t off = static_cast<size_t>(i) * c;
        for (size_t j = 0; j < c; ++j) out.data[off + j] = a.data[off + j] + bias.data[j];
    }
}

inline void relu_rows(const Array2& a, Array2& out, int r0, int r1) {
    const size_t c = a.cols;
    for (int i = r0; i < r1; ++i) {
        const size_t off = static_cast<size_t>(i) * c;
        for (size_t j = 0; j < c; ++j) {
            const double v = a.data[off + j];
            out.data[off + j] = v > 0.0 ? v : 0.0;
        }
    }
}

inline void sigmoid_rows(const Array2& a, Array2& out, int r0, int r1) {
    const size_t c = a.cols;
    for (int i = r0; i < r1; ++i) {
        const size_t off = static_cast<size_t>(i) * c;
        for (size_t j = 0; j < c; ++j) out.data[off + j] = 1.0 / (1.0 + std::exp(-a.data[off + j]));
    }
}

inline void log_sigmoid_rows(const Array2& a, Array2& out, int r0, int r1) {
    const size_t c = a.cols;
    for (int i = r0; i < r1; ++i) {
        const size_t off = static_cast<size_t>(i) * c;
        for (size_t j = 0; j < c; ++j) {
            const double z = a.data[off + j];
            // finite for every finite z, unlike log(1/(1+exp(-z)))
            out.data[off + j] = z < 0.0 ? z - std::log1p(std::exp(z)) : -std::log1p(std::exp(-z));
        }
    }
}

inline void tanh_rows(const Array2& a, Array2& out, int r0, int r1) {
    const size_t c = a.cols;
    for (int i = r0; i < r1; ++i) {
        const size_t off = static_cast<size_t>(i) * c;
        for (size_t j = 0; j < c; ++j) out.data[off + j] = std::tanh(a.data[off + j]);
    }
}

inline void softmax_rows_rows(const Array2& a, Array2& out, int r0, int r1) {
    const int c = a.cols;
    for (int i = r0; i < r1; ++i) {
        const size_t off = static_cast<size_t>(i) * c;
        double mx = a.data[off];
        for (int j = 1; j < c; ++j) mx = std::max(mx, a.data[off + j]);
        double sum = 0.0;
        for (int j = 0; j < c; ++j) {
            const double e = std::exp(a.data[off + j] - mx);
            out.data[off + j] = e;
            sum += e;
        }
        const double inv = 1.0 / sum;
        for (int j = 0; j < c; ++j) out.data[off + j] *= inv;
    }
}

inline void log_softmax_rows_rows(const Array2& a, Array2& out, int r0, int r1) {
    const int c = a.cols;
    for (int i = r0; i < r1; ++i) {
        const size_t off = static_cast<size_t>(i) * c;
        double mx = a.data[off];
        for (int j = 1; j < c; ++j) mx = std::max(mx, a.data[off + j]);
        double sum = 0.0;
        for (int j = 0; j < c; ++j) sum += std::exp(a.data[off + j] - mx);
        const double lse = mx + std::log(sum);
        for (int j = 0; j < c; ++j) out.data[off + j] = a.data[off + j] - lse;
    }
}

template <typename RowFn>
inline void run_rows(int rows, RowFn fn) {
#ifdef _OPENMP
    if (rows >= g_parallel_row_threshold && omp_get_max_threads() > 1) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < rows; ++i) fn(i, i + 1);
        return;
    }
#endif
    fn(0, rows);
}

inline void check_matmul_nn(const Array2& a, const Array2& b, Array2& out) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: inner dims differ " + a.shape_str() + " vs " +
                                    b.shape_str());
    out = Array2(a.rows, b.cols);
}

}  // namespace

namespace serial {

void matmul_nn(const Array2& a, const Array2& b, Array2& out) {
    check_matmul_nn(a, b, out);
    matmul_nn_rows(a, b, out, 0, out.rows);
}
void matmul_tn(const Array2& a, const Array2& b, Array2& out) {
    if (a.rows != b.rows)
        throw std::invalid_argument("matmul_tn: row dims differ " + a.shape_str() + " vs " +
                                    b.shape_str());
    out = Array2(a.cols, b.cols);
    matmul_tn_rows(a, b, out, 0, out.rows);
}
void matmul_nt(const Array2& a, const Array2& b, Array2& out) {
    if (a.cols != b.cols)
        throw std::invalid_argument("matmul_nt: col dims differ " + a.shape_str() + " vs " +
                                    b.shape_str());
    out = Array2(a.rows, b.rows);
    matmul_nt_rows(a, b, out, 0, out.rows);
}
void add(const Array2& a, const Array2& b, Array2& out) {
    require_same_shape(a, b, "add");
    out = Array2(a.rows, a.cols);
    add_rows(a, b, out, 0, a.rows);
}
void sub(const Array2& a, const Array2& b, Array2& out) {
    require_same_shape(a, b, "sub");
    out = Array2(a.rows, a.cols);
    sub_rows(a, b, out, 0, a.rows);
}
void mul(const Array2& a, const Array2& b, Array2& out) {
    require_same_shape(a, b, "mul");
    out = Array2(a.rows, a.cols);
    mul_rows(a, b, out, 0, a.rows);
}
void add_row_broadcast(const Array2& a, const Array2& bias_row, Array2& out) {
    if (bias_row.rows != 1 || bias_row.cols != a.cols)
        throw std::invalid_argument("add_row_broadcast: bias " + bias_row.shape_str() +
                                    " does not match " + a.shape_str());
    out = Array2(a.rows, a.cols);
    add_row_broadcast_rows(a, bias_row, out, 0, a.rows);
}
void relu(const Array2& a, Array2& out) {
    out = Array2(a.rows, a.cols);
    relu_rows(a, out, 0, a.rows);
}
void sigmoid(const Array2& a, Array2& out) {
    out = Array2(a.rows, a.cols);
    sigmoid_rows(a, out, 0, a.rows);
}
void log_sigmoid(const Array2& a, Array2& out) {
    out = Array2(a.rows, a.cols);
    log_sigmoid_rows(a, out, 0, a.rows);
}
void tanh(const Array2& a, Array2& out) {
    out = Array2(a.rows, a.cols);
    tanh_rows(a, out, 0, a.rows);
}
void softmax_rows(const Array2& a, Array2& out) {
    if (a.cols < 1) throw std::invalid_argument("softmax_rows: empty rows");
    out = Array2(a.rows, a.cols);
    softmax_rows_rows(a, out, 0, a.rows);
}
void log_softmax_rows(const Array2& a, Array2& out) {
    if (a.cols < 1) throw std::invalid_argument("log_softmax_rows: empty rows");
    out = Array2(a.rows, a.cols);
    log_softmax_rows_rows(a, out, 0, a.rows);
}

}  // namespace serial

void matmul_nn(const Array2& a, const Array2& b, Array2& out) {
    check_matmul_nn(a, b, out);
    run_rows(out.rows, [&](int r0, int r1) { matmul_nn_rows(a, b, out, r0, r1); });
}
void matmul_tn(const Array2& a, const Array2& b, Array2& out) {
    if (a.rows != b.rows)
        throw std::invalid_argument("matmul_tn: row dims differ " + a.shape_str() + " vs " +
                                    b.shape_str());
    out = Array2(a.cols, b.cols);
    run_rows(out.rows, [&](int r0, int r1) { matmul_tn_rows(a, b, out, r0, r1); });
}
void matmul_nt(const Array2& a, const Array2& b, Array2& out) {
    if (a.cols != b.cols)
        throw std::invalid_argument("matmul_nt: col dims differ " + a.shape_str() + " vs " +
                                    b.shape_str());
    out = Array2(a.rows, b.rows);
    run_rows(out.rows, [&](int r0, int r1) { matmul_nt_rows(a, b, out, r0, r1); });
}
void add(const Array2& a, const Array2& b, Array2& out) {
    require_same_shape(a, b, "add");
    out = Array2(a.rows, a.cols);
    run_rows(a.rows, [&](int r0, int r1) { add_rows(a, b, out, r0, r1); });
}
void sub(const Array2& a, const Array2& b, Array2& out) {
    require_same_shape(a, b, "sub");
    out = Array2(a.rows, a.cols);
    run_rows(a.rows, [&](int r0, int r1) { sub_rows(a, b, out, r0, r1); });
}
void mul(const Array2& a, const Array2& b, Array2& out) {
    require_same_shape(a, b, "mul");
    out = Array2(a.rows, a.cols);
    run_rows(a.rows, [&](int r0, int r1) { mul_rows(a, b, out, r0, r1); });
}
void add_row_broadcast(const Array2& a, const Array2& bias_row, Array2& out) {
    if (bias_row.rows != 1 || bias_row.cols != a.cols)
        throw std::invalid_argument("add_row_broadcast: bias " + bias_row.shape_str() +
                                    " does not match " + a.shape_str());
    out = Array2(a.rows, a.cols);
    run_rows(a.rows, [&](int r0, int r1) { add_row_broadcast_rows(a, bias_row, out, r0, r1); });
}
void relu(const Array2& a, Array2& out) {
    out = Array2(a.rows, a.cols);
    run_rows(a.rows, [&](int r0, int r1) { relu_rows(a, out, r0, r1); });
}
void sigmoid(const Array2& a, Array2& out) {
    out = Array2(a.rows, a.cols);
    run_rows(a.rows, [&](int r0, int r1) { sigmoid_rows(a, out, r0, r1); });
}
void log_sigmoid(const Array2& a, Array2& out) {
    out = Array2(a.rows, a.cols);
    run_rows(a.rows, [&](int r0, int r1) { log_sigmoid_rows(a, out, r0, r1); });
}
void tanh(const Array2& a, Array2& out) {
    out = Array2(a.rows, a.cols);
    run_rows(a.rows, [&](int r0, int r1) { tanh_rows(a, out, r0, r1); });
}
void softmax_rows(const Array2& a, Array2& out) {
    if (a.cols < 1) throw std::invalid_argument("softmax_rows: empty rows");
    out = Array2(a.rows, a.cols);
    run_rows(a.rows, [&](int r0, int r1) { softmax_rows_rows(a, out, r0, r1); });
}
void log_softmax_rows(const Array2& a, Array2& out) {
    if (a.cols < 1) throw std::invalid_argument("log_softmax_rows: empty rows");
    out = Array2(a.rows, a.cols);
    run_rows(a.rows, [&](int r0, int r1) { log_softmax_rows_rows(a, out, r0, r1); });
}

int parallel_row_threshold() { return g_parallel_row_threshold; }
void set_parallel_row_threshold(int rows) { g_parallel_row_threshold = rows; }

}  // namespace sscap::kernels

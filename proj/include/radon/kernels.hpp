#pragma once

#include <cstdint>

namespace radon::kern {

/// Global switch between the OpenMP kernels and the serial reference path.
/// Set once at startup (RADON_SERIAL=1 disables parallel kernels). Both
/// produce bit-identical results; the toggle exists for benchmarking and
/// for pinning down scheduler-independent behavior in tests.
bool parallel_enabled();
void set_parallel(bool on);

// ---- matmul: C(m x n) += A(m x k) * B(k x n), row-major ----
void matmul_serial(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);
void matmul_parallel(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);
void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);

// dA(m x k) += G(m x n) * B^T;  dB(k x n) += A^T * G(m x n)
void matmul_grad_lhs_serial(const double* g, const double* b, double* da, int64_t m, int64_t k, int64_t n);
void matmul_grad_lhs_parallel(const double* g, const double* b, double* da, int64_t m, int64_t k, int64_t n);
void matmul_grad_lhs(const double* g, const double* b, double* da, int64_t m, int64_t k, int64_t n);
void matmul_grad_rhs_serial(const double* a, const double* g, double* db, int64_t m, int64_t k, int64_t n);
void matmul_grad_rhs_parallel(const double* a, const double* g, double* db, int64_t m, int64_t k, int64_t n);
void matmul_grad_rhs(const double* a, const double* g, double* db, int64_t m, int64_t k, int64_t n);

// ---- diagonal-state scan ----
// Shared-parameter scalar-channel state space recurrence over a batch of
// sequences. x is (batch, T, C); each (sequence, channel) slice is scanned
// independently with an S-dimensional hidden state:
//   h_t = a (.) h_{t-1} + b * x_t,   y_t = sum_s c_s h_{t,s}
// The kernel form evaluates the same map as a causal convolution with
// coefficients K_j = sum_s c_s a_s^j b_s.
void scan_recursive_serial(const double* x, const double* a, const double* b, const double* c,
                           double* y, int64_t batch, int64_t t_len, int64_t ch, int64_t s_dim);
void scan_kernel_serial(const double* x, const double* a, const double* b, const double* c,
                        double* y, int64_t batch, int64_t t_len, int64_t ch, int64_t s_dim);
void scan_kernel_parallel(const double* x, const double* a, const double* b, const double* c,
                          double* y, int64_t batch, int64_t t_len, int64_t ch, int64_t s_dim);
void scan_kernel(const double* x, const double* a, const double* b, const double* c,
                 double* y, int64_t batch, int64_t t_len, int64_t ch, int64_t s_dim);

// Gradients for the diagonal scan (kernel algebra; exact for both forward
// forms up to roundoff). gy is (batch, T, C); accumulates into gx/ga/gb/gc.
void scan_grad(const double* x, const double* a, const double* b, const double* c,
               const double* gy, double* gx, double* ga, double* gb, double* gc,
               int64_t batch, int64_t t_len, int64_t ch, int64_t s_dim);

// ---- dense-state scan (config option) ----
// A is (S x S); otherwise the same contract as the diagonal form.
void scan_dense_recursive(const double* x, const double* a_mat, const double* b, const double* c,
                          double* y, int64_t batch, int64_t t_len, int64_t ch, int64_t s_dim);
void scan_dense_kernel(const double* x, const double* a_mat, const double* b, const double* c,
                       double* y, int64_t batch, int64_t t_len, int64_t ch, int64_t s_dim);
void scan_dense_grad(const double* x, const double* a_mat, const double* b, const double* c,
                     const double* gy, double* gx, double* ga, double* gb, double* gc,
                     int64_t batch, int64_t t_len, int64_t ch, int64_t s_dim);

}  // namespace radon::kern

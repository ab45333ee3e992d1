#include "radon/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <vector>

namespace radon::kern {

namespace {
std::atomic<bool> g_parallel{[] {
  const char* s = std::getenv("RADON_SERIAL");
  return !(s && s[0] == '1');
}()};
}  // namespace

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

// Each output element is produced by exactly one iteration with a fixed
// serial inner loop, so the parallel kernels are bit-identical to the
// serial ones for any thread count.

void matmul_serial(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + p * n;
      for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void matmul_parallel(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
#pragma omp parallel for schedule(static) if (m > 4)
  for (int64_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + p * n;
      for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  if (parallel_enabled())
    matmul_parallel(a, b, c, m, k, n);
  else
    matmul_serial(a, b, c, m, k, n);
}

void matmul_grad_lhs_serial(const double* g, const double* b, double* da, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* gi = g + i * n;
    double* dai = da + i * k;
    for (int64_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double acc = 0.0;
      for (int64_t j = 0; j < n; ++j) acc += gi[j] * bp[j];
      dai[p] += acc;
    }
  }
}

void matmul_grad_lhs_parallel(const double* g, const double* b, double* da, int64_t m, int64_t k, int64_t n) {
#pragma omp parallel for schedule(static) if (m > 4)
  for (int64_t i = 0; i < m; ++i) {
    const double* gi = g + i * n;
    double* dai = da + i * k;
    for (int64_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double acc = 0.0;
      for (int64_t j = 0; j < n; ++j) acc += gi[j] * bp[j];
      dai[p] += acc;
    }
  }
}

void matmul_grad_lhs(const double* g, const double* b, double* da, int64_t m, int64_t k, int64_t n) {
  if (parallel_enabled())
    matmul_grad_lhs_parallel(g, b, da, m, k, n);
  else
    matmul_grad_lhs_serial(g, b, da, m, k, n);
}

void matmul_grad_rhs_serial(const double* a, const double* g, double* db, int64_t m, int64_t k, int64_t n) {
  for (int64_t p = 0; p < k; ++p) {
    double* dbp = db + p * n;
    for (int64_t i = 0; i < m; ++i) {
      const double av = a[i * k + p];
      const double* gi = g + i * n;
      for (int64_t j = 0; j < n; ++j) dbp[j] += av * gi[j];
    }
  }
}

void matmul_grad_rhs_parallel(const double* a, const double* g, double* db, int64_t m, int64_t k, int64_t n) {
#pragma omp parallel for schedule(static) if (k > 4)
  for (int64_t p = 0; p < k; ++p) {
    double* dbp = db + p * n;
    for (int64_t i = 0; i < m; ++i) {
      const double av = a[i * k + p];
      const double* gi = g + i * n;
      for (int64_t j = 0; j < n; ++j) dbp[j] += av * gi[j];
    }
  }
}

void matmul_grad_rhs(const double* a, const double* g, double* db, int64_t m, int64_t k, int64_t n) {
  if (parallel_enabled())
    matmul_grad_rhs_parallel(a, g, db, m, k, n);
  else
    matmul_grad_rhs_serial(a, g, db, m, k, n);
}

// ---- diagonal scan ----

void scan_recursive_serial(const double* x, const double* a, const double* b, const double* c,
                           double* y, int64_t batch, int64_t t_len, int64_t ch, int64_t s_dim) {
  std::vector<double> h(static_cast<size_t>(s_dim));
  for (int64_t bt = 0; bt < batch; ++bt) {
    for (int64_t j = 0; j < ch; ++j) {
      std::fill(h.begin(), h.end(), 0.0);
      const double* xs = x + (bt * t_len) * ch + j;
      double* ys = y + (bt * t_len) * ch + j;
      for (int64_t t = 0; t < t_len; ++t) {
        const double xv = xs[t * ch];
        double out = 0.0;
        for (int64_t s = 0; s < s_dim; ++s) {
          h[s] = a[s] * h[s] + b[s] * xv;
          out += c[s] * h[s];
        }
        ys[t * ch] = out;
      }
    }
  }
}

namespace {
// K_j = sum_s c_s a_s^j b_s for j = 0..t_len-1
void build_taps(const double* a, const double* b, const double* c, int64_t t_len, int64_t s_dim,
                std::vector<double>& taps) {
  taps.assign(static_cast<size_t>(t_len), 0.0);
  std::vector<double> pw(static_cast<size_t>(s_dim), 1.0);
  for (int64_t j = 0; j < t_len; ++j) {
    double acc = 0.0;
    for (int64_t s = 0; s < s_dim; ++s) {
      acc += c[s] * pw[s] * b[s];
      pw[s] *= a[s];
    }
    taps[j] = acc;
  }
}

void conv_causal(const double* x, const double* taps, double* y, int64_t batch, int64_t t_len,
                 int64_t ch, bool parallel) {
  const int64_t rows = batch * t_len;
#pragma omp parallel for schedule(static) if (parallel && rows > 8)
  for (int64_t r = 0; r < rows; ++r) {
    const int64_t bt = r / t_len;
    const int64_t t = r % t_len;
    const double* xb = x + (bt * t_len) * ch;
    double* yr = y + r * ch;
    for (int64_t j = 0; j < ch; ++j) {
      double acc = 0.0;
      for (int64_t u = 0; u <= t; ++u) acc += taps[t - u] * xb[u * ch + j];
      yr[j] = acc;
    }
  }
}
}  // namespace

void scan_kernel_serial(const double* x, const double* a, const double* b, const double* c,
                        double* y, int64_t batch, int64_t t_len, int64_t ch, int64_t s_dim) {
  std::vector<double> taps;
  build_taps(a, b, c, t_len, s_dim, taps);
  conv_causal(x, taps.data(), y, batch, t_len, ch, false);
}

void scan_kernel_parallel(const double* x, const double* a, const double* b, const double* c,
                          double* y, int64_t batch, int64_t t_len, int64_t ch, int64_t s_dim) {
  std::vector<double> taps;
  build_taps(a, b, c, t_len, s_dim, taps);
  conv_causal(x, taps.data(), y, batch, t_len, ch, true);
}

void scan_kernel(const double* x, const double* a, const double* b, const double* c,
                 double* y, int64_t batch, int64_t t_len, int64_t ch, int64_t s_dim) {
  if (parallel_enabled())
    scan_kernel_parallel(x, a, b, c, y, batch, t_len, ch, s_dim);
  else
    scan_kernel_serial(x, a, b, c, y, batch, t_len, ch, s_dim);
}

void scan_grad(const double* x, const double* a, const double* b, const double* c,
               const double* gy, double* gx, double* ga, double* gb, double* gc,
               int64_t batch, int64_t t_len, int64_t ch, int64_t s_dim) {
  std::vector<double> taps;
  build_taps(a, b, c, t_len, s_dim, taps);

  // gx[u] += sum_{t>=u} K_{t-u} gy[t]  (anti-causal correlation)
  const int64_t rows = batch * t_len;
  const bool par = parallel_enabled();
#pragma omp parallel for schedule(static) if (par && rows > 8)
  for (int64_t r = 0; r < rows; ++r) {
    const int64_t bt = r / t_len;
    const int64_t u = r % t_len;
    const double* gb_seq = gy + (bt * t_len) * ch;
    double* gxr = gx + r * ch;
    for (int64_t j = 0; j < ch; ++j) {
      double acc = 0.0;
      for (int64_t t = u; t < t_len; ++t) acc += taps[t - u] * gb_seq[t * ch + j];
      gxr[j] += acc;
    }
  }

  // dK_j = sum_{bt,ch} sum_{t>=j} gy[t] x[t-j]; serial, taps are few.
  std::vector<double> dk(static_cast<size_t>(t_len), 0.0);
  for (int64_t bt = 0; bt < batch; ++bt) {
    const double* xs = x + (bt * t_len) * ch;
    const double* gs = gy + (bt * t_len) * ch;
    for (int64_t j = 0; j < t_len; ++j) {
      double acc = 0.0;
      for (int64_t t = j; t < t_len; ++t) {
        const double* gt = gs + t * ch;
        const double* xt = xs + (t - j) * ch;
        for (int64_t cch = 0; cch < ch; ++cch) acc += gt[cch] * xt[cch];
      }
      dk[j] += acc;
    }
  }

  // K_j = sum_s c_s a_s^j b_s
  for (int64_t s = 0; s < s_dim; ++s) {
    double pw = 1.0;      // a^j
    double pw_prev = 0.0; // a^{j-1}
    double da = 0.0, db_ = 0.0, dc_ = 0.0;
    for (int64_t j = 0; j < t_len; ++j) {
      da += dk[j] * c[s] * static_cast<double>(j) * pw_prev * b[s];
      db_ += dk[j] * c[s] * pw;
      dc_ += dk[j] * pw * b[s];
      pw_prev = pw;
      pw *= a[s];
    }
    ga[s] += da;
    gb[s] += db_;
    gc[s] += dc_;
  }
}

// ---- dense scan ----

void scan_dense_recursive(const double* x, const double* a_mat, const double* b, const double* c,
                          double* y, int64_t batch, int64_t t_len, int64_t ch, int64_t s_dim) {
  std::vector<double> h(static_cast<size_t>(s_dim)), hn(static_cast<size_t>(s_dim));
  for (int64_t bt = 0; bt < batch; ++bt) {
    for (int64_t j = 0; j < ch; ++j) {
      std::fill(h.begin(), h.end(), 0.0);
      const double* xs = x + (bt * t_len) * ch + j;
      double* ys = y + (bt * t_len) * ch + j;
      for (int64_t t = 0; t < t_len; ++t) {
        const double xv = xs[t * ch];
        for (int64_t r = 0; r < s_dim; ++r) {
          double acc = b[r] * xv;
          const double* ar = a_mat + r * s_dim;
          for (int64_t s = 0; s < s_dim; ++s) acc += ar[s] * h[s];
          hn[r] = acc;
        }
        h.swap(hn);
        double out = 0.0;
        for (int64_t s = 0; s < s_dim; ++s) out += c[s] * h[s];
        ys[t * ch] = out;
      }
    }
  }
}

void scan_dense_kernel(const double* x, const double* a_mat, const double* b, const double* c,
                       double* y, int64_t batch, int64_t t_len, int64_t ch, int64_t s_dim) {
  // taps K_j = c . (A^j b), built by repeated mat-vec
  std::vector<double> taps(static_cast<size_t>(t_len), 0.0);
  std::vector<double> w(b, b + s_dim), wn(static_cast<size_t>(s_dim));
  for (int64_t j = 0; j < t_len; ++j) {
    double acc = 0.0;
    for (int64_t s = 0; s < s_dim; ++s) acc += c[s] * w[s];
    taps[j] = acc;
    for (int64_t r = 0; r < s_dim; ++r) {
      double v = 0.0;
      const double* ar = a_mat + r * s_dim;
      for (int64_t s = 0; s < s_dim; ++s) v += ar[s] * w[s];
      wn[r] = v;
    }
    w.swap(wn);
  }
  conv_causal(x, taps.data(), y, batch, t_len, ch, parallel_enabled());
}

void scan_dense_grad(const double* x, const double* a_mat, const double* b, const double* c,
                     const double* gy, double* gx, double* ga, double* gb, double* gc,
                     int64_t batch, int64_t t_len, int64_t ch, int64_t s_dim) {
  // Adjoint of the recursion, recomputing the hidden trajectory per
  // (sequence, channel) slice to bound memory.
  std::vector<double> hs(static_cast<size_t>((t_len + 1) * s_dim), 0.0);
  std::vector<double> lam(static_cast<size_t>(s_dim)), lam_next(static_cast<size_t>(s_dim));
  for (int64_t bt = 0; bt < batch; ++bt) {
    for (int64_t j = 0; j < ch; ++j) {
      const double* xs = x + (bt * t_len) * ch + j;
      const double* gs = gy + (bt * t_len) * ch + j;
      double* gxs = gx + (bt * t_len) * ch + j;
      std::fill(hs.begin(), hs.begin() + s_dim, 0.0);
      for (int64_t t = 0; t < t_len; ++t) {
        const double* hp = hs.data() + t * s_dim;
        double* hn = hs.data() + (t + 1) * s_dim;
        const double xv = xs[t * ch];
        for (int64_t r = 0; r < s_dim; ++r) {
          double acc = b[r] * xv;
          const double* ar = a_mat + r * s_dim;
          for (int64_t s = 0; s < s_dim; ++s) acc += ar[s] * hp[s];
          hn[r] = acc;
        }
      }
      std::fill(lam_next.begin(), lam_next.end(), 0.0);
      for (int64_t t = t_len - 1; t >= 0; --t) {
        const double gv = gs[t * ch];
        const double* ht = hs.data() + (t + 1) * s_dim;
        const double* hprev = hs.data() + t * s_dim;
        for (int64_t s = 0; s < s_dim; ++s) gc[s] += gv * ht[s];
        // lam_t = c*gv + A^T lam_{t+1}
        for (int64_t s = 0; s < s_dim; ++s) {
          double acc = c[s] * gv;
          for (int64_t r = 0; r < s_dim; ++r) acc += a_mat[r * s_dim + s] * lam_next[r];
          lam[s] = acc;
        }
        double gxv = 0.0;
        for (int64_t s = 0; s < s_dim; ++s) {
          gxv += b[s] * lam[s];
          gb[s] += lam[s] * xs[t * ch];
          for (int64_t r = 0; r < s_dim; ++r) ga[s * s_dim + r] += lam[s] * hprev[r];
        }
        gxs[t * ch] += gxv;
        lam.swap(lam_next);
      }
    }
  }
}

}  // namespace radon::kern

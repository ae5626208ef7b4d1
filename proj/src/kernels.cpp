#include "adaedit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "adaedit/errors.hpp"

namespace adaedit {

namespace {

// Below this many multiply-adds the fork/join cost dominates.
constexpr std::int64_t kParallelWork = 1 << 15;

void check_matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw ShapeError("matmul: inner dimensions differ");
}

void check_attention(const Matrix& q, const Matrix& k, const Matrix& v, int heads) {
  if (heads < 1 || q.cols % heads != 0) throw ShapeError("attention: embed dim not divisible by heads");
  if (q.cols != k.cols || k.rows != v.rows || v.cols != q.cols)
    throw ShapeError("attention: q/k/v shapes do not agree");
}

inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& c, int i) {
  for (int j = 0; j < b.cols; ++j) {
    double acc = 0.0;
    for (int p = 0; p < a.cols; ++p) acc += a(i, p) * b(p, j);
    c(i, j) = acc;
  }
}

inline void softmax_row(std::span<double> r) {
  const double mx = *std::max_element(r.begin(), r.end());
  double sum = 0.0;
  for (double& x : r) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : r) x /= sum;
}

inline void rms_row(const Matrix& x, Matrix& out, int i, double eps) {
  double ss = 0.0;
  for (int j = 0; j < x.cols; ++j) ss += x(i, j) * x(i, j);
  const double inv = 1.0 / std::sqrt(ss / x.cols + eps);
  for (int j = 0; j < x.cols; ++j) out(i, j) = x(i, j) * inv;
}

// One query row of one head: fills probs row i and the head's slice of out.
inline void attention_row(const Matrix& q, const Matrix& k, const Matrix& v, int head, int dh,
                          Matrix& probs, Matrix& out, int i) {
  const int off = head * dh;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int j = 0; j < k.rows; ++j) {
    double dot = 0.0;
    for (int d = 0; d < dh; ++d) dot += q(i, off + d) * k(j, off + d);
    probs(i, j) = dot * scale;
  }
  softmax_row(probs.row(i));
  for (int d = 0; d < dh; ++d) {
    double acc = 0.0;
    for (int j = 0; j < k.rows; ++j) acc += probs(i, j) * v(j, off + d);
    out(i, off + d) = acc;
  }
}

}  // namespace

namespace kernels {

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_matmul(a, b);
  Matrix c(a.rows, b.cols);
  const std::int64_t work = static_cast<std::int64_t>(a.rows) * a.cols * b.cols;
#pragma omp parallel for schedule(static) if (work >= kParallelWork)
  for (int i = 0; i < a.rows; ++i) matmul_row(a, b, c, i);
  return c;
}

void softmax_rows(Matrix& m) {
  const std::int64_t work = static_cast<std::int64_t>(m.rows) * m.cols * 8;
#pragma omp parallel for schedule(static) if (work >= kParallelWork)
  for (int i = 0; i < m.rows; ++i) softmax_row(m.row(i));
}

Matrix rms_norm_rows(const Matrix& x, double eps) {
  Matrix out(x.rows, x.cols);
  const std::int64_t work = static_cast<std::int64_t>(x.rows) * x.cols * 4;
#pragma omp parallel for schedule(static) if (work >= kParallelWork)
  for (int i = 0; i < x.rows; ++i) rms_row(x, out, i, eps);
  return out;
}

AttentionOutput attention(const Matrix& q, const Matrix& k, const Matrix& v, int heads) {
  check_attention(q, k, v, heads);
  const int dh = q.cols / heads;
  AttentionOutput res{Matrix(q.rows, q.cols), std::vector<Matrix>(heads, Matrix(q.rows, k.rows))};
  const std::int64_t work = static_cast<std::int64_t>(q.rows) * k.rows * q.cols * 2;
  const int total = heads * q.rows;
#pragma omp parallel for schedule(static) if (work >= kParallelWork)
  for (int idx = 0; idx < total; ++idx) {
    const int h = idx / q.rows;
    const int i = idx % q.rows;
    attention_row(q, k, v, h, dh, res.probs[h], res.out, i);
  }
  return res;
}

}  // namespace kernels

namespace kernels::reference {

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_matmul(a, b);
  Matrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (int p = 0; p < a.cols; ++p) acc += a.data[i * a.cols + p] * b.data[p * b.cols + j];
      c.data[i * c.cols + j] = acc;
    }
  return c;
}

void softmax_rows(Matrix& m) {
  for (int i = 0; i < m.rows; ++i) {
    double mx = m(i, 0);
    for (int j = 1; j < m.cols; ++j) mx = std::max(mx, m(i, j));
    double sum = 0.0;
    for (int j = 0; j < m.cols; ++j) {
      m(i, j) = std::exp(m(i, j) - mx);
      sum += m(i, j);
    }
    for (int j = 0; j < m.cols; ++j) m(i, j) /= sum;
  }
}

Matrix rms_norm_rows(const Matrix& x, double eps) {
  Matrix out(x.rows, x.cols);
  for (int i = 0; i < x.rows; ++i) {
    double ss = 0.0;
    for (int j = 0; j < x.cols; ++j) ss += x(i, j) * x(i, j);
    const double inv = 1.0 / std::sqrt(ss / x.cols + eps);
    for (int j = 0; j < x.cols; ++j) out(i, j) = x(i, j) * inv;
  }
  return out;
}

AttentionOutput attention(const Matrix& q, const Matrix& k, const Matrix& v, int heads) {
  check_attention(q, k, v, heads);
  const int dh = q.cols / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  AttentionOutput res{Matrix(q.rows, q.cols), {}};
  for (int h = 0; h < heads; ++h) {
    Matrix scores(q.rows, k.rows);
    for (int i = 0; i < q.rows; ++i)
      for (int j = 0; j < k.rows; ++j) {
        double dot = 0.0;
        for (int d = 0; d < dh; ++d) dot += q(i, h * dh + d) * k(j, h * dh + d);
        scores(i, j) = dot * scale;
      }
    softmax_rows(scores);
    for (int i = 0; i < q.rows; ++i)
      for (int d = 0; d < dh; ++d) {
        double acc = 0.0;
        for (int j = 0; j < k.rows; ++j) acc += scores(i, j) * v(j, h * dh + d);
        res.out(i, h * dh + d) = acc;
      }
    res.probs.push_back(std::move(scores));
  }
  return res;
}

}  // namespace kernels::reference

}  // namespace adaedit

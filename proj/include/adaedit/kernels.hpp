#pragma once

#include <span>
#include <vector>

namespace adaedit {

/// Dense row-major matrix used inside the toy attention model and its cache.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  std::span<double> row(int r) { return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
  std::span<const double> row(int r) const { return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct AttentionOutput {
  Matrix out;                 // n x D
  std::vector<Matrix> probs;  // one n x n row-stochastic map per head
};

// OpenMP kernels. Work is split over output rows only and each output
// element is accumulated serially in a fixed order, so results are bitwise
// identical to the reference versions for any thread count.
namespace kernels {

Matrix matmul(const Matrix& a, const Matrix& b);
void softmax_rows(Matrix& m);
Matrix rms_norm_rows(const Matrix& x, double eps = 1e-6);
/// Multi-head scaled dot-product attention; q, k, v are n x D with D split
/// evenly across `heads`.
AttentionOutput attention(const Matrix& q, const Matrix& k, const Matrix& v, int heads);

}  // namespace kernels

// Single-threaded versions kept as the correctness reference for the
// parallel kernels and as the benchmark baseline.
namespace kernels::reference {

Matrix matmul(const Matrix& a, const Matrix& b);
void softmax_rows(Matrix& m);
Matrix rms_norm_rows(const Matrix& x, double eps = 1e-6);
AttentionOutput attention(const Matrix& q, const Matrix& k, const Matrix& v, int heads);

}  // namespace kernels::reference

}  // namespace adaedit

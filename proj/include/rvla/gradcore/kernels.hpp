#pragma once

// Dense kernels behind the autodiff graph. Every kernel exists twice: a
// plain serial reference and an OpenMP variant that partitions work over
// output rows (or batch items) so each output element keeps the serial
// accumulation order. The two are expected to agree bit for bit.

#include <cstddef>
#include <span>

namespace rvla::kernels {

struct ConvShape {
  std::size_t batch = 1;
  std::size_t channels = 1;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t filters = 1;
  std::size_t stride = 1;

  std::size_t out_height() const { return (height + stride - 1) / stride; }
  std::size_t out_width() const { return (width + stride - 1) / stride; }
  std::size_t patch() const { return channels * 9; }
  std::size_t out_pixels() const { return out_height() * out_width(); }
};

namespace serial {

// c = a(m x k) * b(k x n)
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n);
// ga(m x k) += gc(m x n) * b^T
void matmul_grad_a(std::span<const double> gc, std::span<const double> b, std::span<double> ga,
                   std::size_t m, std::size_t k, std::size_t n);
// gb(k x n) += a^T * gc
void matmul_grad_b(std::span<const double> a, std::span<const double> gc, std::span<double> gb,
                   std::size_t m, std::size_t k, std::size_t n);

// 3x3 cross-correlation with zero padding 1. x is N x C x H x W, w is
// F x C x 3 x 3, y is N x F x H' x W'. Direct loops, no patch buffer.
void conv3x3(std::span<const double> x, std::span<const double> w, std::span<double> y,
             const ConvShape& s);
void conv3x3_grad_input(std::span<const double> gy, std::span<const double> w,
                        std::span<double> gx, const ConvShape& s);
void conv3x3_grad_weight(std::span<const double> x, std::span<const double> gy,
                         std::span<double> gw, const ConvShape& s);

}  // namespace serial

namespace omp {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n);
void matmul_grad_a(std::span<const double> gc, std::span<const double> b, std::span<double> ga,
                   std::size_t m, std::size_t k, std::size_t n);
void matmul_grad_b(std::span<const double> a, std::span<const double> gc, std::span<double> gb,
                   std::size_t m, std::size_t k, std::size_t n);

// Patch-matrix (im2col) formulation. cols receives N x (C*9) x (H'*W') and
// is reused by the backward kernels.
void conv3x3(std::span<const double> x, std::span<const double> w, std::span<double> y,
             std::span<double> cols, const ConvShape& s);
void conv3x3_grad_input(std::span<const double> gy, std::span<const double> w,
                        std::span<double> gx, const ConvShape& s);
void conv3x3_grad_weight(std::span<const double> cols, std::span<const double> gy,
                         std::span<double> gw, const ConvShape& s);

}  // namespace omp

// Number of threads the OpenMP variants will use (1 without OpenMP).
int max_threads();

}  // namespace rvla::kernels

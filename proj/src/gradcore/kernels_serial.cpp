#include "rvla/gradcore/kernels.hpp"

namespace rvla::kernels::serial {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_grad_a(std::span<const double> gc, std::span<const double> b, std::span<double> ga,
                   std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = gc.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b.data() + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
      ga[i * k + p] += acc;
    }
  }
}

void matmul_grad_b(std::span<const double> a, std::span<const double> gc, std::span<double> gb,
                   std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    double* brow = gb.data() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = a[i * k + p];
      const double* grow = gc.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) brow[j] += av * grow[j];
    }
  }
}

namespace {

// Input coordinate for output index o and kernel tap t in {0,1,2}, or -1
// when the tap falls in the zero padding.
inline long tap(std::size_t o, std::size_t t, std::size_t stride, std::size_t extent) {
  const long v = static_cast<long>(o * stride + t) - 1;
  return (v < 0 || v >= static_cast<long>(extent)) ? -1 : v;
}

}  // namespace

void conv3x3(std::span<const double> x, std::span<const double> w, std::span<double> y,
             const ConvShape& s) {
  const std::size_t ho = s.out_height(), wo = s.out_width();
  for (std::size_t n = 0; n < s.batch; ++n) {
    for (std::size_t f = 0; f < s.filters; ++f) {
      for (std::size_t oy = 0; oy < ho; ++oy) {
        for (std::size_t ox = 0; ox < wo; ++ox) {
          double acc = 0.0;
          for (std::size_t c = 0; c < s.channels; ++c) {
            for (std::size_t ky = 0; ky < 3; ++ky) {
              for (std::size_t kx = 0; kx < 3; ++kx) {
                const long iy = tap(oy, ky, s.stride, s.height);
                const long ix = tap(ox, kx, s.stride, s.width);
                const double xv =
                    (iy < 0 || ix < 0)
                        ? 0.0
                        : x[((n * s.channels + c) * s.height + static_cast<std::size_t>(iy)) *
                                s.width +
                            static_cast<std::size_t>(ix)];
                acc += w[((f * s.channels + c) * 3 + ky) * 3 + kx] * xv;
              }
            }
          }
          y[((n * s.filters + f) * ho + oy) * wo + ox] = acc;
        }
      }
    }
  }
}

void conv3x3_grad_input(std::span<const double> gy, std::span<const double> w,
                        std::span<double> gx, const ConvShape& s) {
  const std::size_t ho = s.out_height(), wo = s.out_width();
  for (std::size_t n = 0; n < s.batch; ++n) {
    for (std::size_t c = 0; c < s.channels; ++c) {
      for (std::size_t ky = 0; ky < 3; ++ky) {
        for (std::size_t kx = 0; kx < 3; ++kx) {
          for (std::size_t oy = 0; oy < ho; ++oy) {
            for (std::size_t ox = 0; ox < wo; ++ox) {
              const long iy = tap(oy, ky, s.stride, s.height);
              const long ix = tap(ox, kx, s.stride, s.width);
              if (iy < 0 || ix < 0) continue;
              double acc = 0.0;
              for (std::size_t f = 0; f < s.filters; ++f)
                acc += w[((f * s.channels + c) * 3 + ky) * 3 + kx] *
                       gy[((n * s.filters + f) * ho + oy) * wo + ox];
              gx[((n * s.channels + c) * s.height + static_cast<std::size_t>(iy)) * s.width +
                 static_cast<std::size_t>(ix)] += acc;
            }
          }
        }
      }
    }
  }
}

void conv3x3_grad_weight(std::span<const double> x, std::span<const double> gy,
                         std::span<double> gw, const ConvShape& s) {
  const std::size_t ho = s.out_height(), wo = s.out_width();
  for (std::size_t f = 0; f < s.filters; ++f) {
    for (std::size_t n = 0; n < s.batch; ++n) {
      for (std::size_t c = 0; c < s.channels; ++c) {
        for (std::size_t ky = 0; ky < 3; ++ky) {
          for (std::size_t kx = 0; kx < 3; ++kx) {
            double acc = 0.0;
            for (std::size_t oy = 0; oy < ho; ++oy) {
              for (std::size_t ox = 0; ox < wo; ++ox) {
                const long iy = tap(oy, ky, s.stride, s.height);
                const long ix = tap(ox, kx, s.stride, s.width);
                const double xv =
                    (iy < 0 || ix < 0)
                        ? 0.0
                        : x[((n * s.channels + c) * s.height + static_cast<std::size_t>(iy)) *
                                s.width +
                            static_cast<std::size_t>(ix)];
                acc += gy[((n * s.filters + f) * ho + oy) * wo + ox] * xv;
              }
            }
            gw[((f * s.channels + c) * 3 + ky) * 3 + kx] += acc;
          }
        }
      }
    }
  }
}

}  // namespace rvla::kernels::serial

#include "rvla/gradcore/kernels.hpp"

#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rvla::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace omp {

namespace {
constexpr std::size_t kParallelWork = 1 << 15;

using Index = long long;
}  // namespace

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (Index ii = 0; ii < static_cast<Index>(m); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
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
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (Index ii = 0; ii < static_cast<Index>(m); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
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
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (Index pp = 0; pp < static_cast<Index>(k); ++pp) {
    const auto p = static_cast<std::size_t>(pp);
    double* brow = gb.data() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = a[i * k + p];
      const double* grow = gc.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) brow[j] += av * grow[j];
    }
  }
}

namespace {

void im2col(const double* x, double* cols, const ConvShape& s) {
  const std::size_t ho = s.out_height(), wo = s.out_width(), np = ho * wo;
  for (std::size_t c = 0; c < s.channels; ++c) {
    const double* xc = x + c * s.height * s.width;
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        double* row = cols + ((c * 3 + ky) * 3 + kx) * np;
        for (std::size_t oy = 0; oy < ho; ++oy) {
          const long iy = static_cast<long>(oy * s.stride + ky) - 1;
          for (std::size_t ox = 0; ox < wo; ++ox) {
            const long ix = static_cast<long>(ox * s.stride + kx) - 1;
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<long>(s.height) &&
                                ix < static_cast<long>(s.width);
            row[oy * wo + ox] =
                inside ? xc[static_cast<std::size_t>(iy) * s.width + static_cast<std::size_t>(ix)]
                       : 0.0;
          }
        }
      }
    }
  }
}

}  // namespace

void conv3x3(std::span<const double> x, std::span<const double> w, std::span<double> y,
             std::span<double> cols, const ConvShape& s) {
  const std::size_t np = s.out_pixels(), q = s.patch();
  const std::size_t in_size = s.channels * s.height * s.width;
#pragma omp parallel for schedule(static) if (s.batch * s.filters * q * np > kParallelWork)
  for (Index nn = 0; nn < static_cast<Index>(s.batch); ++nn) {
    const auto n = static_cast<std::size_t>(nn);
    double* cn = cols.data() + n * q * np;
    im2col(x.data() + n * in_size, cn, s);
    double* yn = y.data() + n * s.filters * np;
    for (std::size_t f = 0; f < s.filters; ++f) {
      double* yrow = yn + f * np;
      for (std::size_t j = 0; j < np; ++j) yrow[j] = 0.0;
      for (std::size_t p = 0; p < q; ++p) {
        const double wv = w[f * q + p];
        const double* crow = cn + p * np;
        for (std::size_t j = 0; j < np; ++j) yrow[j] += wv * crow[j];
      }
    }
  }
}

void conv3x3_grad_input(std::span<const double> gy, std::span<const double> w,
                        std::span<double> gx, const ConvShape& s) {
  const std::size_t ho = s.out_height(), wo = s.out_width(), np = ho * wo, q = s.patch();
  const std::size_t in_size = s.channels * s.height * s.width;
#pragma omp parallel for schedule(static) if (s.batch * s.filters * q * np > kParallelWork)
  for (Index nn = 0; nn < static_cast<Index>(s.batch); ++nn) {
    const auto n = static_cast<std::size_t>(nn);
    const double* gyn = gy.data() + n * s.filters * np;
    double* gxn = gx.data() + n * in_size;
    std::vector<double> acc(np);
    for (std::size_t c = 0; c < s.channels; ++c) {
      for (std::size_t ky = 0; ky < 3; ++ky) {
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const std::size_t p = (c * 3 + ky) * 3 + kx;
          for (std::size_t j = 0; j < np; ++j) acc[j] = 0.0;
          // Per-pixel sum over filters, in filter order.
          for (std::size_t j = 0; j < np; ++j) {
            double a = 0.0;
            for (std::size_t f = 0; f < s.filters; ++f) a += w[f * q + p] * gyn[f * np + j];
            acc[j] = a;
          }
          for (std::size_t oy = 0; oy < ho; ++oy) {
            const long iy = static_cast<long>(oy * s.stride + ky) - 1;
            if (iy < 0 || iy >= static_cast<long>(s.height)) continue;
            for (std::size_t ox = 0; ox < wo; ++ox) {
              const long ix = static_cast<long>(ox * s.stride + kx) - 1;
              if (ix < 0 || ix >= static_cast<long>(s.width)) continue;
              gxn[(c * s.height + static_cast<std::size_t>(iy)) * s.width +
                  static_cast<std::size_t>(ix)] += acc[oy * wo + ox];
            }
          }
        }
      }
    }
  }
}

void conv3x3_grad_weight(std::span<const double> cols, std::span<const double> gy,
                         std::span<double> gw, const ConvShape& s) {
  const std::size_t np = s.out_pixels(), q = s.patch();
#pragma omp parallel for schedule(static) if (s.batch * s.filters * q * np > kParallelWork)
  for (Index ff = 0; ff < static_cast<Index>(s.filters); ++ff) {
    const auto f = static_cast<std::size_t>(ff);
    for (std::size_t n = 0; n < s.batch; ++n) {
      const double* gyrow = gy.data() + (n * s.filters + f) * np;
      const double* cn = cols.data() + n * q * np;
      for (std::size_t p = 0; p < q; ++p) {
        const double* crow = cn + p * np;
        double acc = 0.0;
        for (std::size_t j = 0; j < np; ++j) acc += gyrow[j] * crow[j];
        gw[f * q + p] += acc;
      }
    }
  }
}

}  // namespace omp
}  // namespace rvla::kernels

#include <array>
#include <vector>

#include "doctest.h"
#include "rvla/common/random.hpp"
#include "rvla/gradcore/kernels.hpp"

using namespace rvla;
namespace k = rvla::kernels;

namespace {
std::vector<double> random_vec(Stream& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}
}  // namespace

TEST_CASE("OpenMP matmul kernels agree bit for bit with the serial reference") {
  Stream rng(21);
  const std::vector<std::array<std::size_t, 3>> dims = {{1, 1, 1}, {3, 5, 2}, {32, 127, 128}, {64, 1024, 64}};
  for (auto [m, kk, n] : dims) {
    const auto a = random_vec(rng, m * kk), b = random_vec(rng, kk * n), gc = random_vec(rng, m * n);
    std::vector<double> c1(m * n), c2(m * n);
    k::serial::matmul(a, b, c1, m, kk, n);
    k::omp::matmul(a, b, c2, m, kk, n);
    CHECK(c1 == c2);
    std::vector<double> ga1(m * kk, 0.5), ga2(m * kk, 0.5), gb1(kk * n), gb2(kk * n);
    k::serial::matmul_grad_a(gc, b, ga1, m, kk, n);
    k::omp::matmul_grad_a(gc, b, ga2, m, kk, n);
    CHECK(ga1 == ga2);
    k::serial::matmul_grad_b(a, gc, gb1, m, kk, n);
    k::omp::matmul_grad_b(a, gc, gb2, m, kk, n);
    CHECK(gb1 == gb2);
  }
}

TEST_CASE("OpenMP conv kernels agree bit for bit with the direct loops") {
  Stream rng(22);
  const std::vector<k::ConvShape> shapes = {
      {.batch = 1, .channels = 1, .height = 4, .width = 4, .filters = 1, .stride = 1},
      {.batch = 3, .channels = 3, .height = 32, .width = 32, .filters = 8, .stride = 2},
      {.batch = 2, .channels = 8, .height = 16, .width = 16, .filters = 16, .stride = 2},
      {.batch = 2, .channels = 2, .height = 5, .width = 7, .filters = 3, .stride = 1}};
  for (const auto& s : shapes) {
    const std::size_t nx = s.batch * s.channels * s.height * s.width;
    const std::size_t ny = s.batch * s.filters * s.out_pixels();
    const auto x = random_vec(rng, nx), w = random_vec(rng, s.filters * s.patch()),
               gy = random_vec(rng, ny);
    std::vector<double> y1(ny), y2(ny), cols(s.batch * s.patch() * s.out_pixels());
    k::serial::conv3x3(x, w, y1, s);
    k::omp::conv3x3(x, w, y2, cols, s);
    CHECK(y1 == y2);
    std::vector<double> gx1(nx), gx2(nx);
    k::serial::conv3x3_grad_input(gy, w, gx1, s);
    k::omp::conv3x3_grad_input(gy, w, gx2, s);
    CHECK(gx1 == gx2);
    std::vector<double> gw1(w.size()), gw2(w.size());
    k::serial::conv3x3_grad_weight(x, gy, gw1, s);
    k::omp::conv3x3_grad_weight(cols, gy, gw2, s);
    CHECK(gw1 == gw2);
  }
}

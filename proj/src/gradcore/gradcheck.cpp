#include "rvla/gradcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "rvla/common/random.hpp"

namespace rvla {

namespace {

double forward_loss(const LossBuilder& build, const std::vector<Tensor>& inputs) {
  Graph g;
  std::vector<NodeId> ids;
  for (const Tensor& t : inputs) ids.push_back(g.constant(t));
  return g.value(build(g, ids)).item();
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

std::vector<Tensor> numeric_gradients(const LossBuilder& build, const std::vector<Tensor>& inputs,
                                      double step) {
  std::vector<Tensor> grads;
  std::vector<Tensor> work = inputs;
  for (std::size_t k = 0; k < work.size(); ++k) {
    Tensor gk(work[k].shape());
    for (std::size_t i = 0; i < work[k].numel(); ++i) {
      const double orig = work[k][i];
      work[k][i] = orig + step;
      const double up = forward_loss(build, work);
      work[k][i] = orig - step;
      const double down = forward_loss(build, work);
      work[k][i] = orig;
      gk[i] = (up - down) / (2.0 * step);
    }
    grads.push_back(std::move(gk));
  }
  return grads;
}

std::vector<Tensor> analytic_gradients(const LossBuilder& build,
                                       const std::vector<Tensor>& inputs) {
  Graph g;
  std::vector<NodeId> ids;
  for (const Tensor& t : inputs) ids.push_back(g.input(t));
  g.backward(build(g, ids));
  std::vector<Tensor> grads;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    Tensor gk(inputs[k].shape());
    auto src = g.grad(ids[k]);
    std::copy(src.begin(), src.end(), gk.data().begin());
    grads.push_back(std::move(gk));
  }
  return grads;
}

double gradient_rel_error(const LossBuilder& build, const std::vector<Tensor>& inputs,
                          double step) {
  const auto an = analytic_gradients(build, inputs);
  const auto nu = numeric_gradients(build, inputs, step);
  double worst = 0.0;
  for (std::size_t k = 0; k < an.size(); ++k) {
    std::vector<double> diff(an[k].numel());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = an[k][i] - nu[k][i];
    const double scale = std::max({norm(an[k].data()), norm(nu[k].data()), 1e-12});
    worst = std::max(worst, norm(diff) / scale);
  }
  return worst;
}

namespace {

Tensor random_tensor(Stream& rng, Shape shape, double scale = 0.1) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = scale * rng.normal();
  return t;
}

// Random values bounded away from zero, for the ReLU kink.
Tensor off_kink_tensor(Stream& rng, Shape shape) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) {
    const double mag = 0.02 + 0.1 * rng.uniform();
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

// Contract an arbitrary output against fixed random weights so every
// output element contributes to the scalar loss.
NodeId project(Graph& g, NodeId out, std::uint64_t seed) {
  Stream rng(seed);
  Tensor w = random_tensor(rng, g.value(out).shape(), 1.0);
  return g.sum(g.mul(out, g.constant(std::move(w))));
}

}  // namespace

std::vector<GradCheckResult> check_primitives(std::uint64_t seed, double tolerance) {
  std::vector<GradCheckResult> results;
  Stream rng(derive_seed(seed, {hash_tag("gradcheck")}));
  std::uint64_t proj_seed = derive_seed(seed, {1});
  auto run = [&](const std::string& name, LossBuilder build, std::vector<Tensor> inputs) {
    const double err = gradient_rel_error(build, inputs);
    results.push_back({name, err, err < tolerance});
  };
  auto projected = [&](std::function<NodeId(Graph&, std::span<const NodeId>)> op) {
    const std::uint64_t s = ++proj_seed;
    return LossBuilder([op, s](Graph& g, std::span<const NodeId> in) {
      return project(g, op(g, in), s);
    });
  };

  const std::vector<std::pair<Shape, Shape>> mm_shapes = {
      {{2, 3}, {3, 4}}, {{1, 5}, {5, 1}}, {{4, 2}, {2, 3}}};
  for (const auto& [sa, sb] : mm_shapes)
    run("matmul " + shape_to_string(sa) + "x" + shape_to_string(sb),
        projected([](Graph& g, auto in) { return g.matmul(in[0], in[1]); }),
        {random_tensor(rng, sa), random_tensor(rng, sb)});

  for (const Shape& s : {Shape{3}, Shape{2, 4}}) {
    run("add " + shape_to_string(s), projected([](Graph& g, auto in) { return g.add(in[0], in[1]); }),
        {random_tensor(rng, s), random_tensor(rng, s)});
    run("sub " + shape_to_string(s), projected([](Graph& g, auto in) { return g.sub(in[0], in[1]); }),
        {random_tensor(rng, s), random_tensor(rng, s)});
    run("mul " + shape_to_string(s), projected([](Graph& g, auto in) { return g.mul(in[0], in[1]); }),
        {random_tensor(rng, s), random_tensor(rng, s)});
    run("scale " + shape_to_string(s),
        projected([](Graph& g, auto in) { return g.scale(in[0], -1.7); }), {random_tensor(rng, s)});
    run("tanh " + shape_to_string(s), projected([](Graph& g, auto in) { return g.tanh(in[0]); }),
        {random_tensor(rng, s, 0.8)});
    run("relu " + shape_to_string(s), projected([](Graph& g, auto in) { return g.relu(in[0]); }),
        {off_kink_tensor(rng, s)});
    run("clamp " + shape_to_string(s),
        projected([](Graph& g, auto in) { return g.clamp(in[0], -0.06, 0.06); }),
        {off_kink_tensor(rng, s)});
    run("sum " + shape_to_string(s), [](Graph& g, auto in) { return g.sum(in[0]); },
        {random_tensor(rng, s)});
    run("mean " + shape_to_string(s), [](Graph& g, auto in) { return g.mean(in[0]); },
        {random_tensor(rng, s)});
    run("mse " + shape_to_string(s), [](Graph& g, auto in) { return g.mse(in[0], in[1]); },
        {random_tensor(rng, s), random_tensor(rng, s)});
  }

  run("add_row (3,4)+(4)", projected([](Graph& g, auto in) { return g.add_row(in[0], in[1]); }),
      {random_tensor(rng, {3, 4}), random_tensor(rng, {4})});

  struct ConvCase {
    Shape x;
    Shape k;
    std::size_t stride;
  };
  const std::vector<ConvCase> conv_cases = {{{1, 4, 4}, {2, 1, 3, 3}, 1},
                                            {{2, 5, 5}, {3, 2, 3, 3}, 2},
                                            {{2, 2, 4, 4}, {2, 2, 3, 3}, 1},
                                            {{2, 3, 6, 5}, {2, 3, 3, 3}, 2}};
  for (const auto& c : conv_cases) {
    const std::size_t stride = c.stride;
    run("conv2d x" + shape_to_string(c.x) + " k" + shape_to_string(c.k) + " s" +
            std::to_string(stride),
        projected([stride](Graph& g, auto in) { return g.conv2d(in[0], in[1], stride); }),
        {random_tensor(rng, c.x), random_tensor(rng, c.k)});
  }
  run("add_channel_bias (2,3,2,2)",
      projected([](Graph& g, auto in) { return g.add_channel_bias(in[0], in[1]); }),
      {random_tensor(rng, {2, 3, 2, 2}), random_tensor(rng, {3})});
  run("reshape (2,3)->(3,2)", projected([](Graph& g, auto in) { return g.reshape(in[0], {3, 2}); }),
      {random_tensor(rng, {2, 3})});
  run("concat_cols", projected([](Graph& g, auto in) {
        const NodeId parts[] = {in[0], in[1], in[2]};
        return g.concat_cols(parts);
      }),
      {random_tensor(rng, {2, 1}), random_tensor(rng, {2, 3}), random_tensor(rng, {2, 2})});
  run("embedding_mean", projected([](Graph& g, auto in) {
        static const int tokens[] = {0, 2, 2, 1, 3, 0};
        return g.embedding_mean(in[0], tokens, 3);
      }),
      {random_tensor(rng, {4, 3})});
  for (std::size_t classes : {2u, 5u}) {
    std::vector<int> targets = {0, static_cast<int>(classes) - 1, 1};
    run("softmax_cross_entropy (3," + std::to_string(classes) + ")",
        [targets](Graph& g, auto in) { return g.softmax_cross_entropy(in[0], targets); },
        {random_tensor(rng, {3, classes}, 1.0)});
  }
  for (std::size_t cols : {3u, 7u})
    run("softmax_rows (2," + std::to_string(cols) + ")",
        projected([](Graph& g, auto in) { return g.softmax_rows(in[0]); }), {random_tensor(rng, {2, cols}, 1.0)});
  // A small composite: mse(W x, y) through tanh and a bias row.
  run("composite linear-tanh-mse", [](Graph& g, auto in) {
        return g.mse(g.tanh(g.add_row(g.matmul(in[0], in[1]), in[2])), in[3]);
      },
      {random_tensor(rng, {3, 4}), random_tensor(rng, {4, 2}), random_tensor(rng, {2}),
       random_tensor(rng, {3, 2})});
  return results;
}

}  // namespace rvla

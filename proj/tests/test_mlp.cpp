#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gradcheck.hpp"
#include "xdesc/losses.hpp"
#include "xdesc/mlp.hpp"
#include "xdesc/rng.hpp"

using namespace xdesc;
using xdesc::test::MatD;

namespace {

int count_linear(const Mlp<float>& m) {
  int n = 0;
  for (const auto& l : m.layers)
    if (l.spec.kind == LayerKind::linear) ++n;
  return n;
}

MatD random_batch(int rows, int cols, std::uint64_t seed, double offset = 0.0) {
  Rng rng(seed);
  MatD x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal() + offset;
  return x;
}

// squared-error loss used as upstream for model gradient checks
test::LossOnOutput sq_loss_to(const MatD& target) {
  return [target](const MatD& pred) {
    LossValueGrad<double> out;
    out.value = 0.5 * (pred - target).squaredNorm();
    out.grad_pred = pred - target;
    return out;
  };
}

}  // namespace

TEST_CASE("build_mlp follows the block layout") {
  // decoder-style: 128 -> 1024 -> 1024 -> 128 with relu+unit_l2 head
  const auto dec = build_mlp<float>(128, {1024, 1024}, 128, OutputHead::relu_unit_l2, 1);
  CHECK(count_linear(dec) == 3);
  CHECK(dec.in_dim() == 128);
  CHECK(dec.out_dim() == 128);
  // hidden block order: linear, relu, batchnorm
  REQUIRE(dec.layers.size() == 3 * 2 + 3);
  CHECK(dec.layers[0].spec.kind == LayerKind::linear);
  CHECK(dec.layers[1].spec.kind == LayerKind::relu);
  CHECK(dec.layers[2].spec.kind == LayerKind::batchnorm);
  CHECK(dec.layers[3].spec.kind == LayerKind::linear);
  CHECK(dec.layers[6].spec.kind == LayerKind::linear);
  CHECK(dec.layers[7].spec.kind == LayerKind::relu);
  CHECK(dec.layers[8].spec.kind == LayerKind::unit_l2);

  // encoder-style: 512 -> 1024 -> 1024 -> 128, unit_l2 head
  const auto enc = build_mlp<float>(512, {1024, 1024}, 128, OutputHead::unit_l2, 2);
  CHECK(enc.in_dim() == 512);
  CHECK(enc.out_dim() == 128);
  CHECK(count_linear(enc) == 3);

  // single linear layer when hidden_dims is empty
  const auto flat = build_mlp<float>(8, {}, 4, OutputHead::none, 3);
  CHECK(flat.layers.size() == 1);

  CHECK_THROWS_AS(build_mlp<float>(0, {16}, 4, OutputHead::none, 1), ConfigError);
  CHECK_THROWS_AS(build_mlp<float>(8, {-1}, 4, OutputHead::none, 1), ConfigError);
}

TEST_CASE("build_mlp is deterministic in the seed") {
  const auto a = build_mlp<float>(16, {32, 32}, 8, OutputHead::unit_l2, 42);
  const auto b = build_mlp<float>(16, {32, 32}, 8, OutputHead::unit_l2, 42);
  const auto c = build_mlp<float>(16, {32, 32}, 8, OutputHead::unit_l2, 43);
  REQUIRE(a.layers.size() == b.layers.size());
  bool all_equal = true, any_diff_c = false;
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    if (a.layers[k].spec.kind != LayerKind::linear) continue;
    all_equal = all_equal && (a.layers[k].weight == b.layers[k].weight);
    any_diff_c = any_diff_c || (a.layers[k].weight != c.layers[k].weight);
  }
  CHECK(all_equal);
  CHECK(any_diff_c);
}

TEST_CASE("identity linear forward and sigmoid at zero") {
  Mlp<float> model;
  Layer<float> lin;
  lin.spec = {LayerKind::linear, 3, 3};
  lin.weight = MatrixF::Identity(3, 3);
  lin.bias = VectorF::Zero(3);
  model.layers.push_back(lin);
  model.mode = RunMode::eval;

  MatrixF x(2, 3);
  x << 1, 2, 3, 4, 5, 6;
  CHECK(forward(model, x) == x);

  Mlp<float> sig = model;
  Layer<float> s;
  s.spec = {LayerKind::sigmoid, 3, 3};
  sig.layers.push_back(s);
  sig.layers[0].weight.setZero();
  const MatrixF y = forward(sig, x);
  CHECK((y.array() == 0.5f).all());
}

TEST_CASE("eval-mode forward is bit-stable and never mutates state") {
  auto model = build_mlp<float>(6, {12}, 4, OutputHead::unit_l2, 7);
  model.mode = RunMode::eval;
  const MatrixF x = random_batch(5, 6, 3).cast<float>();
  const MatrixF y1 = forward(model, x);
  const Mlp<float> snapshot = model;
  const MatrixF y2 = forward(model, x);
  CHECK(y1 == y2);
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    if (model.layers[k].spec.kind != LayerKind::batchnorm) continue;
    CHECK(model.layers[k].running_mean == snapshot.layers[k].running_mean);
    CHECK(model.layers[k].running_var == snapshot.layers[k].running_var);
  }
}

TEST_CASE("train-mode guards") {
  auto model = build_mlp<float>(4, {8}, 2, OutputHead::none, 7);
  ForwardCache<float> cache;
  MatrixF one_row = MatrixF::Ones(1, 4);
  CHECK_THROWS_AS(forward_train(model, one_row, cache), BatchTooSmall);

  MatrixF bad = MatrixF::Ones(3, 4);
  bad(1, 2) = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(forward_train(model, bad, cache), NumericsError);

  MatrixF ok = MatrixF::Ones(3, 4);
  ok(1, 1) = -2.0f;
  ok(2, 3) = 0.5f;
  forward_train(model, ok, cache);
  const MatrixF g = MatrixF::Ones(3, 2);
  CHECK_NOTHROW(backward(model, g, cache));
  ++model.version;  // parameters changed since the forward
  CHECK_THROWS_AS(backward(model, g, cache), StaleCache);
}

TEST_CASE("batch-norm train output is standardized before scale/shift") {
  auto model = build_mlp<float>(5, {16}, 3, OutputHead::none, 9);
  ForwardCache<float> cache;
  const MatrixF x = random_batch(64, 5, 17).cast<float>();
  forward_train(model, x, cache);
  // the batchnorm layer is index 2; xhat holds the pre-scale output
  const auto& xhat = cache.layers[2].xhat;
  REQUIRE(xhat.rows() == 64);
  for (Eigen::Index c = 0; c < xhat.cols(); ++c) {
    const float mean = xhat.col(c).mean();
    const float var = (xhat.col(c).array() - mean).square().mean();
    CHECK(std::abs(mean) < 1e-6f);
    CHECK(var == doctest::Approx(1.0f).epsilon(1e-4));
  }
}

TEST_CASE("linear-regression gradient matches the closed form") {
  // hand case: W=[[1,2],[3,4]], x rows e_1, e_2, targets zero/one
  Mlp<float> model;
  Layer<float> lin;
  lin.spec = {LayerKind::linear, 2, 2};
  lin.weight.resize(2, 2);
  lin.weight << 1, 2, 3, 4;
  lin.bias = VectorF::Zero(2);
  model.layers.push_back(lin);

  MatrixF x(2, 2);
  x << 1, 0, 0, 1;
  MatrixF target(2, 2);
  target << 0, 0, 1, 1;

  ForwardCache<float> cache;
  const MatrixF pred = forward_train(model, x, cache);
  const MatrixF residual = pred - target;  // upstream of 0.5*||Wx-y||^2
  const auto grads = backward(model, residual, cache);

  MatrixF expected(2, 2);
  expected << 1, 1, 3, 3;  // sum_b residual_b x_b^T
  CHECK(grads.layers[0].weight == expected);
  CHECK(grads.layers[0].bias[0] == doctest::Approx(2.0f));
  CHECK(grads.layers[0].bias[1] == doctest::Approx(6.0f));
}

TEST_CASE("finite differences confirm gradients for every layer kind") {
  // covers linear, relu, batchnorm, sigmoid
  {
    auto model = build_mlp<double>(5, {7}, 3, OutputHead::sigmoid, 21);
    MatD batch = random_batch(6, 5, 31, 0.3);
    int seed = 31;
    while (test::near_relu_kink(model, batch)) batch = random_batch(6, 5, ++seed, 0.3);
    const MatD target = random_batch(6, 3, 77);
    CHECK(test::gradcheck_model(model, batch, sq_loss_to(target)) < 1e-4);
  }
  // covers unit_l2 head
  {
    auto model = build_mlp<double>(4, {6}, 5, OutputHead::unit_l2, 22);
    MatD batch = random_batch(5, 4, 41, 0.2);
    int seed = 41;
    while (test::near_relu_kink(model, batch)) batch = random_batch(5, 4, ++seed, 0.2);
    const MatD target = random_batch(5, 5, 78);
    CHECK(test::gradcheck_model(model, batch, sq_loss_to(target)) < 1e-4);
  }
  // relu+unit_l2 head
  {
    auto model = build_mlp<double>(4, {6, 6}, 5, OutputHead::relu_unit_l2, 23);
    MatD batch = random_batch(5, 4, 51, 0.4);
    int seed = 51;
    while (test::near_relu_kink(model, batch)) batch = random_batch(5, 4, ++seed, 0.4);
    const MatD target = random_batch(5, 5, 79);
    CHECK(test::gradcheck_model(model, batch, sq_loss_to(target)) < 1e-4);
  }
}

TEST_CASE("unit_l2 backward matches the projection formula") {
  // dv = (g - (g.v_hat) v_hat) / ||v|| for a single row, checked numerically
  Mlp<double> model;
  Layer<double> layer;
  layer.spec = {LayerKind::unit_l2, 4, 4};
  model.layers.push_back(layer);

  const MatD v = random_batch(2, 4, 61);
  const MatD g = random_batch(2, 4, 62);

  ForwardCache<double> cache;
  forward_train(model, v, cache);
  const auto grads = backward(model, g, cache);

  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const Eigen::RowVectorXd vr = v.row(r);
    const Eigen::RowVectorXd vhat = vr / vr.norm();
    const Eigen::RowVectorXd expect =
        (g.row(r) - g.row(r).dot(vhat) * vhat) / vr.norm();
    CHECK((grads.input.row(r) - expect).norm() < 1e-12);
  }

  auto fn = [&](const MatD& x) {
    Mlp<double> copy = model;
    ForwardCache<double> c;
    const MatD y = forward_train(copy, x, c);
    return (y.array() * g.array()).sum();
  };
  CHECK(test::gradcheck_fn(fn, v, grads.input) < 1e-4);
}

TEST_CASE("adam single-step and zero-gradient behavior") {
  float p = 0.0f;
  float g = 1.0f;
  AdamConfig cfg;
  cfg.lr = 0.1f;
  std::vector<TensorRef> params = {{&p, 1}};
  std::vector<TensorRef> grads = {{&g, 1}};
  AdamState adam(cfg, params);
  adam.step(params, grads);
  CHECK(p == doctest::Approx(-0.1f).epsilon(1e-6));
  CHECK(adam.steps() == 1);

  // zero gradient: params unchanged up to eps-scale drift
  float q = 1.5f;
  float zg = 0.0f;
  std::vector<TensorRef> qp = {{&q, 1}};
  std::vector<TensorRef> qg = {{&zg, 1}};
  AdamState adam2(cfg, qp);
  adam2.step(qp, qg);
  CHECK(std::abs(q - 1.5f) < 1e-12f);

  float nan_g = std::numeric_limits<float>::quiet_NaN();
  std::vector<TensorRef> ng = {{&nan_g, 1}};
  CHECK_THROWS_AS(adam2.step(qp, ng), NumericsError);
  CHECK(q == 1.5f);  // step rejected, nothing moved
}

TEST_CASE("identical seeds give identical training trajectories") {
  auto run = [] {
    auto model = build_mlp<float>(6, {12}, 6, OutputHead::none, 5);
    AdamState adam(AdamConfig{}, param_refs(model));
    Rng rng(17);
    for (int it = 0; it < 5; ++it) {
      MatrixF x(4, 6), t(4, 6);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(rng.normal());
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<float>(rng.normal());
      ForwardCache<float> cache;
      const MatrixF pred = forward_train(model, x, cache);
      auto grads = backward(model, pred - t, cache);
      adam.step(param_refs(model), grad_refs(grads));
      ++model.version;
    }
    return model;
  };
  const auto a = run();
  const auto b = run();
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    if (a.layers[k].spec.kind == LayerKind::linear) {
      CHECK(a.layers[k].weight == b.layers[k].weight);
      CHECK(a.layers[k].bias == b.layers[k].bias);
    } else if (a.layers[k].spec.kind == LayerKind::batchnorm) {
      CHECK(a.layers[k].running_mean == b.layers[k].running_mean);
    }
  }
}

TEST_CASE("loss decreases over the first 10 adam steps on a realizable task") {
  auto model = build_mlp<float>(8, {16}, 4, OutputHead::none, 33);
  auto target_net = build_mlp<float>(8, {}, 4, OutputHead::none, 34);
  target_net.mode = RunMode::eval;

  const MatrixF x = random_batch(32, 8, 71).cast<float>();
  const MatrixF target = forward(target_net, x);

  AdamState adam(AdamConfig{}, param_refs(model));
  float first = -1.0f, last = -1.0f;
  float prev = std::numeric_limits<float>::max();
  bool strictly_decreasing = true;
  for (int it = 0; it < 10; ++it) {
    ForwardCache<float> cache;
    const MatrixF pred = forward_train(model, x, cache);
    const auto loss = translation_loss_l2(pred, target);
    if (it == 0) first = loss.value;
    last = loss.value;
    if (loss.value >= prev) strictly_decreasing = false;
    prev = loss.value;
    auto grads = backward(model, loss.grad_pred, cache);
    adam.step(param_refs(model), grad_refs(grads));
    ++model.version;
  }
  CHECK(strictly_decreasing);
  CHECK(last < first);
}

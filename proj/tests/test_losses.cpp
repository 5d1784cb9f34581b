#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "xdesc/losses.hpp"
#include "xdesc/rng.hpp"

using namespace xdesc;
using xdesc::test::MatD;

namespace {

MatD randn(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  MatD m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

MatD unit_rows(MatD m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) m.row(r) /= m.row(r).norm();
  return m;
}

}  // namespace

TEST_CASE("translation_loss_l2 examples") {
  const MatD a = randn(3, 4, 1);
  CHECK(translation_loss_l2(a, a).value == 0.0);

  MatD pred(1, 2), target(1, 2);
  pred << 0, 0;
  target << 3, 4;
  CHECK(translation_loss_l2(pred, target).value == doctest::Approx(5.0));

  // non-negative, zero iff equal
  const MatD b = a.array() + 0.25;
  CHECK(translation_loss_l2(a, b).value > 0.0);
}

TEST_CASE("translation_loss_l2 gradient vs finite differences") {
  const MatD target = randn(4, 8, 2);
  const MatD pred = randn(4, 8, 3).array() + 0.5;  // keep residuals away from zero
  const auto loss = translation_loss_l2(pred, target);
  auto fn = [&](const MatD& x) { return translation_loss_l2(x, target).value; };
  CHECK(test::gradcheck_fn(fn, pred, loss.grad_pred) < 1e-4);
}

TEST_CASE("translation_loss_bce examples") {
  MatD pred = MatD::Constant(3, 5, 0.5);
  MatD target(3, 5);
  Rng rng(7);
  for (Eigen::Index i = 0; i < target.size(); ++i)
    target.data()[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
  CHECK(translation_loss_bce(pred, target).value == doctest::Approx(std::log(2.0)));

  // predictions at the targets (clamped) drive the loss to ~0
  MatD sharp = target.array() * (1.0 - 1e-7) + (1.0 - target.array()) * 1e-7;
  CHECK(translation_loss_bce(sharp, target).value < 1e-5);

  MatD bad_target = target;
  bad_target(0, 0) = 0.5;
  CHECK_THROWS_AS(translation_loss_bce(pred, bad_target), DomainError);
}

TEST_CASE("translation_loss_bce gradient vs finite differences") {
  Rng rng(9);
  MatD target(4, 6);
  for (Eigen::Index i = 0; i < target.size(); ++i)
    target.data()[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
  MatD pred(4, 6);
  for (Eigen::Index i = 0; i < pred.size(); ++i) pred.data()[i] = 0.2 + 0.6 * rng.uniform();
  const auto loss = translation_loss_bce(pred, target);
  auto fn = [&](const MatD& x) { return translation_loss_bce(x, target).value; };
  CHECK(test::gradcheck_fn(fn, pred, loss.grad_pred) < 1e-4);
}

TEST_CASE("triplet loss on aligned well-separated batches is zero") {
  // emb_i == emb_j with mutually distant rows: pos = 0, neg >= margin
  MatD base = unit_rows(randn(6, 32, 11));
  // spread rows out; unit vectors in 32-d from different seeds are far apart
  const auto res = triplet_loss_hardest(base, base, 1.0);
  for (Eigen::Index p = 0; p < base.rows(); ++p) {
    const double neg = (base.row(p) - base.row(res.hardest[p])).norm();
    CHECK(neg >= 1.0);  // separation assumption for this fixture
  }
  CHECK(res.value == 0.0);
  CHECK(res.grad_i.isZero());
  CHECK(res.grad_j.isZero());
}

TEST_CASE("triplet loss saturates at the margin when pos equals neg") {
  // all rows of emb_j identical: pos(p) = neg(p) for every anchor
  MatD emb_i = unit_rows(randn(5, 16, 21));
  MatD emb_j = MatD::Zero(5, 16);
  const Eigen::RowVectorXd one = unit_rows(randn(1, 16, 22)).row(0);
  for (Eigen::Index r = 0; r < emb_j.rows(); ++r) emb_j.row(r) = one;
  const double margin = 1.0;
  const auto res = triplet_loss_hardest(emb_i, emb_j, margin);
  CHECK(res.value == doctest::Approx(margin));
}

TEST_CASE("batch too small") {
  MatD one = randn(1, 8, 31);
  CHECK_THROWS_AS(triplet_loss_hardest(one, one, 1.0), BatchTooSmall);
}

TEST_CASE("hardest negative equals an exhaustive scan") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MatD emb_i = unit_rows(randn(8, 128, 100 + seed));
    const MatD emb_j = unit_rows(randn(8, 128, 200 + seed));
    const auto res = triplet_loss_hardest(emb_i, emb_j, 1.0);
    for (Eigen::Index p = 0; p < 8; ++p) {
      Eigen::Index best = -1;
      double best_d = std::numeric_limits<double>::max();
      for (Eigen::Index q = 0; q < 8; ++q) {
        if (q == p) continue;
        const double d = (emb_i.row(p) - emb_j.row(q)).norm();
        if (d < best_d) {
          best_d = d;
          best = q;
        }
      }
      CHECK(res.hardest[p] == best);
    }
  }
}

TEST_CASE("triplet loss is invariant under joint row permutation") {
  const MatD emb_i = unit_rows(randn(7, 64, 41));
  const MatD emb_j = unit_rows(randn(7, 64, 42));
  const double v = triplet_loss_hardest(emb_i, emb_j, 1.0).value;

  Rng rng(43);
  auto perm = rng.permutation(7);
  MatD pi(7, 64), pj(7, 64);
  for (Eigen::Index r = 0; r < 7; ++r) {
    pi.row(r) = emb_i.row(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(r)]));
    pj.row(r) = emb_j.row(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(r)]));
  }
  CHECK(triplet_loss_hardest(pi, pj, 1.0).value == doctest::Approx(v).epsilon(1e-12));
}

TEST_CASE("triplet gradients match finite differences away from kinks") {
  // moderate noise keeps terms active without argmin ties
  int tested = 0;
  for (std::uint64_t seed = 0; tested < 5 && seed < 40; ++seed) {
    const MatD emb_i = unit_rows(randn(6, 24, 300 + seed));
    MatD emb_j = unit_rows(emb_i + 0.35 * randn(6, 24, 400 + seed));
    const double margin = 1.0;
    const auto res = triplet_loss_hardest(emb_i, emb_j, margin);

    // skip configurations near the clamp boundary or with argmin near-ties
    bool clean = true;
    for (Eigen::Index p = 0; p < emb_i.rows(); ++p) {
      const double pos = (emb_i.row(p) - emb_j.row(p)).norm();
      const double neg = (emb_i.row(p) - emb_j.row(res.hardest[p])).norm();
      if (std::abs(margin + pos - neg) < 1e-2) clean = false;
      double runner_up = std::numeric_limits<double>::max();
      for (Eigen::Index q = 0; q < emb_j.rows(); ++q) {
        if (q == p || q == res.hardest[p]) continue;
        runner_up = std::min(runner_up, (emb_i.row(p) - emb_j.row(q)).norm());
      }
      if (runner_up - neg < 1e-2) clean = false;
    }
    if (!clean) continue;
    ++tested;

    auto fn_i = [&](const MatD& x) { return triplet_loss_hardest(x, emb_j, margin).value; };
    auto fn_j = [&](const MatD& x) { return triplet_loss_hardest(emb_i, x, margin).value; };
    CHECK(test::gradcheck_fn(fn_i, emb_i, res.grad_i) < 1e-4);
    CHECK(test::gradcheck_fn(fn_j, emb_j, res.grad_j) < 1e-4);
  }
  CHECK(tested >= 3);
}

TEST_CASE("aggregate_losses: single algorithm collapses all variants") {
  MatD t(1, 1), m(1, 1);
  t << 0.7;
  m << 0.3;
  LossConfig cfg;
  cfg.alpha = 0.1f;

  cfg.variant = LossVariant::quadratic;
  const double quad = aggregate_losses(t, m, cfg);
  cfg.variant = LossVariant::auto_encoder;
  const double ae = aggregate_losses(t, m, cfg);
  cfg.variant = LossVariant::linear;
  const std::size_t sigma[] = {0};
  const double lin = aggregate_losses(t, m, cfg, sigma);

  CHECK(quad == doctest::Approx(0.7 + 0.1 * 0.3));
  CHECK(ae == doctest::Approx(quad));
  CHECK(lin == doctest::Approx(quad));
}

TEST_CASE("aggregate_losses: quadratic over constant matrices") {
  const double c = 0.42;
  MatD t = MatD::Constant(3, 3, c);
  MatD m = MatD::Constant(3, 3, c);
  LossConfig cfg;
  cfg.alpha = 0.1f;
  cfg.variant = LossVariant::quadratic;
  CHECK(aggregate_losses(t, m, cfg) == doctest::Approx(c * 1.1));
}

TEST_CASE("aggregate_losses: linear with the identity permutation") {
  MatD t(2, 2), m(2, 2);
  t << 1.0, 9.0, 9.0, 3.0;
  m << 0.5, 9.0, 9.0, 0.7;
  LossConfig cfg;
  cfg.alpha = 0.1f;
  cfg.variant = LossVariant::linear;
  const std::size_t sigma[] = {0, 1};
  const double expect = (1.0 + 3.0) / 2.0 + 0.1 * (0.5 + 0.7) / 2.0;
  CHECK(aggregate_losses(t, m, cfg, sigma) == doctest::Approx(expect));
  // permutation required
  CHECK_THROWS_AS(aggregate_losses(t, m, cfg), ConfigError);
}

TEST_CASE("aggregate_losses: auto-encoder keeps only diagonal translation terms") {
  MatD t(2, 2), m(2, 2);
  t << 1.0, 100.0, 100.0, 3.0;
  m << 0.4, 0.8, 1.2, 1.6;
  LossConfig cfg;
  cfg.alpha = 0.5f;
  cfg.variant = LossVariant::auto_encoder;
  const double expect = (1.0 + 3.0) / 2.0 + 0.5 * (0.4 + 0.8 + 1.2 + 1.6) / 4.0;
  CHECK(aggregate_losses(t, m, cfg) == doctest::Approx(expect));
}

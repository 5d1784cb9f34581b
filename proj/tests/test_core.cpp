#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "xdesc/metrics.hpp"
#include "xdesc/rng.hpp"
#include "xdesc/types.hpp"

using namespace xdesc;

namespace {

VectorF vec(std::initializer_list<float> v) {
  VectorF out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (float x : v) out[k++] = x;
  return out;
}

Eigen::RowVectorXf row(std::initializer_list<float> v) {
  Eigen::RowVectorXf out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (float x : v) out[k++] = x;
  return out;
}

}  // namespace

TEST_CASE("l2_normalize basic cases") {
  const VectorF n = l2_normalize<float>(vec({3.0f, 4.0f}));
  CHECK(n[0] == doctest::Approx(0.6f));
  CHECK(n[1] == doctest::Approx(0.8f));

  const VectorF unit = l2_normalize<float>(vec({1.0f, 0.0f, 0.0f}));
  CHECK(unit[0] == doctest::Approx(1.0f));
  CHECK(unit[1] == 0.0f);

  CHECK_THROWS_AS(l2_normalize<float>(vec({0.0f, 0.0f})), NormalizationError);
}

TEST_CASE("l2_normalize is idempotent") {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    VectorF v(8);
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = static_cast<float>(rng.normal());
    const VectorF once = l2_normalize<float>(v);
    const VectorF twice = l2_normalize<float>(once);
    CHECK((once - twice).norm() < 1e-6f);
    CHECK(once.norm() == doctest::Approx(1.0f).epsilon(1e-6));
  }
}

TEST_CASE("distance examples") {
  CHECK(distance(row({1, 2}), row({1, 2}), Metric::l2) == 0.0f);
  CHECK(distance(row({0, 0}), row({3, 4}), Metric::l2) == doctest::Approx(5.0f));
  CHECK(distance(row({1, 0, 1, 1}), row({1, 1, 1, 0}), Metric::hamming) == 2.0f);

  CHECK_THROWS_AS(distance(row({1, 2}), row({1, 2, 3}), Metric::l2), ShapeError);
  CHECK_THROWS_AS(distance(row({0.5f, 0}), row({1, 0}), Metric::hamming), DomainError);
}

TEST_CASE("distance symmetry, identity, triangle inequality") {
  Rng rng(23);
  for (int t = 0; t < 50; ++t) {
    Eigen::RowVectorXf a(6), b(6), c(6);
    for (Eigen::Index k = 0; k < 6; ++k) {
      a[k] = static_cast<float>(rng.normal());
      b[k] = static_cast<float>(rng.normal());
      c[k] = static_cast<float>(rng.normal());
    }
    CHECK(distance(a, b, Metric::l2) == distance(b, a, Metric::l2));
    CHECK(distance(a, a, Metric::l2) == 0.0f);
    CHECK(distance(a, c, Metric::l2) <=
          distance(a, b, Metric::l2) + distance(b, c, Metric::l2) + 1e-5f);

    Eigen::RowVectorXf ba(8), bb(8), bc(8);
    for (Eigen::Index k = 0; k < 8; ++k) {
      ba[k] = rng.uniform() < 0.5 ? 0.0f : 1.0f;
      bb[k] = rng.uniform() < 0.5 ? 0.0f : 1.0f;
      bc[k] = rng.uniform() < 0.5 ? 0.0f : 1.0f;
    }
    CHECK(distance(ba, bb, Metric::hamming) == distance(bb, ba, Metric::hamming));
    CHECK(distance(ba, ba, Metric::hamming) == 0.0f);
    CHECK(distance(ba, bc, Metric::hamming) <=
          distance(ba, bb, Metric::hamming) + distance(bb, bc, Metric::hamming));
  }
}

TEST_CASE("binarize examples and properties") {
  const VectorF b = binarize(vec({0.9f, 0.1f, 0.5f}), 0.5f);
  CHECK(b[0] == 1.0f);
  CHECK(b[1] == 0.0f);
  CHECK(b[2] == 1.0f);  // threshold is inclusive

  const VectorF zeros = binarize(vec({0.0f, 0.0f, 0.0f}), 0.5f);
  CHECK(zeros.isZero());

  CHECK_THROWS_AS(binarize(vec({0.5f}), 0.0f), ConfigError);
  CHECK_THROWS_AS(binarize(vec({0.5f}), 1.0f), ConfigError);

  Rng rng(5);
  for (int t = 0; t < 30; ++t) {
    VectorF v(16);
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = static_cast<float>(rng.uniform());
    const VectorF once = binarize(v, 0.5f);
    CHECK(binarize(once, 0.5f) == once);  // idempotent on {0,1}
    // raising the threshold never turns a 0 into a 1
    const VectorF high = binarize(v, 0.75f);
    for (Eigen::Index k = 0; k < v.size(); ++k) CHECK(high[k] <= once[k]);
  }
}

TEST_CASE("packed hamming equals coordinate-wise counting") {
  Rng rng(99);
  MatrixF m(7, 70);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = rng.uniform() < 0.5 ? 0.0f : 1.0f;
  const PackedBits packed = pack_bits(m);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.rows(); ++j)
      CHECK(static_cast<float>(hamming_words(packed.row(i), packed.row(j),
                                             packed.words_per_row)) ==
            distance(m.row(i), m.row(j), Metric::hamming));

  MatrixF bad(1, 2);
  bad << 0.5f, 1.0f;
  CHECK_THROWS_AS(pack_bits(bad), DomainError);
}

TEST_CASE("algorithm spec invariants") {
  AlgorithmSpec ok{"sift", 128, Domain::real, Metric::l2, OutputNorm::unit_l2};
  CHECK_NOTHROW(ok.validate());

  AlgorithmSpec bad_dim = ok;
  bad_dim.dim = 0;
  CHECK_THROWS_AS(bad_dim.validate(), ConfigError);

  AlgorithmSpec binary{"brief", 256, Domain::binary, Metric::hamming, OutputNorm::none};
  CHECK_NOTHROW(binary.validate());
  binary.metric = Metric::l2;
  CHECK_THROWS_AS(binary.validate(), ConfigError);
  binary.metric = Metric::hamming;
  binary.output_norm = OutputNorm::unit_l2;
  CHECK_THROWS_AS(binary.validate(), ConfigError);

  AlgorithmSpec real_hamming = ok;
  real_hamming.metric = Metric::hamming;
  CHECK_THROWS_AS(real_hamming.validate(), ConfigError);

  CHECK(default_head(ok) == OutputHead::unit_l2);
  CHECK(default_head(binary) == OutputHead::sigmoid);
}

TEST_CASE("descriptor matrix validation") {
  DescriptorMatrix m;
  m.spec = {"toy", 2, Domain::real, Metric::l2, OutputNorm::none};
  m.patch_ids = {1, 2};
  m.values.resize(2, 2);
  m.values << 1, 2, 3, 4;
  CHECK_NOTHROW(m.validate());

  DescriptorMatrix dup = m;
  dup.patch_ids = {1, 1};
  CHECK_THROWS_AS(dup.validate(), DomainError);

  DescriptorMatrix nan = m;
  nan.values(0, 0) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(nan.validate(), NumericsError);

  DescriptorMatrix unnormed = m;
  unnormed.spec.output_norm = OutputNorm::unit_l2;
  unnormed.finalized = true;
  CHECK_THROWS_AS(unnormed.validate(), NormalizationError);
}

TEST_CASE("dataset alignment is by patch id, not row order") {
  DescriptorMatrix a, b;
  a.spec = {"a", 1, Domain::real, Metric::l2, OutputNorm::none};
  a.patch_ids = {10, 20, 30};
  a.values.resize(3, 1);
  a.values << 1, 2, 3;

  b.spec = {"b", 1, Domain::real, Metric::l2, OutputNorm::none};
  b.patch_ids = {30, 10, 40};  // different order, partially overlapping
  b.values.resize(3, 1);
  b.values << 33, 11, 44;

  const DescriptorMatrix mats[] = {a, b};
  const CorrespondenceDataset ds = make_dataset(mats);
  REQUIRE(ds.patch_ids == std::vector<std::int64_t>{10, 30});
  CHECK(ds.at("a").values(0, 0) == 1.0f);
  CHECK(ds.at("a").values(1, 0) == 3.0f);
  CHECK(ds.at("b").values(0, 0) == 11.0f);
  CHECK(ds.at("b").values(1, 0) == 33.0f);
  CHECK_THROWS_AS(ds.at("missing"), DatasetError);

  DescriptorMatrix c = b;
  c.spec.name = "c";
  c.patch_ids = {7, 8, 9};  // no overlap
  const DescriptorMatrix disjoint[] = {a, c};
  CHECK_THROWS_AS(make_dataset(disjoint), DatasetError);
}

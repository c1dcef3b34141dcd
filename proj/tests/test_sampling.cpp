// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "tabgen/common/error.hpp"
#include "tabgen/sampling/sampler.hpp"
#include "tabgen/training/checkpoint.hpp"
#include "toy_data.hpp"

using namespace tabgen;

namespace {

ModelDims dims_of(const Dataset& d) {
  ModelDims m;
  m.cardinalities = d.schema().cardinalities();
  m.embedding = 4;
  m.latent = 3;
  return m;
}

LatentBank bank_of(Tensor z) {
  LatentBank b;
  b.z = std::move(z);
  b.source_rows.resize(b.z.rows());
  return b;
}

std::vector<std::size_t> oracle_knn(const Tensor& z, std::size_t i, std::size_t k) {
  std::vector<std::pair<long double, std::size_t>> all;
  for (std::size_t j = 0; j < z.rows(); ++j) {
    if (j == i) continue;
    long double s = 0.0L;
    for (std::size_t c = 0; c < z.cols(); ++c) {
      const long double d = static_cast<long double>(z(i, c)) - z(j, c);
      s += d * d;
    }
    all.emplace_back(s, j);
  }
  std::stable_sort(all.begin(), all.end(), [](auto& a, auto& b) { return a.first < b.first; });
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < k; ++t) out.push_back(all[t].second);
  return out;
}

}  // namespace

TEST(Bank, RowsAreClassMeansAndReproducible) {
  const Dataset d = toy::corpus(80, 1);
  Rng rng(2);
  CvaeModel m(dims_of(d), rng);
  const auto b1 = build_bank(m, d, Condition::kRisk);
  const auto b2 = build_bank(m, d, Condition::kRisk);
  EXPECT_EQ(b1.size(), d.count(Condition::kRisk));
  EXPECT_EQ(b1.z, b2.z);
  // Row i equals the encoder mean of its source record.
  const auto idx = std::vector<std::size_t>{b1.source_rows[3]};
  EXPECT_EQ(m.posterior(d.subset(idx)).mu.row(0)[1], b1.z(3, 1));
}

TEST(Bank, IdenticalRecordsIdenticalRows) {
  auto s = toy::schema({3, 3});
  Dataset d(s);
  std::vector<std::uint32_t> r{1, 2};
  for (int i = 0; i < 3; ++i) d.push_back(r, Condition::kRisk);
  Rng rng(3);
  ModelDims md;
  md.cardinalities = s->cardinalities();
  md.embedding = 2;
  md.latent = 2;
  CvaeModel m(md, rng);
  const auto b = build_bank(m, d, Condition::kRisk);
  EXPECT_EQ(b.z(0, 0), b.z(2, 0));
  EXPECT_EQ(b.z(1, 1), b.z(2, 1));
}

TEST(Bank, TooFewRecordsIsBankError) {
  auto s = toy::schema({3});
  Dataset d(s);
  std::vector<std::uint32_t> r{1};
  d.push_back(r, Condition::kRisk);
  d.push_back(r, Condition::kNonRisk);
  d.push_back(r, Condition::kNonRisk);
  ModelDims md;
  md.cardinalities = s->cardinalities();
  CvaeModel m(md);
  EXPECT_THROW(build_bank(m, d, Condition::kRisk), BankError);
  EXPECT_NO_THROW(build_bank(m, d, Condition::kNonRisk));
}

TEST(Knn, SpecExampleAndSelfExclusion) {
  const auto b = bank_of(Tensor::matrix(3, 1, {0, 1, 10}));
  EXPECT_EQ(knn(b, 0, 1), std::vector<std::size_t>{1});
  EXPECT_EQ(knn(b, 2, 2), (std::vector<std::size_t>{1, 0}));
  EXPECT_THROW(knn(b, 0, 3), ContractError);
}

TEST(Knn, TiesGoToLowerIndex) {
  const auto b = bank_of(Tensor::matrix(5, 1, {0, 1, -1, 1, -1}));
  EXPECT_EQ(knn(b, 0, 3), (std::vector<std::size_t>{1, 2, 3}));
}

TEST(Knn, MatchesBruteForceOnRandomBanks) {
  Rng rng(4);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 3 + rng() % 40, h = 1 + rng() % 9, k = 1 + rng() % (m - 1);
    Tensor z({m, h});
    for (double& v : z.values()) v = nd(rng);
    const auto b = bank_of(z);
    for (std::size_t i = 0; i < m; ++i) {
      const auto got = knn(b, i, k);
      ASSERT_EQ(got, oracle_knn(z, i, k)) << "trial " << trial;
      ASSERT_EQ(std::count(got.begin(), got.end(), i), 0);
    }
  }
}

TEST(Smote, EndpointsMidpointAndBoundingBox) {
  const std::vector<double> a{0, 2}, b{2, 0};
  EXPECT_EQ(smote_interpolate(a, b, 0.0), a);
  EXPECT_EQ(smote_interpolate(a, b, 1.0), b);
  EXPECT_EQ(smote_interpolate(a, b, 0.5), (std::vector<double>{1, 1}));
  EXPECT_THROW(smote_interpolate(a, b, 1.5), ContractError);

  Rng rng(5);
  std::normal_distribution<double> nd(0.0, 10.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 10000; ++t) {
    std::vector<double> zi(4), zj(4);
    for (auto& v : zi) v = nd(rng);
    for (auto& v : zj) v = nd(rng);
    ASSERT_EQ(smote_interpolate(zi, zj, 0.0), zi);
    ASSERT_EQ(smote_interpolate(zi, zj, 1.0), zj);
    const auto z = smote_interpolate(zi, zj, u(rng));
    for (std::size_t c = 0; c < 4; ++c) {
      ASSERT_GE(z[c], std::min(zi[c], zj[c]));
      ASSERT_LE(z[c], std::max(zi[c], zj[c]));
    }
  }
}

TEST(Generate, CountLabelDeterminismAndValidity) {
  const Dataset d = toy::corpus(90, 6);
  Rng rng(7);
  CvaeModel m(dims_of(d), rng);
  const std::vector<LatentBank> banks{build_bank(m, d, Condition::kNonRisk), build_bank(m, d, Condition::kRisk)};
  GenerationRequest req;
  req.condition = Condition::kRisk;
  req.count = 1;
  req.seed = 9;
  const auto one = generate(m, d.schema_ptr(), banks, req);
  ASSERT_EQ(one.rows(), 1u);
  EXPECT_EQ(one.condition(0), Condition::kRisk);

  req.count = 600;  // spans several shards
  const auto a = generate(m, d.schema_ptr(), banks, req);
  const auto b = generate(m, d.schema_ptr(), banks, req);
  EXPECT_EQ(a.rows(), 600u);
  EXPECT_EQ(a.cells(), b.cells());
  EXPECT_EQ(a.count(Condition::kRisk), 600u);
  const auto cards = d.schema().cardinalities();
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) ASSERT_LT(a.at(r, c), cards[c]);
  req.seed = 10;
  EXPECT_NE(generate(m, d.schema_ptr(), banks, req).cells(), a.cells());
}

TEST(Generate, DegenerateBankArgmaxIsConstant) {
  const Dataset d = toy::corpus(40, 8);
  Rng rng(9);
  CvaeModel m(dims_of(d), rng);
  LatentBank bank = bank_of(Tensor({6, 3}, 0.7));
  bank.condition = Condition::kNonRisk;
  GenerationRequest req;
  req.condition = Condition::kNonRisk;
  req.count = 50;
  req.mode = DecodeMode::kArgmax;
  const std::vector<LatentBank> banks{bank};
  const auto out = generate(m, d.schema_ptr(), banks, req);
  for (std::size_t r = 1; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) ASSERT_EQ(out.at(r, c), out.at(0, c));
}

TEST(Generate, BankErrors) {
  const Dataset d = toy::corpus(40, 10);
  Rng rng(11);
  CvaeModel m(dims_of(d), rng);
  const std::vector<LatentBank> banks{build_bank(m, d, Condition::kNonRisk)};
  GenerationRequest req;
  req.condition = Condition::kRisk;
  EXPECT_THROW(generate(m, d.schema_ptr(), banks, req), BankError);
  req.condition = Condition::kNonRisk;
  req.k = banks[0].size();
  EXPECT_THROW(generate(m, d.schema_ptr(), banks, req), BankError);
}

TEST(Prior, DeterministicAndCentred) {
  const Dataset d = toy::corpus(40, 12);
  Rng rng(13);
  CvaeModel m(dims_of(d), rng);
  GenerationRequest req;
  req.condition = Condition::kNonRisk;
  req.count = 300;
  req.seed = 3;
  const auto a = prior_sample(m, d.schema_ptr(), req);
  EXPECT_EQ(a.cells(), prior_sample(m, d.schema_ptr(), req).cells());
  EXPECT_EQ(a.count(Condition::kNonRisk), 300u);

  // The latent draws themselves: 10k samples from the prior stream.
  double sum[3] = {0, 0, 0};
  std::size_t n = 0;
  for (std::uint64_t shard = 0; shard < 40; ++shard) {
    Rng r = make_rng(3, "prior", {shard});
    std::normal_distribution<double> nd(0.0, 1.0);
    for (std::size_t i = 0; i < kGenerationShard; ++i, ++n)
      for (double& s : sum) s += nd(r);
  }
  ASSERT_GE(n, 10000u);
  for (double s : sum) EXPECT_LT(std::abs(s / static_cast<double>(n)), 0.05);
}

TEST(Augmentation, CountsPreserveClassRatio) {
  const Dataset d = toy::corpus(518, 14);
  for (int f : {2, 5}) {
    const auto c = augmentation_counts(d, f);
    EXPECT_EQ(c[0] + c[1], static_cast<std::size_t>(f - 1) * 518);
    const double ratio = static_cast<double>(d.count(Condition::kRisk)) / 518.0;
    EXPECT_LE(std::abs(static_cast<double>(c[1]) - ratio * (c[0] + c[1])), 1.0);
  }
}

TEST(Banks, CheckpointTransport) {
  const Dataset d = toy::corpus(60, 15);
  Rng rng(16);
  Checkpoint ck;
  ck.schema = d.schema_ptr();
  ck.model = CvaeModel(dims_of(d), rng);
  const std::vector<LatentBank> banks{build_bank(ck.model, d, Condition::kNonRisk),
                                      build_bank(ck.model, d, Condition::kRisk)};
  store_banks(ck, banks);
  const Checkpoint back = parse_checkpoint(serialize_checkpoint(ck));
  const auto loaded = load_banks(back);
  ASSERT_EQ(loaded.size(), 2u);
  EXPECT_EQ(loaded[1].condition, Condition::kRisk);
  EXPECT_EQ(loaded[1].size(), banks[1].size());
  EXPECT_NEAR(loaded[1].z(0, 0), banks[1].z(0, 0), 1e-6);
}

// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tabgen/common/error.hpp"
#include "tabgen/losses/losses.hpp"
#include "tabgen/numerics/gradcheck.hpp"

using namespace tabgen;

namespace {

Tensor normal(std::size_t n, std::size_t h, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  Tensor t({n, h});
  for (double& v : t.values()) v = nd(rng);
  return t;
}

double ce_of(std::vector<Tensor> logits, std::vector<std::uint32_t> targets) {
  Graph g;
  std::vector<NodeId> ids;
  for (auto& t : logits) ids.push_back(g.input(t));
  return g.value(reconstruction_ce(g, ids, targets)).item();
}

double nce_of(const Tensor& z, const Tensor& zp, double tau) {
  Graph g;
  return g.value(info_nce(g, g.input(z), g.input(zp), tau)).item();
}

double kld_std_of(const Tensor& mu, const Tensor& lv) {
  Graph g;
  return g.value(kld_standard(g, LatentNodes{g.input(mu), g.input(lv)})).item();
}

}  // namespace

TEST(ReconstructionCe, SpecExamples) {
  EXPECT_NEAR(ce_of({Tensor({1, 4})}, {2}), std::log(4.0), 1e-12);
  EXPECT_NEAR(ce_of({Tensor({1, 2}), Tensor({1, 3})}, {0, 2}), std::log(2.0) + std::log(3.0), 1e-12);
  EXPECT_NEAR(ce_of({Tensor({1, 3}, {-500.0, 500.0, -500.0})}, {1}), 0.0, 1e-12);
}

TEST(ReconstructionCe, MatchesBruteForceOracle) {
  Rng rng(11);
  const std::vector<std::uint32_t> cards{2, 5, 3};
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 7;
    std::vector<Tensor> logits;
    for (auto v : cards) logits.push_back(normal(n, v, rng, 3.0));
    std::vector<std::uint32_t> targets(n * cards.size());
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t a = 0; a < cards.size(); ++a) targets[r * cards.size() + a] = rng() % cards[a];

    long double oracle = 0.0L;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t a = 0; a < cards.size(); ++a) {
        long double denom = 0.0L;
        for (std::uint32_t k = 0; k < cards[a]; ++k) denom += std::exp(static_cast<long double>(logits[a](r, k)));
        const long double p = std::exp(static_cast<long double>(logits[a](r, targets[r * cards.size() + a]))) / denom;
        oracle -= std::log(p);
      }
    oracle /= n;
    EXPECT_NEAR(ce_of(logits, targets), static_cast<double>(oracle), 1e-10);
  }
}

TEST(ReconstructionCe, BadTargetRejected) {
  EXPECT_THROW(ce_of({Tensor({1, 3})}, {3}), EncodingError);
}

TEST(Kld, TwoNormalsExamples) {
  const std::vector<double> zero{0.0}, one{1.0}, two{2.0};
  EXPECT_EQ(kld_two_normals(one, two, one, two), 0.0);
  EXPECT_NEAR(kld_two_normals(one, one, zero, one), 0.5, 1e-15);
  // 1/2 (2 - ln 2 - 1) versus 1/2 (1/2 + ln 2 - 1).
  const double pq = kld_two_normals(zero, two, zero, one);
  const double qp = kld_two_normals(zero, one, zero, two);
  EXPECT_NEAR(pq, 0.5 * (1.0 - std::log(2.0)), 1e-15);
  EXPECT_NEAR(qp, 0.5 * (std::log(2.0) - 0.5), 1e-15);
  EXPECT_NE(pq, qp);
  EXPECT_THROW(kld_two_normals(zero, zero, zero, one), ContractError);
}

TEST(Kld, StandardExamples) {
  EXPECT_EQ(kld_std_of(Tensor({2, 3}), Tensor({2, 3})), 0.0);
  EXPECT_NEAR(kld_std_of(Tensor({1, 1}, {1.0}), Tensor({1, 1})), 0.5, 1e-15);
}

TEST(Kld, StandardMatchesTwoNormalsAndIsNonNegative) {
  Rng rng(12);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const std::vector<double> zero(1, 0.0), one(1, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double mu = u(rng), lv = u(rng);
    const double a = kld_std_of(Tensor({1, 1}, {mu}), Tensor({1, 1}, {lv}));
    const double b = kld_two_normals(std::vector<double>{mu}, std::vector<double>{std::exp(lv)}, zero, one);
    ASSERT_NEAR(a, b, 1e-12);
    ASSERT_GE(a, 0.0);
  }
}

TEST(InfoNce, UniformCaseIsLogN) {
  for (std::size_t n : {2u, 3u, 8u, 64u}) {
    Tensor z({n, 4}, 0.3);
    EXPECT_NEAR(nce_of(z, z, 0.5), std::log(static_cast<double>(n)), 1e-12);
  }
}

TEST(InfoNce, OrthogonalNegativeExample) {
  const Tensor z = Tensor::matrix(2, 2, {1, 0, 0, 1});
  EXPECT_NEAR(nce_of(z, z, 0.5), std::log1p(std::exp(-2.0)), 1e-12);
  EXPECT_NEAR(nce_of(z, z, 0.5), 0.1269, 5e-5);
}

TEST(InfoNce, DecreasesAsPositiveSimilarityRises) {
  // Anchor 0 fixed; its positive rotates towards it while the other rows stay put.
  double prev = INFINITY;
  for (int step = 0; step <= 10; ++step) {
    const double ang = M_PI / 2.0 * (1.0 - step / 10.0);
    const Tensor z = Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    const Tensor zp = Tensor::matrix(3, 3, {std::cos(ang), 0, std::sin(ang), 0, 1, 0, 0, 0, 1});
    const double l = nce_of(z, zp, 0.5);
    EXPECT_LT(l, prev);
    prev = l;
  }
}

TEST(InfoNce, ScaleInvariant) {
  Rng rng(13);
  const Tensor z = normal(5, 3, rng), zp = normal(5, 3, rng);
  Tensor z2 = z, zp2 = zp;
  for (double& v : z2.values()) v *= 7.5;
  for (double& v : zp2.values()) v *= 7.5;
  EXPECT_NEAR(nce_of(z, zp, 0.5), nce_of(z2, zp2, 0.5), 1e-12);
}

TEST(InfoNce, Contracts) {
  EXPECT_THROW(nce_of(Tensor({1, 2}, 1.0), Tensor({1, 2}, 1.0), 0.5), ContractError);
  EXPECT_THROW(nce_of(Tensor({2, 2}, 1.0), Tensor({2, 2}, 1.0), 0.0), ContractError);
  EXPECT_TRUE(std::isfinite(nce_of(Tensor({2, 2}), Tensor({2, 2}, 1.0), 0.5)));
}

TEST(L1, Examples) {
  auto l1 = [](const Tensor& z) {
    Graph g;
    return g.value(l1_latent(g, g.input(z))).item();
  };
  EXPECT_EQ(l1(Tensor({3, 2})), 0.0);
  EXPECT_EQ(l1(Tensor::matrix(1, 3, {1, -2, 3})), 6.0);
  Rng rng(14);
  const Tensor z = normal(4, 5, rng);
  Tensor z2 = z;
  for (double& v : z2.values()) v *= 2.0;
  EXPECT_NEAR(l1(z2), 2.0 * l1(z), 1e-12);
}

TEST(Schedule, PaperTable) {
  const ScheduleConfig cfg{4, 0.9, 1.0, 200};
  for (int e : {0, 50, 100, 150}) EXPECT_EQ(cyclic_schedule(e, cfg), 0.0);
  for (int c = 0; c < 4; ++c)
    for (int e = 45; e <= 49; ++e) EXPECT_EQ(cyclic_schedule(c * 50 + e, cfg), 1.0);
  EXPECT_NEAR(cyclic_schedule(22, cfg), 22.0 / 45.0, 1e-12);
}

TEST(Schedule, PeriodicAndMonotoneWithinRamp) {
  const ScheduleConfig cfg{3, 0.7, 2.5, 100};  // P = 34
  for (int e = 0; e + 34 < 100; ++e) EXPECT_EQ(cyclic_schedule(e, cfg), cyclic_schedule(e + 34, cfg));
  for (int e = 1; e < 100; ++e)
    if (e % 34 != 0) EXPECT_GE(cyclic_schedule(e, cfg), cyclic_schedule(e - 1, cfg));
  EXPECT_THROW(cyclic_schedule(100, cfg), ContractError);
  EXPECT_THROW(cyclic_schedule(0, ScheduleConfig{0, 0.9, 1.0, 10}), ConfigError);
}

TEST(TotalLoss, Arithmetic) {
  EXPECT_NEAR(total_loss(1, 2, 3, 4, 0.001, 0.5, 0.1).total, 2.304, 1e-12);
  EXPECT_EQ(total_loss(1.5, 2, 3, 4, 0.0, 0.5, 0.0).total, 1.5 + 0.5 * 2);
}

TEST(TotalLoss, DefaultsMatchPublishedSettings) {
  const LossWeights w;
  EXPECT_EQ(w.tau, 0.5);
  EXPECT_EQ(w.alpha, 0.1);
  EXPECT_EQ(w.lambda, 1e-3);
}

TEST(Objective, FullLossGradientEveryVariantShape) {
  ModelDims d;
  d.cardinalities = {3, 2, 4, 3, 2, 5};
  d.embedding = 3;
  d.latent = 2;
  Rng rng(0);
  CvaeModel m(d, rng);
  // Nonzero biases keep every pre-activation off the ReLU kink.
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (Parameter* p : m.parameters())
    if (p->name.ends_with(".bias"))
      for (double& v : p->value.values()) v = u(rng);
  std::vector<std::uint32_t> rows(4 * 6);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t a = 0; a < 6; ++a) rows[r * 6 + a] = rng() % d.cardinalities[a];
  const std::vector<std::uint8_t> cond{0, 1, 1, 0};
  const Tensor eps = normal(4, 2, rng), eps_pos = normal(4, 2, rng);

  struct Case {
    double alpha, lambda;
    bool contrastive, on_weights;
  };
  for (const Case c : {Case{0.1, 1e-3, true, false}, Case{0.0, 1e-3, false, false}, Case{0.1, 0.0, true, false},
                       Case{0.7, 1e-3, true, false}, Case{0.1, 1e-3, true, true}}) {
    LossWeights w;
    w.beta = 0.4;
    w.alpha = c.alpha;
    w.lambda = c.lambda;
    w.contrastive = c.contrastive;
    w.l1_on_weights = c.on_weights;
    if (c.on_weights)  // |w| is kinked at 0; stay well outside the probe width
      for (Parameter* p : m.weight_matrices())
        for (double& v : p->value.values())
          if (std::abs(v) < 1e-3) v = v < 0.0 ? -1e-3 : 1e-3;
    Graph g;
    const auto nodes = build_objective(g, m, rows, cond, g.input(eps), g.input(eps_pos), w);
    const auto b = read_breakdown(g, nodes, w);
    EXPECT_NEAR(b.total, b.ce + w.beta * b.kld + w.alpha * b.nce + w.lambda * b.l1, 1e-12);
    if (!c.contrastive) EXPECT_EQ(b.nce, 0.0);
    if (c.lambda == 0.0) EXPECT_EQ(b.l1, 0.0);
    g.backward(nodes.total);
    const auto ps = m.parameters();
    const auto rep = finite_diff_check(g, nodes.total, ps, 1e-4, 1e-4);
    EXPECT_TRUE(rep.pass) << "alpha=" << c.alpha << " lambda=" << c.lambda << " weights=" << c.on_weights << " " << rep.worst_param << "[" << rep.worst_index << "] " << rep.max_rel_err << " a=" << rep.worst_analytic << " n=" << rep.worst_numeric;
  }
}

#include <gtest/gtest.h>

#include "cqa/classifier.hpp"
#include "oracle_values.hpp"

using namespace cqa;

namespace {

PairEncoding random_encoding(Rng& rng, std::size_t n, bool attention) {
  PairEncoding e;
  e.h_N.resize(n);
  for (auto& v : e.h_N) v = rng.uniform(-1, 1);
  if (attention) {
    e.h_prime = Vector(n);
    for (auto& v : *e.h_prime) v = rng.uniform(-1, 1);
  }
  return e;
}

}  // namespace

TEST(ClassifyPair, ZeroWeightsGiveUniform) {
  ParamSet ps;
  auto fnn = FnnParams::create(ps, 6, 5, 1, nullptr);
  Rng rng(1);
  auto p = classify_pair(ps, fnn, random_encoding(rng, 3, true), {});
  EXPECT_EQ(p, (Vector{0.5, 0.5}));
}

TEST(ClassifyPair, BiasDominated) {
  ParamSet ps;
  auto fnn = FnnParams::create(ps, 4, 3, 1, nullptr);
  ps.value(fnn.heads[0].b)(0, 0) = 10.0;
  ps.value(fnn.heads[0].b)(1, 0) = -10.0;
  Rng rng(2);
  auto p = classify_pair(ps, fnn, random_encoding(rng, 4, false), {});
  EXPECT_NEAR(p[0], 1.0, 1e-8);
  EXPECT_NEAR(p[1], 0.0, 1e-8);
}

TEST(ClassifyPair, MatchesComposedOracle) {
  Rng rng(99);
  ParamSet ps;
  auto fnn = FnnParams::create(ps, 7, 5, 1, &rng, 0.8);
  const auto enc = random_encoding(rng, 3, false);
  const auto aug = AugmentedFeatures::from_rank(2, 4);
  const Vector input = concat({enc.h_N, aug.values});
  Vector hidden = matvec(ps.value(fnn.W_hidden), input);
  for (std::size_t k = 0; k < hidden.size(); ++k) {
    hidden[k] = std::tanh(hidden[k] + ps.value(fnn.b_hidden)(k, 0));
  }
  Vector logits = matvec(ps.value(fnn.heads[0].W), hidden);
  for (std::size_t k = 0; k < 2; ++k) logits[k] += ps.value(fnn.heads[0].b)(k, 0);
  const Vector want = softmax(logits);
  const Vector got = classify_pair(ps, fnn, enc, aug);
  EXPECT_NEAR(got[0], want[0], 1e-15);
  EXPECT_NEAR(got[1], want[1], 1e-15);
  EXPECT_NEAR(got[0] + got[1], 1.0, 1e-12);
  EXPECT_EQ(got, classify_pair(ps, fnn, enc, aug));
}

TEST(ClassifyPair, ShapeMismatchIsAnError) {
  ParamSet ps;
  auto fnn = FnnParams::create(ps, 6, 5, 1, nullptr);
  Rng rng(3);
  EXPECT_THROW(classify_pair(ps, fnn, random_encoding(rng, 4, true), {}), std::invalid_argument);
}

TEST(ClassifyPair, ZeroAugmentationIsAdditive) {
  Rng rng(10);
  ParamSet with_aug;
  auto big = FnnParams::create(with_aug, 6 + 5, 4, 1, &rng, 0.7);
  ParamSet without;
  auto small = FnnParams::create(without, 6, 4, 1, nullptr);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 6; ++c) without.value(small.W_hidden)(r, c) = with_aug.value(big.W_hidden)(r, c);
  }
  without.value(small.b_hidden) = with_aug.value(big.b_hidden);
  without.value(small.heads[0].W) = with_aug.value(big.heads[0].W);
  without.value(small.heads[0].b) = with_aug.value(big.heads[0].b);
  const auto enc = random_encoding(rng, 3, true);
  EXPECT_EQ(classify_pair(with_aug, big, enc, AugmentedFeatures::from_rank(std::nullopt, 5)),
            classify_pair(without, small, enc, {}));
}

TEST(IrRankOneHot, Encoding) {
  EXPECT_EQ(ir_rank_onehot(1, 3), (Vector{1, 0, 0}));
  EXPECT_EQ(ir_rank_onehot(3, 3), (Vector{0, 0, 1}));
  EXPECT_EQ(ir_rank_onehot(4, 3), (Vector{0, 0, 0}));
  EXPECT_EQ(ir_rank_onehot(std::nullopt, 3), (Vector{0, 0, 0}));
  EXPECT_EQ(ir_rank_onehot(0, 3), (Vector{0, 0, 0}));
}

TEST(CrossEntropy, Examples) {
  EXPECT_EQ(cross_entropy(std::vector<double>{1.0, 0.0}, 0), 0.0);
  EXPECT_NEAR(cross_entropy(std::vector<double>{0.5, 0.5}, 1), oracle::kLn2, 1e-15);
  EXPECT_NEAR(cross_entropy(std::vector<double>{0.25, 0.75}, 0), oracle::kLn4, 1e-15);
  EXPECT_THROW(cross_entropy(std::vector<double>{0.5, 0.5}, 2), std::invalid_argument);
  EXPECT_TRUE(std::isfinite(cross_entropy(std::vector<double>{1.0, 0.0}, 1)));
}

TEST(Multitask, ZeroHeadsAreUniform) {
  ParamSet ps;
  auto head = FnnParams::create(ps, 9, 4, 3, nullptr);
  Rng rng(4);
  auto out = multitask_forward(ps, head, random_encoding(rng, 3, false),
                               random_encoding(rng, 3, false), random_encoding(rng, 3, false));
  for (const auto& p : out) EXPECT_EQ(p, (Vector{0.5, 0.5}));
}

TEST(Multitask, HeadsAreIndependent) {
  Rng rng(5);
  ParamSet ps;
  auto head = FnnParams::create(ps, 12, 4, 3, &rng, 0.5);
  auto a = random_encoding(rng, 2, true), b = random_encoding(rng, 2, true),
       c = random_encoding(rng, 2, true);
  auto before = multitask_forward(ps, head, a, b, c);
  ps.value(head.heads[2].W)(0, 1) += 0.3;
  auto after = multitask_forward(ps, head, a, b, c);
  EXPECT_EQ(before[0], after[0]);
  EXPECT_EQ(before[1], after[1]);
  EXPECT_NE(before[2], after[2]);
  for (const auto& p : after) {
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
    EXPECT_GT(p[0], 0.0);
    EXPECT_LT(p[0], 1.0);
  }
}

TEST(Multitask, LossExamples) {
  const double ln2 = oracle::kLn2;
  const std::array<Vector, 3> half{Vector{0.5, 0.5}, Vector{0.5, 0.5}, Vector{0.5, 0.5}};
  EXPECT_NEAR(multitask_loss(half, {0, 1, 0}, kDefaultBeta), ln2, 1e-15);

  // Probabilities whose gold entries give cross entropies 1, 2, 3.
  const std::array<Vector, 3> p{Vector{std::exp(-1.0), 1 - std::exp(-1.0)},
                                Vector{1 - std::exp(-2.0), std::exp(-2.0)},
                                Vector{std::exp(-3.0), 1 - std::exp(-3.0)}};
  EXPECT_NEAR(multitask_loss(p, {0, 1, 0}, {0.1, 0.8, 0.1}), 2.0, 1e-12);
  EXPECT_NEAR(multitask_loss(p, {0, 1, 0}, {1, 0, 0}), 1.0, 1e-12);
  EXPECT_THROW(multitask_loss(p, {0, 1, 0}, {-0.1, 1, 0}), std::invalid_argument);
}

TEST(Multitask, LossIsLinearInEachHead) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    std::array<Vector, 3> p;
    for (auto& v : p) {
      const double x = rng.uniform(0.01, 0.99);
      v = {x, 1 - x};
    }
    const std::array<int, 3> gold{static_cast<int>(rng.index(2)), static_cast<int>(rng.index(2)),
                                  static_cast<int>(rng.index(2))};
    const Beta beta{rng.uniform01(), rng.uniform01(), rng.uniform01()};
    double want = 0.0;
    for (std::size_t k = 0; k < 3; ++k) want += beta[k] * cross_entropy(p[k], gold[k]);
    EXPECT_NEAR(multitask_loss(p, gold, beta), want, 1e-14);
    Beta doubled = beta;
    doubled[1] *= 2.0;
    EXPECT_NEAR(multitask_loss(p, gold, doubled) - multitask_loss(p, gold, beta),
                beta[1] * cross_entropy(p[1], gold[1]), 1e-12);
  }
}

TEST(FnnGradients, TrunkGradientIsBetaWeightedSumOfHeads) {
  Rng rng(8);
  ParamSet ps;
  auto head = FnnParams::create(ps, 6, 5, 3, &rng, 0.8);
  Vector input(6);
  for (auto& v : input) v = rng.uniform(-1, 1);
  const std::array<int, 3> gold{1, 0, 1};
  const Beta beta = kDefaultBeta;

  auto loss = [&] {
    FnnTrace t;
    fnn_forward(ps, head, input, nullptr, t);
    return multitask_loss({t.probs[0], t.probs[1], t.probs[2]}, gold, beta);
  };
  auto grads_for = [&](const std::array<double, 3>& weights) {
    ps.zero_grads();
    FnnTrace t;
    fnn_forward(ps, head, input, nullptr, t);
    std::vector<Vector> dlogits(3);
    for (std::size_t k = 0; k < 3; ++k) {
      dlogits[k] = t.probs[k];
      dlogits[k][static_cast<std::size_t>(gold[k])] -= 1.0;
      for (auto& d : dlogits[k]) d *= weights[k];
    }
    fnn_backward(ps, head, t, dlogits);
  };
  auto report = grad_check(ps, loss, [&] { grads_for(beta); }, 1e-5);
  EXPECT_LT(report.max_rel_error, 1e-6);

  grads_for(beta);
  const Matrix combined = ps.grad(head.W_hidden);
  Matrix sum = Matrix::zeros(combined.rows, combined.cols);
  for (std::size_t k = 0; k < 3; ++k) {
    std::array<double, 3> only{0, 0, 0};
    only[k] = beta[k];
    grads_for(only);
    for (std::size_t i = 0; i < sum.size(); ++i) sum.data[i] += ps.grad(head.W_hidden).data[i];
  }
  for (std::size_t i = 0; i < sum.size(); ++i) EXPECT_NEAR(combined.data[i], sum.data[i], 1e-14);
}

TEST(Dropout, InferenceLeavesOutputsBitwiseUnchanged) {
  Rng rng(12);
  ParamSet ps;
  auto fnn = FnnParams::create(ps, 5, 6, 1, &rng, 0.5);
  Vector input(5);
  for (auto& v : input) v = rng.uniform(-1, 1);
  FnnTrace a, b;
  fnn_forward(ps, fnn, input, nullptr, a);
  DropoutPlan zero{0.0, &rng};
  fnn_forward(ps, fnn, input, &zero, b);
  EXPECT_EQ(a.probs, b.probs);
}

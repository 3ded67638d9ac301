/*
 * Copyright 2026 The vfgnn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "property_suite.h"
#include "test_util.h"
#include "vfgnn/autodiff.h"
#include "vfgnn/errors.h"
#include "vfgnn/ops.h"
#include "vfgnn/optim.h"
#include "vfgnn/sparse.h"
#include "vfgnn/tensor.h"

namespace vfgnn {
namespace {

using ad::Var;
using testing::GradientCheck;
using testing::RandomTensor;

TEST(TensorTest, MatmulIdentity) {
  const Tensor m = Tensor::FromRows({{1, 2}, {3, 4}});
  EXPECT_EQ(kernels::Matmul(Tensor::Identity(2), m), m);
}

TEST(TensorTest, MatmulProjection) {
  const Tensor p = Tensor::FromRows({{1, 0}, {0, 0}});
  const Tensor b = Tensor::FromRows({{5}, {7}});
  EXPECT_EQ(kernels::Matmul(p, b), Tensor::FromRows({{5}, {0}}));
}

TEST(TensorTest, MatmulShapeMismatch) {
  EXPECT_THROW(kernels::Matmul(Tensor(2, 3), Tensor(2, 3)), DimensionError);
  EXPECT_THROW(ad::Matmul(Var::Constant(Tensor(2, 3)), Var::Constant(Tensor(2, 3))),
               DimensionError);
}

TEST(AutodiffTest, MatmulGradientOfSumIsOnesTimesBTransposed) {
  Rng rng(1);
  Var a = Var::Parameter(RandomTensor(3, 4, rng));
  Var b = Var::Constant(RandomTensor(4, 2, rng));
  const auto g = ad::GradientValues(ad::Sum(ad::Matmul(a, b)), std::vector<Var>{a});
  const Tensor expected = kernels::Matmul(Tensor(3, 2, 1.0), kernels::Transpose(b.value()));
  EXPECT_LT(kernels::MaxAbsDiff(g[0], expected), 1e-12);
  EXPECT_LE(GradientCheck([&] { return ad::Sum(ad::Matmul(a, b)); }, std::vector<Var>{a}), 1e-6);
}

TEST(SparseTest, EmptyTimesAnythingIsZero) {
  Rng rng(2);
  const SparseMatrix s(3, 4, {});
  const Tensor b = RandomTensor(4, 2, rng);
  EXPECT_EQ(s.Multiply(b), Tensor(3, 2));
}

TEST(SparseTest, SingleEntrySelectsScaledRow) {
  Rng rng(3);
  const SparseMatrix s(2, 2, {{0, 1, 2.0}});
  const Tensor b = RandomTensor(2, 3, rng);
  const Tensor out = s.Multiply(b);
  for (size_t c = 0; c < 3; ++c) {
    EXPECT_DOUBLE_EQ(out(0, c), 2.0 * b(1, c));
    EXPECT_DOUBLE_EQ(out(1, c), 0.0);
  }
}

TEST(SparseTest, MatchesDenseOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SparseMatrix::Entry> entries;
    for (size_t r = 0; r < 5; ++r)
      for (size_t c = 0; c < 5; ++c)
        if (UniformUnit(rng) < 0.4) entries.push_back({r, c, 2.0 * UniformUnit(rng) - 1.0});
    const SparseMatrix s(5, 5, entries);
    const Tensor b = RandomTensor(5, 3, rng);
    EXPECT_LE(kernels::MaxAbsDiff(s.Multiply(b), kernels::Matmul(s.ToDense(), b)), 1e-10);
  }
}

TEST(SparseTest, RejectsBadEntries) {
  EXPECT_THROW(SparseMatrix(2, 2, {{2, 0, 1.0}}), DimensionError);
  EXPECT_THROW(SparseMatrix(2, 2, {{0, 0, 1.0}, {0, 0, 2.0}}), DimensionError);
  EXPECT_THROW(SparseMatrix(2, 3, {}).Multiply(Tensor(2, 1)), DimensionError);
}

TEST(AutodiffTest, SpmmGradient) {
  Rng rng(5);
  const SparseMatrix s(4, 3, {{0, 0, 1.5}, {1, 2, -0.5}, {3, 1, 2.0}, {3, 2, 0.25}});
  Var b = Var::Parameter(RandomTensor(3, 2, rng));
  Var w = Var::Constant(RandomTensor(4, 2, rng));
  EXPECT_LE(GradientCheck([&] { return ad::Sum(ad::Mul(ad::Spmm(s, b), w)); },
                          std::vector<Var>{b}),
            1e-6);
}

TEST(SoftmaxTest, UniformRow) {
  const Tensor out = kernels::SoftmaxRows(Tensor(1, 4, 0.0));
  for (double v : out.values()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(SoftmaxTest, LargeLogitsDoNotOverflow) {
  const Tensor out = kernels::SoftmaxRows(Tensor::FromRows({{1000.0, 0.0}}));
  EXPECT_TRUE(out.AllFinite());
  EXPECT_NEAR(out(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(out(0, 1), 0.0, 1e-12);
}

TEST(SoftmaxTest, RowsSumToOne) {
  Rng rng(6);
  const Tensor out = kernels::SoftmaxRows(RandomTensor(20, 7, rng, 30.0));
  for (size_t r = 0; r < out.rows(); ++r) {
    double s = 0.0;
    for (double v : out.row(r)) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(SoftmaxTest, JacobianMatchesFiniteDifferences) {
  Rng rng(7);
  Var x = Var::Parameter(RandomTensor(1, 5, rng, 2.0));
  Var w = Var::Constant(RandomTensor(1, 5, rng));
  EXPECT_LE(GradientCheck([&] { return ad::Sum(ad::Mul(ad::SoftmaxRows(x), w)); },
                          std::vector<Var>{x}),
            1e-6);
}

TEST(CrossEntropyTest, MatchingOneHotIsZero) {
  const Var p = Var::Constant(Tensor::FromRows({{1.0, 0.0}}));
  EXPECT_NEAR(ad::CrossEntropySoft(p, p).value().item(), 0.0, 1e-11);
}

TEST(CrossEntropyTest, UniformPredictionGivesLogN) {
  Rng rng(8);
  const Var p = Var::Constant(Tensor(3, 5, 0.2));
  const Var t = Var::Constant(kernels::SoftmaxRows(RandomTensor(3, 5, rng)));
  EXPECT_NEAR(ad::CrossEntropySoft(p, t).value().item(), std::log(5.0), 1e-10);
}

TEST(CrossEntropyTest, MatchesScalarLoop) {
  Rng rng(9);
  const Tensor p = kernels::SoftmaxRows(RandomTensor(4, 3, rng, 3.0));
  const Tensor t = kernels::SoftmaxRows(RandomTensor(4, 3, rng, 3.0));
  double expected = 0.0;
  for (size_t r = 0; r < 4; ++r)
    for (size_t c = 0; c < 3; ++c) expected -= t(r, c) * std::log(p(r, c) + 1e-12);
  expected /= 4.0;
  EXPECT_NEAR(ad::CrossEntropySoft(Var::Constant(p), Var::Constant(t)).value().item(), expected,
              1e-14);
  EXPECT_THROW(ad::CrossEntropySoft(Var::Constant(p), Var::Constant(Tensor(4, 2))),
               DimensionError);
}

TEST(CrossEntropyTest, GradientInBothArguments) {
  Rng rng(10);
  Var x = Var::Parameter(RandomTensor(4, 3, rng));
  Var y = Var::Parameter(RandomTensor(4, 3, rng));
  EXPECT_LE(GradientCheck(
                [&] { return ad::CrossEntropySoft(ad::SoftmaxRows(x), ad::SoftmaxRows(y)); },
                std::vector<Var>{x, y}),
            1e-6);
}

TEST(BackwardTest, SumGivesOnes) {
  Var x = Var::Parameter(Tensor(2, 3, 1.7));
  const auto g = ad::GradientValues(ad::Sum(x), std::vector<Var>{x});
  EXPECT_EQ(g[0], Tensor(2, 3, 1.0));
}

TEST(BackwardTest, SquaredNormGivesTwoX) {
  Rng rng(11);
  Var x = Var::Parameter(RandomTensor(3, 2, rng));
  const auto g = ad::GradientValues(ad::Sum(ad::Mul(x, x)), std::vector<Var>{x});
  for (size_t i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(g[0].values()[i], 2.0 * x.value().values()[i]);
}

TEST(BackwardTest, UnreachableTargetIsGraphError) {
  Var x = Var::Parameter(Tensor(1, 1, 1.0));
  Var y = Var::Parameter(Tensor(1, 1, 1.0));
  EXPECT_THROW(ad::Backward(ad::Sum(x), std::vector<Var>{y}), GraphError);
  EXPECT_THROW(ad::Backward(ad::Sum(x), std::vector<Var>{Var::Constant(Tensor(1, 1))}),
               GraphError);
}

TEST(BackwardTest, NonScalarLossIsDimensionError) {
  Var x = Var::Parameter(Tensor(2, 2, 1.0));
  EXPECT_THROW(ad::Backward(x, std::vector<Var>{x}), DimensionError);
}

TEST(BackwardTest, RecordingOffProducesConstants) {
  Var x = Var::Parameter(Tensor(1, 1, 2.0));
  ad::RecordingScope off(false);
  EXPECT_FALSE(ad::Mul(x, x).requires_grad());
}

TEST(BackwardTest, DiscardedRecordLeavesParametersUnchanged) {
  Rng rng(12);
  Var w = Var::Parameter(RandomTensor(3, 3, rng));
  const Tensor before = w.value();
  {
    Var loss = ad::Sum(ad::Exp(ad::Matmul(w, w)));
    auto g = ad::Backward(loss, std::vector<Var>{w}, true);
    (void)ad::Backward(ad::L2Norm(g[0]), std::vector<Var>{w});
  }
  EXPECT_EQ(w.value(), before);
}

// Differentiates <v, dl/dW> with respect to theta and compares with central
// differences of the first-order gradient, which is how the attack uses
// second-order paths.
TEST(BackwardTest, DoubleBackwardMatchesDifferencedGradients) {
  Rng rng(13);
  const Tensor x = RandomTensor(5, 4, rng);
  Var w = Var::Parameter(RandomTensor(4, 3, rng, 0.5));
  Var theta = Var::Parameter(RandomTensor(3, 2, rng, 0.5));
  Var y = Var::Parameter(RandomTensor(5, 2, rng));
  const Tensor v = RandomTensor(4, 3, rng);

  auto first_order = [&](bool higher) {
    Var preds = ad::Matmul(ad::Elu(ad::Matmul(Var::Constant(x), w)), theta);
    Var loss = ad::CrossEntropySoft(ad::SoftmaxRows(preds), ad::SoftmaxRows(y));
    return ad::Backward(loss, std::vector<Var>{w}, higher)[0];
  };
  Var probe = ad::Sum(ad::Mul(first_order(true), Var::Constant(v)));
  const auto analytic = ad::GradientValues(probe, std::vector<Var>{theta, y});
  const auto numeric = testing::NumericGradient(
      [&] {
        const Tensor g = first_order(false).value();
        double s = 0.0;
        for (size_t i = 0; i < g.size(); ++i) s += g.values()[i] * v.values()[i];
        return s;
      },
      std::vector<Var>{theta, y}, 1e-4);
  EXPECT_LE(testing::RelativeError(analytic[0].values(), numeric[0].values()), 1e-3);
  EXPECT_LE(testing::RelativeError(analytic[1].values(), numeric[1].values()), 1e-3);
}

TEST(OpsTest, ReluValues) {
  const Var r = ad::Relu(Var::Constant(Tensor::FromRows({{-1.0, 2.0}})));
  EXPECT_EQ(r.value(), Tensor::FromRows({{0.0, 2.0}}));
}

TEST(OpsTest, L2NormOfZerosHasZeroSubgradient) {
  Var x = Var::Parameter(Tensor(2, 2, 0.0));
  Var n = ad::L2Norm(x);
  EXPECT_EQ(n.value().item(), 0.0);
  EXPECT_EQ(ad::GradientValues(n, std::vector<Var>{x})[0], Tensor(2, 2, 0.0));
}

TEST(OpsTest, ConcatThenSliceRecoversParts) {
  Rng rng(14);
  const Var a = Var::Constant(RandomTensor(3, 2, rng));
  const Var b = Var::Constant(RandomTensor(3, 5, rng));
  const Var c = ad::ConcatCols(std::vector<Var>{a, b});
  EXPECT_EQ(c.cols(), 7u);
  EXPECT_EQ(ad::SliceCols(c, 0, 2).value(), a.value());
  EXPECT_EQ(ad::SliceCols(c, 2, 7).value(), b.value());
  EXPECT_THROW(ad::ConcatCols(std::vector<Var>{a, Var::Constant(Tensor(2, 2))}), DimensionError);
}

TEST(OpsTest, ShapeMismatchesThrow) {
  const Var a = Var::Constant(Tensor(2, 2));
  const Var b = Var::Constant(Tensor(2, 3));
  EXPECT_THROW(ad::Add(a, b), DimensionError);
  EXPECT_THROW(ad::Sub(a, b), DimensionError);
  EXPECT_THROW(ad::Mul(a, b), DimensionError);
}

// Every differentiable op, first order, against central differences.
TEST(OpsTest, FirstOrderGradientsMatchFiniteDifferences) {
  const std::vector<double> errors = testing::FirstOrderErrors();
  for (size_t i = 0; i < errors.size(); ++i) EXPECT_LE(errors[i], 1e-6) << "case " << i;
}

// Every op that sits inside the attack's gradient computation, second order.
TEST(OpsTest, SecondOrderGradientsMatchDifferencedGradients) {
  const std::vector<double> errors = testing::SecondOrderErrors();
  for (size_t i = 0; i < errors.size(); ++i) EXPECT_LE(errors[i], 1e-3) << "case " << i;
}

TEST(OptimTest, SgdStep) {
  Var p = Var::Parameter(Tensor(1, 1, 1.0));
  SgdStep(std::vector<Var>{p}, std::vector<Tensor>{Tensor(1, 1, 2.0)}, 0.1);
  EXPECT_DOUBLE_EQ(p.value().item(), 0.8);
}

TEST(OptimTest, ZeroGradientLeavesParametersUnchanged) {
  Rng rng(17);
  Var p = Var::Parameter(RandomTensor(2, 3, rng));
  const Tensor before = p.value();
  const std::vector<Tensor> zero{Tensor(2, 3)};
  SgdStep(std::vector<Var>{p}, zero, 0.1);
  EXPECT_EQ(p.value(), before);
  AdamState state;
  for (int i = 0; i < 3; ++i) AdamStep(std::vector<Var>{p}, zero, state, 0.1);
  EXPECT_EQ(p.value(), before);
}

TEST(OptimTest, AdamFirstStepIsLrTimesSign) {
  Var p = Var::Parameter(Tensor::FromRows({{1.0, 1.0}}));
  AdamState state;
  AdamStep(std::vector<Var>{p}, std::vector<Tensor>{Tensor::FromRows({{0.5, -3.0}})}, state, 0.01);
  // m_hat = g and v_hat = g^2 after bias correction, so the step is
  // lr * g / (|g| + eps).
  EXPECT_NEAR(p.value()(0, 0), 1.0 - 0.01 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(p.value()(0, 1), 1.0 + 0.01 * 3.0 / (3.0 + 1e-8), 1e-15);
}

TEST(OptimTest, ShapeMismatchThrows) {
  Var p = Var::Parameter(Tensor(1, 2));
  EXPECT_THROW(SgdStep(std::vector<Var>{p}, std::vector<Tensor>{Tensor(2, 1)}, 0.1),
               DimensionError);
  AdamState state;
  EXPECT_THROW(AdamStep(std::vector<Var>{p}, std::vector<Tensor>{Tensor(2, 1)}, state, 0.1),
               DimensionError);
}

}  // namespace
}  // namespace vfgnn

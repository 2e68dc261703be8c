#include "support.hpp"

#include <gtest/gtest.h>

using namespace coeba;
using namespace coeba::testing;

namespace {

constexpr Real kLog2 = 0.69314718055994531;
const Real kOrthogonal = std::log1p(std::exp(-1.0));  // -log(e / (e + 1))

LossConfig tau(Real t) {
  LossConfig c;
  c.tau = t;
  return c;
}

LatentState latent_from(const Matrix& z) {
  return {z, Matrix::Zero(z.rows(), z.cols()), z};
}

Matrix orthonormal2() { return Matrix::Identity(2, 2); }

/// Relabels nodes by `perm` (new id of old node i is perm[i]).
Graph permuted(const Graph& g, const std::vector<NodeId>& perm) {
  EdgeList e;
  for (const Edge& x : g.edges()) e.emplace_back(perm[x.u], perm[x.v]);
  return Graph::structure_only(g.n_nodes(), e);
}

Matrix permuted_rows(const Matrix& z, const std::vector<NodeId>& perm) {
  Matrix out(z.rows(), z.cols());
  for (Index i = 0; i < z.rows(); ++i) out.row(perm[i]) = z.row(i);
  return out;
}

/// Max relative error between an analytic matrix gradient and central
/// differences of `f` around `x`.
Real matrix_fd_error(const Matrix& x, const Matrix& analytic,
                     const std::function<Real(const Matrix&)>& f, Real h = 1e-6) {
  Matrix numeric(x.rows(), x.cols());
  Matrix p = x;
  for (Index i = 0; i < x.size(); ++i) {
    const Real orig = p.data()[i];
    p.data()[i] = orig + h;
    const Real up = f(p);
    p.data()[i] = orig - h;
    const Real down = f(p);
    p.data()[i] = orig;
    numeric.data()[i] = (up - down) / (2 * h);
  }
  return (analytic - numeric).norm() / std::max({analytic.norm(), numeric.norm(), 1e-12});
}

}  // namespace

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

TEST(ReconLoss, StandardNormalPosteriorHasZeroKl) {
  const Graph g = six_node();
  LatentState s{Matrix::Zero(6, 3), Matrix::Zero(6, 3), Matrix::Zero(6, 3)};
  EXPECT_NEAR(recon_loss(g, s, {}, true).kl, 0.0, 1e-6);
}

TEST(ReconLoss, OrthogonalPairCostsLog2) {
  EXPECT_NEAR(detail::bce_positive(0.0).loss, kLog2, 1e-6);
  EXPECT_NEAR(detail::bce_positive(0.0).loss, 0.6931, 1e-4);
  // z = 0: every entry, positive or negative, has probability one half.
  const Graph g = Graph::structure_only(2, edges({{0, 1}}));
  EXPECT_NEAR(recon_loss(g, latent_from(Matrix::Zero(2, 2)), {}, false).value, kLog2, 1e-6);
  EXPECT_NEAR(recon_loss(six_node(), latent_from(Matrix::Zero(6, 2)), {}, false).value, kLog2, 1e-6);
}

TEST(ReconLoss, PerfectReconstructionIsClippedToNearZero) {
  const Graph g = Graph::structure_only(2, edges({{0, 1}}));
  const Matrix z = Matrix::Constant(2, 1, 5.0);  // every logit 25: probabilities clip at 1 - 1e-7
  const ReconResult r = recon_loss_grad(g, latent_from(z), {}, false);
  EXPECT_NEAR(r.value, 0.0, 1e-6);
  EXPECT_NEAR(r.value, -std::log(1.0 - kProbClip), 1e-12);
  EXPECT_TRUE(r.grad.z.isZero(0.0));
}

TEST(ReconLoss, ExtremeLogitsStayFinite) {
  const Graph g = six_node();
  const Matrix z = random_matrix(6, 3, 2, 1e3);
  EXPECT_TRUE(std::isfinite(recon_loss(g, latent_from(z), {}, false).value));
}

TEST(ReconLoss, RejectsShapeMismatch) {
  EXPECT_THROW(recon_loss(six_node(), latent_from(Matrix::Zero(5, 2)), {}, false), ShapeError);
}

TEST(WithinClAug, ClosedForms) {
  EXPECT_NEAR(within_cl_aug(Matrix::Constant(1, 3, 0.7), tau(1.0)), 0.0, 1e-6);
  EXPECT_NEAR(within_cl_aug(Matrix::Constant(2, 3, 0.7), tau(1.0)), kLog2, 1e-6);
  EXPECT_NEAR(within_cl_aug(orthonormal2(), tau(1.0)), kOrthogonal, 1e-6);
  EXPECT_NEAR(within_cl_aug(orthonormal2(), tau(1.0)), 0.3133, 1e-4);
}

TEST(WithinClOri, ClosedForms) {
  const Matrix z = random_matrix(5, 3, 1);
  EXPECT_NEAR(within_cl_ori(z, complete(5), tau(0.5)), 0.0, 1e-6);
  EXPECT_NEAR(within_cl_ori(orthonormal2(), Graph::structure_only(2, {}), tau(1.0)), kOrthogonal,
              1e-6);
}

TEST(BtnCl, ClosedForms) {
  const Matrix z = random_matrix(5, 3, 1);
  EXPECT_NEAR(btn_cl(z, z, complete(5), tau(0.5)), 0.0, 1e-6);
  EXPECT_NEAR(btn_cl(orthonormal2(), orthonormal2(), Graph::structure_only(2, {}), tau(1.0)),
              kOrthogonal, 1e-6);
}

TEST(OverallLoss, ClosedForms) {
  LossConfig zero;
  zero.lambda1 = zero.lambda2 = zero.lambda3 = 0.0;
  const LossComponents c{0.3, 0.4, 0.5, 0.6, 0.7};
  EXPECT_NEAR(overall_loss(c, zero), 0.7, 1e-6);
  EXPECT_NEAR(overall_loss({1, 1, 1, 1, 1}, {}), 11.0, 1e-6);
  EXPECT_NEAR(overall_loss({0.25, 0.5, 0, 0, 0}, {}), 3.0 * 0.75, 1e-6);
  EXPECT_THROW(overall_loss({std::nan(""), 0, 0, 0, 0}, {}), NumericError);
}

// ---------------------------------------------------------------------------
// Properties
// ---------------------------------------------------------------------------

TEST(ContrastiveLosses, NonNegative) {
  const Graph g = six_node(), ga = six_node_view();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Matrix z = random_matrix(6, 3, seed, 3.0), za = random_matrix(6, 3, seed + 100, 3.0);
    const LossConfig c = tau(0.1 + 0.05 * static_cast<Real>(seed % 10));
    EXPECT_GE(within_cl_aug(za, c), 0.0);
    EXPECT_GE(within_cl_ori(z, g, c), 0.0);
    EXPECT_GE(btn_cl(z, za, ga, c), 0.0);
  }
}

TEST(ContrastiveLosses, EqualSimilaritiesAndFullPositiveSetGiveZero) {
  const Matrix z = Matrix::Constant(4, 2, 1.0);
  EXPECT_NEAR(within_cl_ori(z, complete(4), {}), 0.0, 1e-15);
  EXPECT_NEAR(btn_cl(z, z, complete(4), {}), 0.0, 1e-15);
}

TEST(Losses, PermutationInvariant) {
  const Graph g = six_node(), ga = six_node_view();
  const std::vector<NodeId> perm{3, 5, 0, 1, 4, 2};
  const Graph pg = permuted(g, perm), pga = permuted(ga, perm);
  const Matrix z = random_matrix(6, 3, 1), za = random_matrix(6, 3, 2);
  const Matrix pz = permuted_rows(z, perm), pza = permuted_rows(za, perm);
  const LossConfig c;
  EXPECT_NEAR(within_cl_aug(za, c), within_cl_aug(pza, c), 1e-12);
  EXPECT_NEAR(within_cl_ori(z, g, c), within_cl_ori(pz, pg, c), 1e-12);
  EXPECT_NEAR(btn_cl(z, za, ga, c), btn_cl(pz, pza, pga, c), 1e-12);
  const LatentState s{z, za * 0.1, z};
  const LatentState ps{pz, permuted_rows(za * 0.1, perm), pz};
  EXPECT_NEAR(recon_loss(g, s, c, true).value, recon_loss(pg, ps, c, true).value, 1e-12);
}

TEST(ContrastiveLosses, RowRescalingInvariant) {
  const Graph g = six_node(), ga = six_node_view();
  const Matrix z = random_matrix(6, 3, 1), za = random_matrix(6, 3, 2);
  Vector scale(6);
  scale << 0.1, 2.0, 7.5, 1.0, 0.33, 12.0;
  const Matrix sz = scale.asDiagonal() * z, sza = scale.reverse().asDiagonal() * za;
  const LossConfig c;
  EXPECT_NEAR(within_cl_aug(za, c), within_cl_aug(sza, c), 1e-8);
  EXPECT_NEAR(within_cl_ori(z, g, c), within_cl_ori(sz, g, c), 1e-8);
  EXPECT_NEAR(btn_cl(z, za, ga, c), btn_cl(sz, sza, ga, c), 1e-8);
}

TEST(ContrastiveLosses, ZeroRowsAreHandled) {
  Matrix z = random_matrix(4, 3, 1);
  z.row(2).setZero();
  const auto r = within_cl_aug_grad(z, {});
  EXPECT_TRUE(std::isfinite(r.value));
  EXPECT_TRUE(r.d_anchor.allFinite());
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

TEST(LossGradients, ContrastiveMatchFiniteDifferences) {
  const Graph g = six_node(), ga = six_node_view();
  const Matrix z = random_matrix(6, 3, 1), za = random_matrix(6, 3, 2);
  const LossConfig c = tau(0.5);
  EXPECT_LT(matrix_fd_error(za, within_cl_aug_grad(za, c).d_anchor,
                            [&](const Matrix& m) { return within_cl_aug(m, c); }),
            1e-6);
  EXPECT_LT(matrix_fd_error(z, within_cl_ori_grad(z, g, c).d_anchor,
                            [&](const Matrix& m) { return within_cl_ori(m, g, c); }),
            1e-6);
  const auto b = btn_cl_grad(z, za, ga, c);
  EXPECT_LT(matrix_fd_error(z, b.d_anchor, [&](const Matrix& m) { return btn_cl(m, za, ga, c); }),
            1e-6);
  EXPECT_LT(matrix_fd_error(za, b.d_target, [&](const Matrix& m) { return btn_cl(z, m, ga, c); }),
            1e-6);
}

TEST(LossGradients, ReconMatchesFiniteDifferences) {
  const Graph g = six_node();
  const Matrix z = random_matrix(6, 3, 1), mu = random_matrix(6, 3, 2), lv = random_matrix(6, 3, 3);
  const ReconResult r = recon_loss_grad(g, LatentState{mu, lv, z}, {}, true);
  EXPECT_LT(matrix_fd_error(z, r.grad.z,
                            [&](const Matrix& m) {
                              return recon_loss(g, LatentState{mu, lv, m}, {}, true).value;
                            }),
            1e-6);
  EXPECT_LT(matrix_fd_error(mu, r.grad.mu,
                            [&](const Matrix& m) {
                              return recon_loss(g, LatentState{m, lv, z}, {}, true).value;
                            }),
            1e-6);
  EXPECT_LT(matrix_fd_error(lv, r.grad.logvar,
                            [&](const Matrix& m) {
                              return recon_loss(g, LatentState{mu, m, z}, {}, true).value;
                            }),
            1e-6);
}

TEST(LossGradients, SampledReconMatchesFiniteDifferences) {
  const Graph g = six_node();
  LossConfig c;
  c.recon_mode = ReconMode::sampled;
  const Matrix z = random_matrix(6, 3, 1);
  Rng rng(3);
  const ReconResult r = recon_loss_grad(g, latent_from(z), c, false, &rng);
  EXPECT_LT(matrix_fd_error(z, r.grad.z,
                            [&](const Matrix& m) {
                              Rng again(3);
                              return recon_loss(g, latent_from(m), c, false, &again).value;
                            }),
            1e-6);
}

class JointGradient : public ::testing::TestWithParam<Backbone> {};

TEST_P(JointGradient, MatchesFiniteDifferences) {
  const GradCheck r = joint_gradient_check(GetParam());
  EXPECT_LT(r.max_rel, 1e-4) << "worst: " << r.worst;
}

INSTANTIATE_TEST_SUITE_P(Backbones, JointGradient,
                         ::testing::Values(Backbone::gae, Backbone::gnae, Backbone::vgnae),
                         [](const auto& info) { return to_string(info.param); });

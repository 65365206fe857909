#include <doctest.h>

#include "test_support.hpp"

#include "bilevel/estimators.hpp"
#include "bilevel/exp_ridge.hpp"
#include "bilevel/ground_truth.hpp"
#include "bilevel/hypercleaning.hpp"
#include "bilevel/kernels.hpp"
#include "bilevel/quadratic.hpp"
#include "bilevel/synthetic_minimax.hpp"

using namespace bilevel;
using namespace bilevel::testing;

// ---------------------------------------------------------------------------
// quadratic family

TEST_CASE("quadratic: decoupled identity case") {
  const Matrix one = Matrix::Identity(1, 1);
  const Matrix zero = Matrix::Zero(1, 1);
  const Vector z0 = Vector::Zero(1);
  QuadraticBilevel q(one, zero, zero, one, zero, z0, z0, z0);
  Vector x(1);
  x << 1.7;
  CHECK(q.phi(x) == doctest::Approx(0.5 * 1.7 * 1.7));
  CHECK(q.grad_phi(Vector::Zero(1)).norm() == 0.0);
  CHECK(q.y_star(x).norm() == 0.0);
}

TEST_CASE("quadratic: closed forms match finite differences") {
  std::mt19937_64 rng(17);
  auto q = make_quadratic_bilevel(123, 4, 3, 8.0);
  for (int it = 0; it < 4; ++it) {
    const Vector x = randn(rng, 4);
    const Vector fd =
        fd_gradient([&](const Vector& xq) { return q->phi(xq); }, x, 1e-6);
    const Vector gp = q->grad_phi(x);
    CHECK((gp - fd).norm() <= 1e-6 * (1.0 + gp.norm()));
    // first-order condition of the inner argmin
    CHECK(q->grad_g_y(x, q->y_star(x)).norm() <= 1e-10);
    // y*_lambda is the Lagrangian inner minimizer
    const double lambda = 500.0;
    const Vector yl = q->y_star_lambda(lambda, x);
    CHECK((q->grad_f_y(x, yl) + lambda * q->grad_g_y(x, yl)).norm() <= 1e-8);
  }
  std::mt19937_64 rng2(18);
  check_bilevel_oracle(*q, rng2);
}

TEST_CASE("quadratic: generator contract") {
  CHECK_THROWS_AS(make_quadratic_bilevel(1, 3, 3, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(make_quadratic_bilevel(1, 0, 3, 2.0), std::invalid_argument);
  auto a = make_quadratic_bilevel(9, 5, 4, 25.0);
  auto b = make_quadratic_bilevel(9, 5, 4, 25.0);
  CHECK((a->Q() - b->Q()).norm() == 0.0);  // deterministic in the seed
  CHECK(a->smoothness().mu == doctest::Approx(1.0));
  // conditioning of the lower level tracks the requested value
  CHECK(max_eig(a->Q()) == doctest::Approx(25.0));
  CHECK(min_eig(a->Q()) == doctest::Approx(1.0));
  CHECK(min_eig(a->hess_phi()) > 0.0);
}

TEST_CASE("quadratic: hyper-Hessian is constant in x") {
  auto q = make_quadratic_bilevel(7, 4, 4, 6.0);
  std::mt19937_64 rng(71);
  const double lambda = 1e5;
  OracleCounter ctr(4);
  CountingBilevel co(*q, ctr);
  LagrangianContext ctx(co, lambda, q->smoothness());
  const Vector x1 = randn(rng, 4), x2 = randn(rng, 4);
  const Matrix h1 =
      hess_estimate(ctx, x1, q->y_star_lambda(lambda, x1), q->y_star(x1));
  const Matrix h2 =
      hess_estimate(ctx, x2, q->y_star_lambda(lambda, x2), q->y_star(x2));
  CHECK((h1 - h2).norm() <= 1e-10 * (1.0 + h1.norm()));
}

// ---------------------------------------------------------------------------
// piecewise saddle profile

TEST_CASE("w_piecewise: anchor values") {
  const double eps = 0.01, L = 3.0;
  const double se = std::sqrt(eps);
  CHECK(w_piecewise(0.0, eps, L).value == doctest::Approx(0.0));
  // valley: value -(3L+1) eps^{3/2} / 3, flat
  const WEval valley = w_piecewise(-(L + 1.0) * se, eps, L);
  CHECK(valley.value == doctest::Approx(-(3 * L + 1) * eps * se / 3.0));
  CHECK(valley.d1 == doctest::Approx(0.0));
  // strict saddle curvature at the origin
  CHECK(w_piecewise(0.0, eps, L).d2 == doctest::Approx(-2.0 * se));
  CHECK_THROWS_AS(w_piecewise(0.0, -1.0, L), std::invalid_argument);
  CHECK_THROWS_AS(w_piecewise(0.0, eps, 0.5), std::invalid_argument);
}

TEST_CASE("w_piecewise: C1 at every breakpoint") {
  for (double eps : {0.01, 0.3}) {
    for (double L : {1.0, 3.0, 7.5}) {
      const double se = std::sqrt(eps);
      for (double bp : {-L * se, -se, 0.0, se, L * se}) {
        const WEval left = w_piecewise(bp - 1e-13, eps, L);
        const WEval right = w_piecewise(bp + 1e-13, eps, L);
        CHECK(std::abs(left.value - right.value) <= 1e-12);
        CHECK(std::abs(left.d1 - right.d1) <= 1e-12);
      }
    }
  }
}

TEST_CASE("w_piecewise: derivatives consistent inside branches") {
  const double eps = 0.04, L = 2.0;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(-1.2, 1.2);
  for (int i = 0; i < 200; ++i) {
    const double x = unif(rng);
    const double h = 1e-7;
    const WEval lo = w_piecewise(x - h, eps, L);
    const WEval hi = w_piecewise(x + h, eps, L);
    const WEval mid = w_piecewise(x, eps, L);
    // skip points straddling a breakpoint
    const double se = std::sqrt(eps);
    bool near_bp = false;
    for (double bp : {-(L)*se, -se, 0.0, se, L * se})
      if (std::abs(x - bp) < 10 * h) near_bp = true;
    if (near_bp) continue;
    CHECK(mid.d1 == doctest::Approx((hi.value - lo.value) / (2 * h)).epsilon(1e-5));
    CHECK(mid.d2 == doctest::Approx((hi.d1 - lo.d1) / (2 * h)).epsilon(1e-5));
  }
}

// ---------------------------------------------------------------------------
// synthetic minimax

TEST_CASE("synthetic minimax: analytic ground truth") {
  auto s = make_synthetic_minimax(0.01, 3.0);
  Vector x = Vector::Zero(3);
  CHECK(s->y_star(x).norm() == 0.0);
  CHECK(s->phi(x) == doctest::Approx(0.0));
  CHECK(s->grad_phi(x).norm() == doctest::Approx(0.0));
  CHECK(s->ground_truth(x).hess_phi_min_eig ==
        doctest::Approx(-2.0 * std::sqrt(0.01)));
  CHECK(s->ground_truth(x).xi == doctest::Approx(0.2));

  std::mt19937_64 rng(31);
  for (int it = 0; it < 5; ++it) {
    const Vector xr = randn(rng, 3, 0.4);
    // phi via the exact best response, differentiated numerically
    const Vector fd = fd_gradient(
        [&](const Vector& xq) { return s->f_val(xq, s->y_star(xq)); }, xr,
        1e-6);
    CHECK((s->grad_phi(xr) - fd).norm() <= 1e-6 * (1.0 + fd.norm()));
  }
  std::mt19937_64 rng2(32);
  check_minimax_oracle(*s, rng2);
}

// ---------------------------------------------------------------------------
// hypercleaning

TEST_CASE("hypercleaning: construction and bookkeeping") {
  SparseMatrix features;
  Vector labels;
  make_synthetic_logistic_data(99, 140, 10, features, labels);
  CHECK_THROWS_AS(make_hypercleaning(features, labels, 0.3, 1.0, 1e-3, 5),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_hypercleaning(features, labels, 0.995, 0.2, 1e-3, 5),
                  std::invalid_argument);

  auto h1 = make_hypercleaning(features, labels, 0.3, 0.25, 1e-3, 5);
  auto h2 = make_hypercleaning(features, labels, 0.3, 0.25, 1e-3, 5);
  auto h3 = make_hypercleaning(features, labels, 0.3, 0.25, 1e-3, 6);
  CHECK(h1->flipped_indices() == h2->flipped_indices());  // same seed
  CHECK(h1->flipped_indices() != h3->flipped_indices());
  CHECK(static_cast<int>(h1->flipped_indices().size()) ==
        static_cast<int>(0.25 * h1->n_train()));
  // flipped labels really are flipped
  for (int i : h1->flipped_indices())
    CHECK(h1->train_labels()[i] == 1.0 - h1->clean_train_labels()[i]);
}

TEST_CASE("hypercleaning: oracle structure") {
  SparseMatrix features;
  Vector labels;
  make_synthetic_logistic_data(12, 90, 8, features, labels);
  auto h = make_hypercleaning(features, labels, 0.3, 0.2, 1e-3, 12);
  std::mt19937_64 rng(13);
  check_bilevel_oracle(*h, rng, 2);

  const Vector x = randn(rng, h->dim_x(), 0.5);
  const Vector y = randn(rng, h->dim_y(), 0.5);

  // ridge term keeps the y-Hessian uniformly positive definite
  CHECK(min_eig(h->hess_g_yy(x, y)) >= 2.0 * 1e-3 - 1e-12);

  // grad_g_x and hess blocks against finite differences
  const Vector fdx = fd_gradient(
      [&](const Vector& xq) { return h->g_val(xq, y); }, x, 1e-6);
  CHECK((h->grad_g_x(x, y) - fdx).norm() <= 1e-6 * (1.0 + fdx.norm()));
  const Vector fdy = fd_gradient(
      [&](const Vector& yq) { return h->f_val(x, yq); }, y, 1e-6);
  CHECK((h->grad_f_y(x, y) - fdy).norm() <= 1e-6 * (1.0 + fdy.norm()));

  // matrix-free products agree with the dense blocks
  const Vector vy = randn(rng, h->dim_y());
  const Vector vx = randn(rng, h->dim_x());
  CHECK((h->hvp_g_yy(x, y, vy) - h->hess_g_yy(x, y) * vy).norm() <= 1e-10);
  CHECK((h->hvp_g_xy(x, y, vy) - h->hess_g_xy(x, y) * vy).norm() <= 1e-10);
  CHECK((h->hvp_g_yx(x, y, vx) - h->hess_g_xy(x, y).transpose() * vx).norm() <=
        1e-10);
  CHECK((h->hvp_g_xx(x, y, vx) - h->hess_g_xx(x, y) * vx).norm() <= 1e-10);
  CHECK((h->hvp_f_yy(x, y, vy) - h->hess_f_yy(x, y) * vy).norm() <= 1e-10);
}

TEST_CASE("hypercleaning: sigma(20) weights recover plain ridge logistic") {
  SparseMatrix features;
  Vector labels;
  make_synthetic_logistic_data(21, 80, 6, features, labels);
  auto h = make_hypercleaning(features, labels, 0.25, 0.0, 1e-3, 21);
  std::mt19937_64 rng(22);
  const Vector y = randn(rng, h->dim_y(), 0.5);
  const Vector x20 = Vector::Constant(h->dim_x(), 20.0);
  // plain average loss + ridge, weights identically 1
  double plain = 1e-3 * y.squaredNorm();
  const SparseMatrix tr = features.slice_rows(0, h->n_train());
  Vector z;
  kernels::row_products(tr, y, z);
  for (int i = 0; i < h->n_train(); ++i)
    plain += kernels::logistic_loss(z[i], h->train_labels()[i]) / h->n_train();
  CHECK(h->g_val(x20, y) == doctest::Approx(plain).epsilon(1e-7));
}

TEST_CASE("hypercleaning: flip AUC of an ideal separator") {
  SparseMatrix features;
  Vector labels;
  make_synthetic_logistic_data(33, 60, 5, features, labels);
  auto h = make_hypercleaning(features, labels, 0.25, 0.3, 1e-3, 33);
  Vector x = Vector::Constant(h->dim_x(), 1.0);
  for (int i : h->flipped_indices()) x[i] = -1.0;
  CHECK(h->flip_auc(x) == doctest::Approx(1.0));
  CHECK(h->flip_auc(Vector::Zero(h->dim_x())) == doctest::Approx(0.5));
}

// ---------------------------------------------------------------------------
// exponential-ridge tuning

namespace {
// independent multinomial cross-entropy for the explicit-data test
double naive_ce(const SparseMatrix& a, const std::vector<int>& lab,
                const Vector& y, int c) {
  const int p = static_cast<int>(a.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Vector u(c);
    for (int j = 0; j < c; ++j)
      u[j] = a.row_dot(i, y.segment(static_cast<Eigen::Index>(j) * p, p));
    total += std::log(u.array().exp().sum()) - u[lab[i]];
  }
  return total / static_cast<double>(a.rows());
}
}  // namespace

TEST_CASE("exp_ridge: uniform ridge at x = 0 against an independent CE") {
  std::mt19937_64 rng(76);
  Matrix dense(4, 3);
  dense << 0.3, -0.7, 0.1, 1.0, 0.2, -0.4, -0.9, 0.5, 0.6, 0.2, 0.2, -1.1;
  const SparseMatrix feats = SparseMatrix::from_dense(dense);
  const std::vector<int> labs = {0, 1, 2, 1};
  ExpRidgeTuning e(feats, labs, feats, labs, 3);
  const Vector y = randn(rng, e.dim_y(), 0.5);
  const double cp = 3.0 * 3.0;
  CHECK(e.g_val(Vector::Zero(3), y) ==
        doctest::Approx(naive_ce(feats, labs, y, 3) +
                        y.squaredNorm() / (2.0 * cp)));
  CHECK(e.f_val(Vector::Zero(3), y) == doctest::Approx(naive_ce(feats, labs, y, 3)));
}

TEST_CASE("exp_ridge: oracle structure and cross block") {
  auto e = make_exp_ridge_tuning(77, 50, 30, 6, 3);
  std::mt19937_64 rng(78);
  const int p = e->n_features(), c = e->n_classes();
  const Vector y = randn(rng, e->dim_y(), 0.5);
  const double cp = static_cast<double>(c) * p;

  const Vector x = randn(rng, p, 0.5);
  const Vector fdx = fd_gradient(
      [&](const Vector& xq) { return e->g_val(xq, y); }, x, 1e-6);
  CHECK((e->grad_g_x(x, y) - fdx).norm() <= 1e-6 * (1.0 + fdx.norm()));
  const Vector fdy = fd_gradient(
      [&](const Vector& yq) { return e->g_val(x, yq); }, y, 1e-6);
  CHECK((e->grad_g_y(x, y) - fdy).norm() <= 1e-5 * (1.0 + fdy.norm()));

  // cross block: entry (k, (j,k)) = exp(x_k) y_{jk} / (cp), zero elsewhere
  const Matrix gxy = e->hess_g_xy(x, y);
  for (int k = 0; k < p; ++k)
    for (int j = 0; j < c; ++j)
      for (int k2 = 0; k2 < p; ++k2) {
        const double expect =
            k == k2 ? std::exp(x[k]) * y[static_cast<Eigen::Index>(j) * p + k] / cp
                    : 0.0;
        CHECK(gxy(k, static_cast<Eigen::Index>(j) * p + k2) ==
              doctest::Approx(expect).epsilon(1e-12));
      }

  CHECK_THROWS_AS(ExpRidgeTuning(SparseMatrix(3), {}, SparseMatrix(3), {}, 3),
                  std::invalid_argument);
}

// ---------------------------------------------------------------------------
// ground-truth evaluator

namespace {

/// Opaque pass-through so the evaluator cannot dispatch to the closed form.
class OpaqueBilevel final : public BilevelOracle {
 public:
  explicit OpaqueBilevel(const BilevelOracle& o) : o_(o) {}
  int dim_x() const override { return o_.dim_x(); }
  int dim_y() const override { return o_.dim_y(); }
  SmoothnessParams smoothness() const override { return o_.smoothness(); }
  double f_val(const Vector& x, const Vector& y) const override { return o_.f_val(x, y); }
  double g_val(const Vector& x, const Vector& y) const override { return o_.g_val(x, y); }
  Vector grad_f_x(const Vector& x, const Vector& y) const override { return o_.grad_f_x(x, y); }
  Vector grad_f_y(const Vector& x, const Vector& y) const override { return o_.grad_f_y(x, y); }
  Vector grad_g_x(const Vector& x, const Vector& y) const override { return o_.grad_g_x(x, y); }
  Vector grad_g_y(const Vector& x, const Vector& y) const override { return o_.grad_g_y(x, y); }
  Matrix hess_f_xx(const Vector& x, const Vector& y) const override { return o_.hess_f_xx(x, y); }
  Matrix hess_f_xy(const Vector& x, const Vector& y) const override { return o_.hess_f_xy(x, y); }
  Matrix hess_f_yy(const Vector& x, const Vector& y) const override { return o_.hess_f_yy(x, y); }
  Matrix hess_g_xx(const Vector& x, const Vector& y) const override { return o_.hess_g_xx(x, y); }
  Matrix hess_g_xy(const Vector& x, const Vector& y) const override { return o_.hess_g_xy(x, y); }
  Matrix hess_g_yy(const Vector& x, const Vector& y) const override { return o_.hess_g_yy(x, y); }

 private:
  const BilevelOracle& o_;
};

/// f independent of y, g independent of x: the hypergradient reduces to
/// grad_x f.
class DecoupledToy final : public BilevelOracle {
 public:
  int dim_x() const override { return 2; }
  int dim_y() const override { return 2; }
  SmoothnessParams smoothness() const override { return {1.0, 2.0, 0.0, 0.0, 2.0}; }
  double f_val(const Vector& x, const Vector&) const override {
    return 0.5 * x.squaredNorm() + x[0];
  }
  double g_val(const Vector&, const Vector& y) const override {
    return y.squaredNorm();
  }
  Vector grad_f_x(const Vector& x, const Vector&) const override {
    Vector g = x;
    g[0] += 1.0;
    return g;
  }
  Vector grad_f_y(const Vector&, const Vector&) const override { return Vector::Zero(2); }
  Vector grad_g_x(const Vector&, const Vector&) const override { return Vector::Zero(2); }
  Vector grad_g_y(const Vector&, const Vector& y) const override { return 2.0 * y; }
  Matrix hess_f_xx(const Vector&, const Vector&) const override { return Matrix::Identity(2, 2); }
  Matrix hess_f_xy(const Vector&, const Vector&) const override { return Matrix::Zero(2, 2); }
  Matrix hess_f_yy(const Vector&, const Vector&) const override { return Matrix::Zero(2, 2); }
  Matrix hess_g_xx(const Vector&, const Vector&) const override { return Matrix::Zero(2, 2); }
  Matrix hess_g_xy(const Vector&, const Vector&) const override { return Matrix::Zero(2, 2); }
  Matrix hess_g_yy(const Vector&, const Vector&) const override { return 2.0 * Matrix::Identity(2, 2); }
};

}  // namespace

TEST_CASE("ground_truth_eval: generic path reproduces the closed form") {
  auto q = make_quadratic_bilevel(55, 3, 3, 5.0);
  OpaqueBilevel opaque(*q);
  std::mt19937_64 rng(56);
  const Vector x = randn(rng, 3, 0.5);
  const GroundTruth via_closed = ground_truth_eval(*q, x, 1e-10);
  const GroundTruth via_generic = ground_truth_eval(opaque, x, 1e-10);
  CHECK((via_generic.grad_phi - via_closed.grad_phi).norm() <= 1e-8);
  CHECK(via_generic.phi == doctest::Approx(via_closed.phi).epsilon(1e-10));
  CHECK(via_generic.hess_phi_min_eig ==
        doctest::Approx(via_closed.hess_phi_min_eig).epsilon(1e-3));
  CHECK(q->grad_g_y(x, via_generic.y_star).norm() <= 10.0 * 1e-10);
}

TEST_CASE("ground_truth_eval: synthetic minimax saddle") {
  auto s = make_synthetic_minimax(0.01, 3.0);
  const GroundTruth gt = ground_truth_eval(*s, Vector::Zero(3), 1e-9);
  CHECK(gt.grad_phi.norm() == doctest::Approx(0.0));
  CHECK(gt.hess_phi_min_eig == doctest::Approx(-0.2));
  CHECK(gt.xi == doctest::Approx(0.2));
}

TEST_CASE("ground_truth_eval: decoupled problem has grad phi = grad_x f") {
  DecoupledToy toy;
  Vector x(2);
  x << 0.3, -0.8;
  const GroundTruth gt = ground_truth_eval(toy, x, 1e-10);
  CHECK((gt.grad_phi - toy.grad_f_x(x, Vector::Zero(2))).norm() <= 1e-8);
  CHECK_THROWS_AS(ground_truth_eval(toy, x, -1.0), std::invalid_argument);
}

TEST_CASE("solve_strongly_convex signals non-convergence") {
  // a gradient map whose fixed point keeps drifting defeats the cap
  auto bad_grad = [](const Vector& z) {
    return Vector(0.001 * Vector::Ones(z.size()) * (1.0 + z.norm()));
  };
  CHECK_THROWS_AS(
      solve_strongly_convex(bad_grad, Vector::Zero(3), 1.0, 2.0, 1e-14, 2),
      std::runtime_error);
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "uvloss/cli.hpp"
#include "uvloss/robust_loss.hpp"

using namespace uvloss;

TEST_CASE("LossParams enforces the omega range") {
  CHECK_NOTHROW(LossParams(0.5));
  CHECK_NOTHROW(LossParams(1e-9));
  CHECK_THROWS_AS(LossParams(0.0), std::invalid_argument);
  CHECK_THROWS_AS(LossParams(0.50001), std::invalid_argument);
  CHECK_THROWS_AS(LossParams(-0.25), std::invalid_argument);
  CHECK_THROWS_AS(LossParams(std::nan("")), std::invalid_argument);
}

TEST_CASE("Residual rejects non-finite values") {
  CHECK_NOTHROW(Residual(-3.5));
  CHECK_THROWS_AS(Residual(std::numeric_limits<double>::infinity()), std::invalid_argument);
  CHECK_THROWS_AS(Residual(std::nan("")), std::invalid_argument);
}

TEST_CASE("dp_loss matches hand-evaluated values") {
  CHECK(dp_loss(0.0, 0.5) == 0.0);
  // Both branches agree at the transition.
  CHECK(dp_loss(1.0, 0.5) == Catch::Approx(0.34657359027997265).epsilon(1e-14));
  CHECK(dp_loss(3.0, 0.25) == Catch::Approx(0.6732867951399863).epsilon(1e-14));
  CHECK(dp_loss(Residual(3.0), LossParams(0.25)) == dp_loss(3.0, 0.25));
}

TEST_CASE("dp_grad matches hand-evaluated values") {
  CHECK(dp_grad(0.0, 0.5) == 0.0);
  CHECK(dp_grad(0.5, 0.5) == Catch::Approx(0.4).epsilon(1e-14));
  CHECK(dp_grad(2.0, 0.25) == 0.25);
  CHECK(dp_grad(-2.0, 0.25) == -0.25);
}

TEST_CASE("smooth_l1 and its gradient match hand-evaluated values") {
  CHECK(smooth_l1(0.0) == 0.0);
  CHECK(smooth_l1(0.5) == 0.125);
  CHECK(smooth_l1(2.0) == 1.5);
  CHECK(smooth_l1_grad(0.0) == 0.0);
  CHECK(smooth_l1_grad(-0.5) == -0.5);
  CHECK(smooth_l1_grad(2.0) == 1.0);
}

TEST_CASE("magnitude-form evaluators reproduce the non-derivative shapes") {
  // omega*|x|/(1+x^2) inside, omega outside: discontinuous at |x| = 1.
  CHECK(dp_grad_magnitude_form(0.5, 0.5) == Catch::Approx(0.2).epsilon(1e-14));
  CHECK(dp_grad_magnitude_form(-0.5, 0.5) == Catch::Approx(0.2).epsilon(1e-14));
  CHECK(dp_grad_magnitude_form(2.0, 0.25) == 0.25);
  const double below = dp_grad_magnitude_form(std::nextafter(1.0, 0.0), 0.5);
  const double above = dp_grad_magnitude_form(1.0, 0.5);
  CHECK(below == Catch::Approx(0.25).epsilon(1e-9));
  CHECK(above == 0.5);
  CHECK(smooth_l1_grad_magnitude_form(-0.5) == 0.5);
  CHECK(smooth_l1_grad_magnitude_form(-2.0) == 1.0);
}

TEST_CASE("losses and exact gradients are continuous at the transition") {
  const double eps = 1e-6;
  for (double omega : {0.25, 0.5}) {
    // Branch values agree to 1e-12 exactly at |x| = 1.
    CHECK(std::abs(dp_loss(1.0, omega) - omega * std::numbers::ln2) < 1e-12);
    CHECK(std::abs(dp_grad(1.0, omega) - omega) < 1e-12);
    CHECK(std::abs(dp_grad(-1.0, omega) + omega) < 1e-12);
    for (double s : {1.0, -1.0}) {
      CHECK(std::abs(dp_loss(s * (1 - eps), omega) - dp_loss(s * (1 + eps), omega)) <= 10 * eps);
      CHECK(std::abs(dp_grad(s * (1 - eps), omega) - dp_grad(s * (1 + eps), omega)) <= 10 * eps);
    }
  }
  for (double s : {1.0, -1.0}) {
    CHECK(std::abs(smooth_l1(s * (1 - eps)) - smooth_l1(s * (1 + eps))) <= 10 * eps);
    CHECK(std::abs(smooth_l1_grad(s * (1 - eps)) - smooth_l1_grad(s * (1 + eps))) <= 10 * eps);
  }
}

TEST_CASE("dense-point loss and gradient never exceed smooth-L1") {
  for (double omega : {0.25, 0.5}) {
    for (int i = -20000; i <= 20000; ++i) {
      const double x = i * 1e-3;
      if (!(dp_loss(x, omega) <= smooth_l1(x)) ||
          !(std::abs(dp_grad(x, omega)) <= std::abs(smooth_l1_grad(x)))) {
        CAPTURE(x, omega);
        REQUIRE(dp_loss(x, omega) <= smooth_l1(x));
        REQUIRE(std::abs(dp_grad(x, omega)) <= std::abs(smooth_l1_grad(x)));
      }
    }
  }
  SUCCEED("dominance holds on the full grid");
}

TEST_CASE("losses are even, gradients odd, and loss grows with |x|") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> sample(0.0, 15.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = sample(rng);
    for (double omega : {0.25, 0.5}) {
      CHECK(dp_loss(x, omega) == dp_loss(-x, omega));
      CHECK(dp_grad(-x, omega) == -dp_grad(x, omega));
    }
    CHECK(smooth_l1(x) == smooth_l1(-x));
    CHECK(smooth_l1_grad(-x) == -smooth_l1_grad(x));
    const double y = x + sample(rng) / 100.0 + 1e-9;
    CHECK(smooth_l1(y) >= smooth_l1(x));
    CHECK(dp_loss(y, 0.25) >= dp_loss(x, 0.25));
  }
}

TEST_CASE("analytic gradients match finite differences") {
  for (double omega : {0.25, 0.5}) {
    cli::GradcheckOptions opt;
    opt.kind = LossKind::dense_point(omega);
    const auto report = cli::run_gradcheck(opt);
    CAPTURE(omega, report.worst_rel_err, report.worst_x);
    CHECK(report.passed);
    CHECK(report.n_checked == 10000);
  }
  cli::GradcheckOptions opt;
  opt.kind = LossKind::smooth_l1();
  CHECK(cli::run_gradcheck(opt).passed);
}

TEST_CASE("magnitude-form gradcheck fails as expected") {
  cli::GradcheckOptions opt;
  opt.kind = LossKind::dense_point(0.25);
  opt.magnitude_form = true;
  const auto report = cli::run_gradcheck(opt);
  CHECK_FALSE(report.passed);
  CHECK(report.worst_rel_err > 0.1);
}

TEST_CASE("batch_loss reduces values and scales gradients consistently") {
  const LossKind dp05 = LossKind::dense_point(0.5);
  const LossKind sl1 = LossKind::smooth_l1();

  SECTION("zero residuals") {
    const std::vector<Residual> zeros{Residual(0.0), Residual(0.0), Residual(0.0)};
    const auto r = batch_loss(zeros, dp05, Reduction::kMean);
    CHECK(r.value == 0.0);
    CHECK(r.grads == std::vector<double>{0.0, 0.0, 0.0});
  }
  SECTION("sum reduction at the kink") {
    const std::vector<Residual> xs{Residual(1.0), Residual(-1.0)};
    const auto r = batch_loss(xs, sl1, Reduction::kSum);
    CHECK(r.value == 1.0);
    CHECK(r.grads == std::vector<double>{1.0, -1.0});
  }
  SECTION("mean reduction mixes branches") {
    const std::vector<Residual> xs{Residual(0.5), Residual(3.0)};
    const auto r = batch_loss(xs, LossKind::dense_point(0.25), Reduction::kMean);
    CHECK(r.value == Catch::Approx(0.36453634148426938).epsilon(1e-14));
    CHECK(r.grads.size() == 2);
    CHECK(r.grads[0] == Catch::Approx(0.5 * dp_grad(0.5, 0.25)).epsilon(1e-14));
    CHECK(r.grads[1] == Catch::Approx(0.5 * 0.25).epsilon(1e-14));
  }
  SECTION("empty input is an error, not zero") {
    CHECK_THROWS_AS(batch_loss({}, dp05, Reduction::kMean), std::invalid_argument);
  }
}

TEST_CASE("LossKind dispatches to the right kernels") {
  const LossKind dp = LossKind::dense_point(0.25);
  const LossKind sl = LossKind::smooth_l1();
  CHECK(dp.is_dense_point());
  CHECK(dp.omega() == 0.25);
  CHECK_FALSE(sl.is_dense_point());
  CHECK_THROWS_AS(sl.omega(), std::logic_error);
  CHECK(dp.loss(2.0) == dp_loss(2.0, 0.25));
  CHECK(dp.grad(2.0) == dp_grad(2.0, 0.25));
  CHECK(sl.loss(2.0) == smooth_l1(2.0));
  CHECK(sl.grad(0.5) == smooth_l1_grad(0.5));
  CHECK(dp.name() == "dense_point");
  CHECK(sl.name() == "smooth_l1");
}

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "uvloss/task_weighting.hpp"

using namespace uvloss;

namespace {

std::vector<LossTerm> table1_terms(double value) {
  std::vector<LossTerm> terms;
  for (const TermSpec& spec : default_term_specs()) {
    terms.push_back({spec.name, value, spec.group, spec.weight});
  }
  return terms;
}

std::vector<LossTerm> random_terms(std::mt19937_64& rng, int n_det, int n_dp) {
  std::uniform_real_distribution<double> value(0.01, 5.0);
  std::uniform_real_distribution<double> weight(0.05, 2.0);
  std::vector<LossTerm> terms;
  for (int i = 0; i < n_det; ++i) {
    terms.push_back({"det" + std::to_string(i), value(rng), LossGroup::kDetection, weight(rng)});
  }
  for (int i = 0; i < n_dp; ++i) {
    terms.push_back({"dp" + std::to_string(i), value(rng), LossGroup::kDensePose, weight(rng)});
  }
  return terms;
}

}  // namespace

TEST_CASE("bws_weights on hand-checked inputs") {
  SECTION("equal losses split evenly") {
    for (double c : {0.0, 1.0, 17.5, 1e6}) {
      const auto w = bws_weights(std::vector<double>{c, c, c});
      for (double wi : w) CHECK(wi == Catch::Approx(1.0 / 3).margin(1e-15));
    }
  }
  SECTION("softmin of {0, ln 3}") {
    const auto w = bws_weights(std::vector<double>{0.0, std::log(3.0)});
    CHECK(w[0] == Catch::Approx(0.75).margin(1e-15));
    CHECK(w[1] == Catch::Approx(0.25).margin(1e-15));
  }
  SECTION("the larger loss receives the smaller weight") {
    const auto w = bws_weights(std::vector<double>{5.0, 1.0});
    CHECK(w[0] < w[1]);
  }
  SECTION("errors") {
    CHECK_THROWS_AS(bws_weights({}), std::invalid_argument);
    CHECK_THROWS_AS(bws_weights(std::vector<double>{1.0, std::nan("")}), std::invalid_argument);
  }
}

TEST_CASE("bws_weights properties over random vectors") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(2, 8);
  std::uniform_real_distribution<double> value(0.0, 10.0);
  std::uniform_real_distribution<double> shift(-3.0, 3.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len(rng);
    std::vector<double> values(n);
    for (double& v : values) v = value(rng);
    const auto w = bws_weights(values);

    double sum = 0.0;
    for (double wi : w) {
      CHECK(wi > 0.0);
      CHECK(wi < 1.0);
      sum += wi;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);

    // Shift invariance.
    const double c = shift(rng);
    std::vector<double> shifted = values;
    for (double& v : shifted) v += c;
    const auto w2 = bws_weights(shifted);
    for (int i = 0; i < n; ++i) CHECK(std::abs(w[i] - w2[i]) < 1e-12);

    // Permutation equivariance: reverse-and-weigh equals weigh-and-reverse.
    std::vector<double> reversed(values.rbegin(), values.rend());
    const auto wr = bws_weights(reversed);
    for (int i = 0; i < n; ++i) CHECK(wr[i] == Catch::Approx(w[n - 1 - i]).margin(1e-15));

    // Strictly decreasing in the loss value.
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (values[i] < values[j]) CHECK(w[i] > w[j]);
      }
    }
  }
}

TEST_CASE("combine_static reproduces the reference table sums") {
  SECTION("unit losses, k = 1") {
    const auto total = combine_static(table1_terms(1.0), 1.0);
    CHECK(total.group_subtotals.at(LossGroup::kDetection) == 4.0);
    CHECK(total.group_subtotals.at(LossGroup::kDensePose) == 2.5);
    CHECK(total.total == 6.5);
    CHECK(total.empty_groups.empty());
    CHECK(total.per_term_weights.at("rpn_cls") == 1.0);
    CHECK(total.per_term_weights.at("u") == 0.1);
  }
  SECTION("unit losses, k = 2") {
    const auto total = combine_static(table1_terms(1.0), 2.0);
    CHECK(total.total == 9.0);
    CHECK(total.per_term_weights.at("u") == 0.2);
  }
  SECTION("a single zero-valued detection term") {
    const std::vector<LossTerm> terms{{"det", 0.0, LossGroup::kDetection, 1.0}};
    const auto total = combine_static(terms, 1.0);
    CHECK(total.total == 0.0);
    CHECK(total.empty_groups == std::vector<LossGroup>{LossGroup::kDensePose});
  }
  SECTION("errors") {
    CHECK_THROWS_AS(combine_static({}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(combine_static(table1_terms(1.0), 0.0), std::invalid_argument);
    std::vector<LossTerm> bad{{"x", 1.0, static_cast<LossGroup>(42), 1.0}};
    CHECK_THROWS_AS(combine_static(bad, 1.0), std::invalid_argument);
    std::vector<LossTerm> negative{{"x", -1.0, LossGroup::kDetection, 1.0}};
    CHECK_THROWS_AS(combine_static(negative, 1.0), std::invalid_argument);
  }
}

TEST_CASE("combine_static is linear in each term value") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> k_dist(0.5, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto terms = random_terms(rng, 2, 3);
    const double k = k_dist(rng);
    const auto total = combine_static(terms, k);
    double reconstructed = 0.0;
    for (const LossTerm& t : terms) {
      reconstructed += total.per_term_weights.at(t.name) * t.value;
    }
    CHECK(total.total == Catch::Approx(reconstructed).margin(1e-12));
    CHECK(total.total ==
          Catch::Approx(total.group_subtotals.at(LossGroup::kDetection) +
                        k * total.group_subtotals.at(LossGroup::kDensePose))
              .margin(1e-12));

    // Doubling one value moves the total by exactly its weighted value.
    auto bumped = terms;
    bumped[0].value *= 2.0;
    const auto total2 = combine_static(bumped, k);
    CHECK(total2.total - total.total ==
          Catch::Approx(total.per_term_weights.at(terms[0].name) * terms[0].value).margin(1e-10));
  }
}

TEST_CASE("combine_bws on hand-checked inputs") {
  BwsConfig cfg;
  cfg.apply_static_first = false;

  SECTION("equal values in both groups") {
    const std::vector<LossTerm> terms{{"d0", 1.0, LossGroup::kDetection, 1.0},
                                      {"d1", 1.0, LossGroup::kDetection, 1.0},
                                      {"p0", 1.0, LossGroup::kDensePose, 1.0},
                                      {"p1", 1.0, LossGroup::kDensePose, 1.0}};
    const auto total = combine_bws(terms, cfg);
    CHECK(total.group_subtotals.at(LossGroup::kDetection) == Catch::Approx(1.0).margin(1e-15));
    CHECK(total.group_subtotals.at(LossGroup::kDensePose) == Catch::Approx(1.0).margin(1e-15));
    CHECK(total.total == Catch::Approx(2.0).margin(1e-14));
    CHECK(total.empty_groups.empty());
  }
  SECTION("detection-only softmin of {0, ln 3}") {
    const std::vector<LossTerm> terms{{"d0", 0.0, LossGroup::kDetection, 1.0},
                                      {"d1", std::log(3.0), LossGroup::kDetection, 1.0}};
    const auto total = combine_bws(terms, cfg);
    CHECK(total.group_subtotals.at(LossGroup::kDetection) ==
          Catch::Approx(0.27465307216702744).margin(1e-14));
    CHECK(total.empty_groups == std::vector<LossGroup>{LossGroup::kDensePose});
  }
  SECTION("dense-pose only with k = 2") {
    BwsConfig k2 = cfg;
    k2.k = 2.0;
    const std::vector<LossTerm> terms{{"p0", 1.0, LossGroup::kDensePose, 1.0},
                                      {"p1", 1.0, LossGroup::kDensePose, 1.0},
                                      {"p2", 1.0, LossGroup::kDensePose, 1.0},
                                      {"p3", 1.0, LossGroup::kDensePose, 1.0}};
    const auto total = combine_bws(terms, k2);
    CHECK(total.total == Catch::Approx(2.0).margin(1e-14));
    CHECK(total.empty_groups == std::vector<LossGroup>{LossGroup::kDetection});
    CHECK(total.per_term_weights.at("p0") == Catch::Approx(0.5).margin(1e-15));
  }
  SECTION("equal group losses reduce to the unweighted mean") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> value(0.0, 4.0);
    for (int trial = 0; trial < 100; ++trial) {
      const double c = value(rng);
      std::vector<LossTerm> terms;
      const int n = 2 + trial % 4;
      for (int i = 0; i < n; ++i) {
        terms.push_back({"p" + std::to_string(i), c, LossGroup::kDensePose, 1.0});
      }
      const auto total = combine_bws(terms, cfg);
      CHECK(total.group_subtotals.at(LossGroup::kDensePose) == Catch::Approx(c).margin(1e-12));
    }
  }
}

TEST_CASE("combine_bws applies static weights before the softmin when asked") {
  const std::vector<LossTerm> terms{{"a", 2.0, LossGroup::kDensePose, 0.5},
                                    {"b", 3.0, LossGroup::kDensePose, 1.0}};
  BwsConfig cfg;
  cfg.apply_static_first = true;
  const auto total = combine_bws(terms, cfg);
  // Scaled values are {1, 3}; softmin gives {e^-1, e^-3}/Z.
  const double z = std::exp(-1.0) + std::exp(-3.0);
  const double w_a = std::exp(-1.0) / z;
  const double w_b = std::exp(-3.0) / z;
  CHECK(total.group_subtotals.at(LossGroup::kDensePose) ==
        Catch::Approx(w_a * 1.0 + w_b * 3.0).margin(1e-14));
  // per-term weight multiplies the raw value: w * static_weight * k.
  CHECK(total.per_term_weights.at("a") == Catch::Approx(w_a * 0.5).margin(1e-14));
  CHECK(total.total ==
        Catch::Approx(total.per_term_weights.at("a") * 2.0 + total.per_term_weights.at("b") * 3.0)
            .margin(1e-14));
}

TEST_CASE("WeightedTotal matches the group composition identity") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> k_dist(0.5, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto terms = random_terms(rng, 1 + trial % 3, 1 + (trial / 3) % 4);
    BwsConfig cfg;
    cfg.k = k_dist(rng);
    cfg.apply_static_first = trial % 2 == 0;
    const auto total = combine_bws(terms, cfg);
    CHECK(total.total ==
          Catch::Approx(total.group_subtotals.at(LossGroup::kDetection) +
                        cfg.k * total.group_subtotals.at(LossGroup::kDensePose))
              .margin(1e-12));
    double reconstructed = 0.0;
    for (const LossTerm& t : terms) reconstructed += total.per_term_weights.at(t.name) * t.value;
    CHECK(total.total == Catch::Approx(reconstructed).margin(1e-12));
  }
}

TEST_CASE("bws_backprop_scale in detached mode returns the effective weights") {
  BwsConfig cfg;  // detached by default
  SECTION("equal losses give 1/n per group member") {
    const std::vector<LossTerm> terms{{"p0", 2.0, LossGroup::kDensePose, 1.0},
                                      {"p1", 2.0, LossGroup::kDensePose, 1.0},
                                      {"p2", 2.0, LossGroup::kDensePose, 1.0}};
    BwsConfig raw = cfg;
    raw.apply_static_first = false;
    const auto mult = bws_backprop_scale(terms, raw);
    for (const auto& [name, m] : mult) CHECK(m == Catch::Approx(1.0 / 3).margin(1e-15));
  }
  SECTION("two detection losses {0, ln 3}") {
    const std::vector<LossTerm> terms{{"d0", 0.0, LossGroup::kDetection, 1.0},
                                      {"d1", std::log(3.0), LossGroup::kDetection, 1.0}};
    const auto mult = bws_backprop_scale(terms, cfg);
    CHECK(mult.at("d0") == Catch::Approx(0.75).margin(1e-14));
    CHECK(mult.at("d1") == Catch::Approx(0.25).margin(1e-14));
  }
  SECTION("matches combine_bws effective weights on random terms") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
      auto terms = random_terms(rng, 2, 3);
      BwsConfig c;
      c.k = 1.7;
      c.apply_static_first = trial % 2 == 0;
      const auto mult = bws_backprop_scale(terms, c);
      const auto total = combine_bws(terms, c);
      for (const LossTerm& t : terms) {
        CHECK(mult.at(t.name) == Catch::Approx(total.per_term_weights.at(t.name)).margin(1e-14));
      }
    }
  }
}

TEST_CASE("bws_backprop_scale differentiates through the weights when not detached") {
  std::mt19937_64 rng(17);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto terms = random_terms(rng, 1 + trial % 3, 2 + trial % 3);
    BwsConfig cfg;
    cfg.detach_weights = false;
    cfg.k = 1.0 + (trial % 5) * 0.5;
    cfg.apply_static_first = trial % 2 == 0;
    const auto mult = bws_backprop_scale(terms, cfg);
    for (size_t j = 0; j < terms.size(); ++j) {
      const double analytic = mult.at(terms[j].name);
      const double fd = oracle::fd_central(
          [&](double v) {
            auto perturbed = terms;
            perturbed[j].value = v;
            return combine_bws(perturbed, cfg).total;
          },
          terms[j].value, 1e-5);
      worst = std::max(worst, oracle::rel_err(analytic, fd));
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("term specs parse helpers") {
  const auto specs = default_term_specs();
  REQUIRE(specs.size() == 8);
  CHECK(find_term_spec(specs, "ann") != nullptr);
  CHECK(find_term_spec(specs, "ann")->weight == 2.0);
  CHECK(find_term_spec(specs, "nope") == nullptr);
  CHECK(loss_group_from_string("detection") == LossGroup::kDetection);
  CHECK(loss_group_from_string("dense_pose") == LossGroup::kDensePose);
  CHECK_THROWS_AS(loss_group_from_string("bogus"), std::invalid_argument);
}

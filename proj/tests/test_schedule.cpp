#include "doctest.h"

#include <cmath>

#include "noisegen/rng.hpp"
#include "noisegen/schedule.hpp"

using namespace ng;

TEST_SUITE_BEGIN("schedule");

TEST_CASE("linear schedule hits both endpoints") {
    const DiffusionSchedule s = make_beta_schedule("linear", 1000, 1e-4, 0.02);
    CHECK(s.beta[1] == doctest::Approx(1e-4));
    CHECK(s.beta[1000] == doctest::Approx(0.02));
    CHECK(s.alpha_bar[0] == 1.0);
}

TEST_CASE("alpha_bar at T=1000 matches an independent product") {
    const DiffusionSchedule s = make_beta_schedule("linear", 1000, 1e-4, 0.02);
    double prod = 1.0;
    for (int t = 1; t <= 1000; ++t) {
        prod *= 1.0 - (1e-4 + (0.02 - 1e-4) * (t - 1) / 999.0);
    }
    CHECK(s.alpha_bar[1000] == doctest::Approx(prod).epsilon(1e-12));
    CHECK(s.alpha_bar[1000] < 1e-4);
    CHECK(s.alpha_bar[1000] == doctest::Approx(4.0e-5).epsilon(0.05));
}

TEST_CASE("single-step schedule") {
    const DiffusionSchedule s = make_beta_schedule("linear", 1, 0.01, 0.02);
    CHECK(s.beta[1] == doctest::Approx(0.01));
    CHECK(s.alpha_bar[1] == doctest::Approx(0.99));
}

TEST_CASE("schedule invariants") {
    const DiffusionSchedule s = make_beta_schedule("linear", 200, 1e-4, 0.02);
    CHECK(s.posterior_var[1] == 0.0);
    for (int t = 1; t <= 200; ++t) {
        CHECK(s.beta[t] > 0.0);
        CHECK(s.beta[t] < 1.0);
        if (t > 1) CHECK(s.beta[t] >= s.beta[t - 1]);
        CHECK(s.alpha_bar[t] < s.alpha_bar[t - 1]);
        // exact recurrence as computed
        CHECK(s.alpha_bar[t] == s.alpha_bar[t - 1] * (1.0 - s.beta[t]));
    }
}

TEST_CASE("invalid bounds are rejected") {
    CHECK_THROWS_AS(make_beta_schedule("linear", 10, 0.0, 0.02), ValidationError);
    CHECK_THROWS_AS(make_beta_schedule("linear", 10, 0.02, 0.01), ValidationError);
    CHECK_THROWS_AS(make_beta_schedule("linear", 10, 0.1, 1.0), ValidationError);
    CHECK_THROWS_AS(make_beta_schedule("linear", 0, 1e-4, 0.02), ValidationError);
    CHECK_THROWS_AS(make_beta_schedule("cosine", 10, 1e-4, 0.02), ValidationError);
}

TEST_CASE("q_sample degenerate cases") {
    const DiffusionSchedule s = make_beta_schedule("linear", 100, 1e-4, 0.02);
    Rng rng(3);
    TensorF x0 = rng.normal_tensor<float>(Shape{1, 1, 4, 4});
    TensorF zero = TensorF::zeros(x0.shape);
    const int t = 40;
    const float sa = static_cast<float>(std::sqrt(s.alpha_bar[t]));
    const float sb = static_cast<float>(std::sqrt(1.0 - s.alpha_bar[t]));

    TensorF no_noise = q_sample(x0, t, zero, s);
    for (std::size_t i = 0; i < x0.data.size(); ++i) {
        CHECK(no_noise.data[i] == doctest::Approx(sa * x0.data[i]));
    }
    TensorF eps = rng.normal_tensor<float>(x0.shape);
    TensorF no_signal = q_sample(zero, t, eps, s);
    for (std::size_t i = 0; i < x0.data.size(); ++i) {
        CHECK(no_signal.data[i] == doctest::Approx(sb * eps.data[i]));
    }
    CHECK_THROWS_AS(q_sample(x0, 0, zero, s), ValidationError);
    CHECK_THROWS_AS(q_sample(x0, 101, zero, s), ValidationError);
}

TEST_CASE("q_sample variance matches 1 - alpha_bar by Monte Carlo") {
    const DiffusionSchedule s = make_beta_schedule("linear", 200, 1e-4, 0.02);
    Rng rng(7);
    TensorF x0 = TensorF::zeros(Shape{1, 1, 100, 100});
    TensorF eps(x0.shape);
    rng.fill_normal<float>(eps.data);
    TensorF xt = q_sample(x0, 200, eps, s);
    double sum = 0.0, sq = 0.0;
    for (float v : xt.data) {
        sum += v;
        sq += static_cast<double>(v) * v;
    }
    const double n = static_cast<double>(xt.data.size());
    const double var = sq / n - (sum / n) * (sum / n);
    CHECK(var == doctest::Approx(1.0 - s.alpha_bar[200]).epsilon(0.05));
}

TEST_CASE("q_sample is linear in (x0, eps)") {
    const DiffusionSchedule s = make_beta_schedule("linear", 50, 1e-4, 0.02);
    Rng rng(9);
    TensorF x0 = rng.normal_tensor<float>(Shape{1, 2, 4, 4});
    TensorF eps = rng.normal_tensor<float>(x0.shape);
    const float a = 2.5f;
    TensorF sx = x0, se = eps;
    for (float& v : sx.data) v *= a;
    for (float& v : se.data) v *= a;
    TensorF lhs = q_sample(sx, 17, se, s);
    TensorF rhs = q_sample(x0, 17, eps, s);
    for (std::size_t i = 0; i < lhs.data.size(); ++i) {
        CHECK(lhs.data[i] == doctest::Approx(a * rhs.data[i]).epsilon(1e-5));
    }
}

TEST_SUITE_END();

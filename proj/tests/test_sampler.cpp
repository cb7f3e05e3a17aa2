#include "doctest.h"

#include <cmath>
#include <numeric>

#include "noisegen/sampler.hpp"

using namespace ng;

TEST_SUITE_BEGIN("sampler");

TEST_CASE("decay schedule reproduces the published 10-step sequence") {
    const SamplerPlan plan = dips_schedule(1000, 10, 5.0);
    const std::vector<int> expected = {1000, 572, 327, 186, 106, 59, 33, 18, 9, 4, 0};
    CHECK(plan.steps == expected);
    CHECK(plan.t_last == 4);
}

TEST_CASE("decay schedule S=2") {
    const SamplerPlan plan = dips_schedule(1000, 2, 5.0);
    CHECK(plan.steps == std::vector<int>{1000, 14, 0});
    CHECK(plan.t_last == 14);  // floor(10 / ln 2)
}

TEST_CASE("decay schedule from a truncation start, each term recomputed") {
    const SamplerPlan plan = dips_schedule(200, 5, 5.0);
    CHECK(plan.steps == std::vector<int>{200, 60, 20, 9, 6, 0});
    // independent term-by-term recomputation
    const double tl = 10.0 / std::log(5.0);
    std::vector<int> expected;
    for (int i = 5; i >= 1; --i) {
        const double ratio = (std::exp(5.0 * (i - 1) / 4.0) - 1.0) / (std::exp(5.0) - 1.0);
        expected.push_back(static_cast<int>(std::floor(tl + (200.0 - tl) * ratio)));
    }
    expected.push_back(0);
    CHECK(plan.steps == expected);
}

TEST_CASE("decay schedule bounds, monotonicity and density in r") {
    for (double r : {0.5, 2.0, 5.0, 9.0}) {
        const SamplerPlan plan = dips_schedule(1000, 10, r);
        CHECK(plan.steps.front() == 1000);
        CHECK(plan.steps.back() == 0);
        CHECK(plan.steps[plan.steps.size() - 2] == plan.t_last);
        for (std::size_t i = 1; i < plan.steps.size(); ++i) {
            CHECK(plan.steps[i] < plan.steps[i - 1]);
            CHECK(plan.steps[i] >= 0);
            CHECK(plan.steps[i] <= 1000);
        }
    }
    // larger r concentrates steps near t_last
    int prev = -1;
    for (double r : {1.0, 3.0, 5.0, 8.0}) {
        const SamplerPlan plan = dips_schedule(1000, 10, r);
        int below = 0;
        for (int t : plan.steps) {
            if (t > 0 && t < 100) ++below;
        }
        CHECK(below >= prev);
        prev = below;
    }
}

TEST_CASE("decay schedule rejects bad arguments") {
    CHECK_THROWS_AS(dips_schedule(1000, 1, 5.0), ValidationError);
    CHECK_THROWS_AS(dips_schedule(14, 2, 5.0), ValidationError);  // t_last = 14.43
    CHECK_THROWS_AS(dips_schedule(1000, 10, 0.0), ValidationError);
    CHECK_THROWS_AS(dips_advanced_plan(200, 200, 5, 5.0), ValidationError);
}

TEST_CASE("uniform schedule") {
    const SamplerPlan p10 = uniform_schedule(1000, 10);
    CHECK(p10.steps == std::vector<int>{1000, 900, 800, 700, 600, 500, 400, 300, 200, 100, 0});
    const SamplerPlan p1 = uniform_schedule(1000, 1);
    CHECK(p1.steps == std::vector<int>{1000, 0});
    const SamplerPlan odd = uniform_schedule(997, 7);
    for (std::size_t i = 2; i + 1 < odd.steps.size(); ++i) {
        const int d1 = odd.steps[i - 2] - odd.steps[i - 1];
        const int d2 = odd.steps[i - 1] - odd.steps[i];
        CHECK(std::abs(d1 - d2) <= 1);
    }
    CHECK_THROWS_AS(uniform_schedule(10, 11), ValidationError);
}

TEST_CASE("predict_x0 inverts q_sample") {
    const DiffusionSchedule sched = make_beta_schedule("linear", 200, 1e-4, 0.02);
    Rng rng(3);
    const TensorF x0 = rng.normal_tensor<float>(Shape{1, 3, 8, 8}, 0.25, 0.5);
    const TensorF eps = rng.normal_tensor<float>(x0.shape);
    const int t = 137;
    const TensorF x_t = q_sample(x0, t, eps, sched);

    // eps_hat = 0 -> x_t / sqrt(ab)
    const TensorF zero_eps = TensorF::zeros(x0.shape);
    const TensorF scaled = predict_x0(x_t, t, zero_eps, sched);
    const double inv = 1.0 / std::sqrt(sched.alpha_bar[t]);
    for (std::size_t i = 0; i < scaled.data.size(); ++i) {
        CHECK(scaled.data[i] == doctest::Approx(x_t.data[i] * inv).epsilon(1e-5));
    }

    const TensorF recovered = predict_x0(x_t, t, eps, sched);
    for (std::size_t i = 0; i < x0.data.size(); ++i) {
        CHECK(recovered.data[i] == doctest::Approx(x0.data[i]).epsilon(1e-4));
    }
    // round trip residual
    const TensorF again = q_sample(recovered, t, eps, sched);
    double max_res = 0.0;
    for (std::size_t i = 0; i < again.data.size(); ++i) {
        max_res = std::max(max_res, std::abs(static_cast<double>(again.data[i]) - x_t.data[i]));
    }
    CHECK(max_res < 1e-4);
    CHECK_THROWS_AS(predict_x0(x_t, 0, eps, sched), ValidationError);
}

TEST_CASE("deterministic jump terminal and identity cases") {
    const DiffusionSchedule sched = make_beta_schedule("linear", 100, 1e-4, 0.02);
    Rng rng(4);
    const TensorF x = rng.normal_tensor<float>(Shape{1, 2, 4, 4});
    const TensorF eps = rng.normal_tensor<float>(x.shape);
    const TensorF at_zero = deterministic_jump(x, 60, 0, eps, sched);
    const TensorF x0 = predict_x0(x, 60, eps, sched);
    CHECK(at_zero.data == x0.data);
    const TensorF same = deterministic_jump(x, 60, 60, eps, sched);
    CHECK(same.data == x.data);
    CHECK_THROWS_AS(deterministic_jump(x, 60, 61, eps, sched), ValidationError);
}

TEST_CASE("jumps with the true eps compose transitively") {
    const DiffusionSchedule sched = make_beta_schedule("linear", 200, 1e-4, 0.02);
    Rng rng(5);
    const TensorF x0 = rng.normal_tensor<float>(Shape{1, 3, 8, 8}, 0.2, 0.5);
    const TensorF eps = rng.normal_tensor<float>(x0.shape);
    const TensorF x_T = q_sample(x0, 200, eps, sched);
    const TensorF direct = deterministic_jump(x_T, 200, 0, eps, sched);
    TensorF chained = deterministic_jump(x_T, 200, 80, eps, sched);
    chained = deterministic_jump(chained, 80, 0, eps, sched);
    for (std::size_t i = 0; i < direct.data.size(); ++i) {
        CHECK(chained.data[i] == doctest::Approx(direct.data[i]).epsilon(1e-4));
    }
}

TEST_CASE("ancestral step adds no noise at t=1 and is seed-reproducible") {
    const DiffusionSchedule sched = make_beta_schedule("linear", 100, 1e-4, 0.02);
    Rng rng(6);
    const TensorF x = rng.normal_tensor<float>(Shape{1, 2, 4, 4});
    const TensorF eps = rng.normal_tensor<float>(x.shape);
    Rng ra(1), rb(999);
    const TensorF a = ancestral_step(x, 1, eps, sched, ra);
    const TensorF b = ancestral_step(x, 1, eps, sched, rb);
    CHECK(a.data == b.data);  // rng unused at t=1

    Rng r1(42), r2(42);
    const TensorF c = ancestral_step(x, 50, eps, sched, r1);
    const TensorF d = ancestral_step(x, 50, eps, sched, r2);
    CHECK(c.data == d.data);
}

TEST_CASE("ancestral mean equals the posterior-mean identity") {
    const DiffusionSchedule sched = make_beta_schedule("linear", 100, 1e-4, 0.02);
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const int t = rng.uniform_int(2, 100);
        const TensorF x = rng.normal_tensor<float>(Shape{1, 1, 3, 3});
        const TensorF eps = rng.normal_tensor<float>(x.shape);
        const double ab_t = sched.alpha_bar[t];
        const double ab_prev = sched.alpha_bar[t - 1];
        const double beta = sched.beta[t];
        const double alpha = sched.alpha[t];
        const TensorF x0_hat = predict_x0(x, t, eps, sched);
        const double k = beta / std::sqrt(1.0 - ab_t);
        const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            const double mean_impl = inv_sqrt_alpha * (x.data[i] - k * eps.data[i]);
            const double mean_ident =
                std::sqrt(ab_prev) * beta / (1.0 - ab_t) * x0_hat.data[i] +
                std::sqrt(alpha) * (1.0 - ab_prev) / (1.0 - ab_t) * x.data[i];
            CHECK(mean_impl == doctest::Approx(mean_ident).epsilon(1e-4));
        }
    }
}

namespace {

// Records the step of every model call; returns a fixed multiple of x.
struct CountingModel {
    std::vector<int> steps_seen;
    Predictor fn() {
        return [this](const TensorF& x, int t, const TensorF&, const CameraSettings&) {
            steps_seen.push_back(t);
            TensorF out(x.shape);
            for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = 0.5f * x.data[i];
            return out;
        };
    }
};

}  // namespace

TEST_CASE("sample touches each plan step exactly once") {
    const DiffusionSchedule sched = make_beta_schedule("linear", 1000, 1e-4, 0.02);
    const TensorF s = TensorF::full(Shape{1, 3, 8, 8}, 0.5f);
    const CameraSettings cs;

    CountingModel eps_counter;
    CountingModel psi_counter;
    const Predictor eps_fn = eps_counter.fn();
    const Predictor psi_fn = psi_counter.fn();

    const SamplerPlan plan = dips_advanced_plan(1000, 200, 5, 5.0);
    Rng rng(1);
    sample(eps_fn, plan, s, cs, sched, rng, &psi_fn);
    CHECK(psi_counter.steps_seen.size() == 1);
    CHECK(eps_counter.steps_seen.size() == 5);
    CHECK(eps_counter.steps_seen ==
          std::vector<int>(plan.steps.begin(), plan.steps.end() - 1));

    CountingModel anc;
    const Predictor anc_fn = anc.fn();
    Rng rng2(2);
    sample(anc_fn, ancestral_plan(50), s, cs, make_beta_schedule("linear", 50, 1e-4, 0.02),
           rng2);
    CHECK(anc.steps_seen.size() == 50);

    CHECK_THROWS_AS(sample(eps_fn, plan, s, cs, sched, rng, nullptr), ValidationError);
}

TEST_CASE("sampling is deterministic given the seed") {
    const DiffusionSchedule sched = make_beta_schedule("linear", 100, 1e-4, 0.02);
    const TensorF s = TensorF::full(Shape{1, 3, 8, 8}, 0.4f);
    const CameraSettings cs;
    CountingModel m1, m2;
    const Predictor f1 = m1.fn(), f2 = m2.fn();
    Rng r1(77), r2(77);
    const TensorF a = sample(f1, dips_schedule(100, 5, 5.0), s, cs, sched, r1);
    const TensorF b = sample(f2, dips_schedule(100, 5, 5.0), s, cs, sched, r2);
    CHECK(a.data == b.data);
    for (float v : a.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("distillation starts at the teacher and never touches it") {
    ModelConfig cfg;
    cfg.base_channels = 8;
    const ParamSetF teacher = init_params(cfg, 90);
    const DiffusionSchedule sched = make_beta_schedule("linear", 100, 1e-4, 0.02);

    TensorF clean = TensorF::full(Shape{2, 3, 8, 8}, 0.5f);
    TensorF x0 = clean;
    for (std::size_t i = 0; i < x0.data.size(); ++i) {
        x0.data[i] += 0.01f * static_cast<float>(i % 7) / 7.0f;
    }
    BatchProvider provider = [&](Rng&) {
        TrainBatch b;
        b.x0 = x0;
        b.clean = clean;
        b.settings = {CameraSettings{}, CameraSettings{}};
        return b;
    };

    Rng rng(5);
    const DistillResult zero = distill_one_step(cfg, teacher, sched, 30, provider, rng, 0);
    REQUIRE(zero.psi.size() == teacher.size());
    for (std::size_t i = 0; i < teacher.items.size(); ++i) {
        CHECK(zero.psi.items[i].second.data == teacher.items[i].second.data);
    }

    // teacher outputs identical before and after a short distillation
    Rng tr(11);
    const TensorF probe = tr.normal_tensor<float>(Shape{1, 3, 8, 8});
    const TensorF probe_clean = TensorF::full(Shape{1, 3, 8, 8}, 0.5f);
    const TensorF before = eps_theta(probe, 30, probe_clean, CameraSettings{}, teacher, cfg);
    Rng rng2(6);
    const DistillResult r = distill_one_step(cfg, teacher, sched, 30, provider, rng2, 5);
    const TensorF after = eps_theta(probe, 30, probe_clean, CameraSettings{}, teacher, cfg);
    CHECK(before.data == after.data);
    CHECK(r.losses.size() == 5);
    CHECK_THROWS_AS(distill_one_step(cfg, teacher, sched, 100, provider, rng2, 1),
                    ValidationError);
}

TEST_CASE("distillation loss halves on a tiny fixed dataset") {
    ModelConfig cfg;
    cfg.base_channels = 8;
    const ParamSetF teacher = init_params(cfg, 91);
    const DiffusionSchedule sched = make_beta_schedule("linear", 100, 1e-4, 0.02);

    Rng data_rng(17);
    TensorF clean(Shape{4, 3, 8, 8});
    data_rng.fill_uniform<float>(clean.data, 0.2, 0.8);
    TensorF x0 = clean;
    for (float& v : x0.data) {
        v = std::clamp(v + static_cast<float>(data_rng.normal() * 0.03), 0.0f, 1.0f);
    }
    BatchProvider provider = [&](Rng&) {
        TrainBatch b;
        b.x0 = x0;
        b.clean = clean;
        b.settings = std::vector<CameraSettings>(4);
        return b;
    };
    AdamConfig adam;
    adam.lr = 3e-4;
    Rng rng(21);
    const DistillResult r = distill_one_step(cfg, teacher, sched, 30, provider, rng, 500, adam);
    const double first = r.losses.front();
    const double last10 = std::accumulate(r.losses.end() - 10, r.losses.end(), 0.0f) / 10.0;
    INFO("first=" << first << " last10=" << last10);
    CHECK(last10 < 0.5 * first);
}

TEST_CASE("trajectory probe at step 0 equals the final-sample score") {
    const DiffusionSchedule sched = make_beta_schedule("linear", 30, 1e-4, 0.02);
    Rng rng(8);
    EvalItem item;
    item.clean = TensorF::full(Shape{1, 3, 8, 8}, 0.5f);
    item.real_noisy = item.clean;
    for (float& v : item.real_noisy.data) {
        v = std::clamp(v + static_cast<float>(rng.normal() * 0.05), 0.0f, 1.0f);
    }
    item.settings = CameraSettings{};

    CountingModel m;
    const Predictor fn = m.fn();
    const std::vector<int> probes = {15, 0};
    const AkldConfig cfg;
    const auto traj = akld_trajectory(fn, sched, std::span<const EvalItem>(&item, 1), probes,
                                      cfg, 123);
    REQUIRE(traj.size() == 2);
    CHECK(traj[0].first == 15);
    CHECK(traj[1].first == 0);

    // replicate the chain: same derived seed, ancestral plan, same model
    CountingModel m2;
    const Predictor fn2 = m2.fn();
    Rng chain(mix_seed(123, 0));
    const TensorF final_sample = sample(fn2, ancestral_plan(30), item.clean, item.settings,
                                        sched, chain);
    AkldConfig one = cfg;
    one.samples_per_image = 1;
    const double direct = akld(item.clean, item.real_noisy,
                               [&](int) { return final_sample; }, one);
    CHECK(traj[1].second == doctest::Approx(direct).epsilon(1e-9));
}

TEST_SUITE_END();

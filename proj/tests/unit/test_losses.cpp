#include <doctest.h>

#include <cmath>
#include <random>

#include "distillflow/errors.hpp"
#include "distillflow/losses.hpp"
#include "../support/oracles.hpp"

using namespace distillflow;

namespace {

constexpr int H = 16, W = 24;

void check_gradients(const std::function<LossReport(const FlowField&, const FlowField&)>& loss,
                     const FlowField& wf, const FlowField& wb) {
    const oracle::GradientCheck g = oracle::check_gradient(loss, wf, wb);
    CHECK(g.checked > 0);
    CHECK(g.failures == 0);
    CHECK(g.worst <= 1e-3);
}

double flow_sum_abs(const FlowField& f) {
    double s = 0;
    for (double v : f.data()) s += std::abs(v);
    return s;
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("robust penalty") {
    const LossConfig cfg;
    CHECK(robust_penalty(0.0, cfg).value == doctest::Approx(0.15848931924611134));
    CHECK(robust_penalty(0.0, cfg).derivative == 0.0);
    CHECK(robust_penalty(1.0, cfg).value == doctest::Approx(1.0039879));
    for (double x : {0.1, 0.7, 3.0}) {
        CHECK(robust_penalty(x, cfg).value == robust_penalty(-x, cfg).value);
        CHECK(robust_penalty(x, cfg).derivative == doctest::Approx(0.4 * std::pow(x + 0.01, -0.6)));
        CHECK(robust_penalty(-x, cfg).derivative == -robust_penalty(x, cfg).derivative);
    }
}

TEST_CASE("config validation") {
    LossConfig cfg;
    cfg.q_exponent = 1.5;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = LossConfig{};
    cfg.epsilon = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    CHECK(parse_photometric_kind("ssim") == PhotometricKind::ssim);
    CHECK_THROWS(parse_photometric_kind("l2"));
}

TEST_CASE("photometric loss on identical frames is twice psi(0)") {
    std::mt19937_64 rng(1);
    const Image img = oracle::random_image(8, 10, 3, rng);
    for (PhotometricKind k : {PhotometricKind::brightness, PhotometricKind::ssim, PhotometricKind::census}) {
        LossConfig cfg;
        cfg.photometric_kind = k;
        const LossReport r = photometric_loss(img, img, FlowField(8, 10), FlowField(8, 10), MaskMap(8, 10),
                                              MaskMap(8, 10), cfg);
        CHECK(r.value == doctest::Approx(2 * oracle::psi(0.0)));
    }
}

TEST_CASE("photometric loss with the true shift beats zero flow") {
    std::mt19937_64 rng(2);
    const Image i1 = oracle::random_image(10, 16, 3, rng);
    Image i2(10, 16, 3);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 16; ++x)
            for (int c = 0; c < 3; ++c) i2(y, x, c) = x >= 2 ? i1(y, x - 2, c) : 0.5;
    const FlowField wf = FlowField::constant(10, 16, 2, 0), wb = FlowField::constant(10, 16, -2, 0);
    const OcclusionPair o = occlusion_maps(wf, wb);
    LossConfig cfg;
    const double truth = photometric_loss(i1, i2, wf, wb, o.forward, o.backward, cfg).value;
    const double zero = photometric_loss(i1, i2, FlowField(10, 16), FlowField(10, 16), o.forward, o.backward, cfg).value;
    CHECK(truth < zero);
}

TEST_CASE("photometric loss rejects an all-occluded direction") {
    const Image img(4, 4, 1, 0.5);
    CHECK_THROWS_AS(photometric_loss(img, img, FlowField(4, 4), FlowField(4, 4), MaskMap(4, 4, 1.0), MaskMap(4, 4),
                                     LossConfig{}),
                    DegenerateMask);
}

TEST_CASE("census photometric loss is invariant to a global intensity offset") {
    std::mt19937_64 rng(3);
    Image i1 = oracle::random_image(8, 9, 3, rng, 0.1, 0.7);
    Image i2 = oracle::random_image(8, 9, 3, rng, 0.1, 0.7);
    const FlowField wf = oracle::random_flow(8, 9, rng, 2.0), wb = oracle::random_flow(8, 9, rng, 2.0);
    const MaskMap of = oracle::random_mask(8, 9, rng, 0.2), ob = oracle::random_mask(8, 9, rng, 0.2);
    const double a = photometric_loss(i1, i2, wf, wb, of, ob, LossConfig{}).value;
    for (double& v : i1.data()) v += 0.2;
    for (double& v : i2.data()) v += 0.2;
    CHECK(photometric_loss(i1, i2, wf, wb, of, ob, LossConfig{}).value == doctest::Approx(a).epsilon(1e-9));
}

TEST_CASE("smoothness closed forms") {
    std::mt19937_64 rng(4);
    const Image img = oracle::random_image(6, 8, 3, rng);
    const LossConfig cfg;
    const LossReport flat = smoothness_loss(img, img, FlowField::constant(6, 8, 1, 2), FlowField::constant(6, 8, -3, 0), cfg);
    CHECK(flat.value == 0.0);

    const Image constant(6, 8, 1, 0.5);
    FlowField ramp(6, 8);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 8; ++x) ramp.u(y, x) = x;
    const LossReport r = smoothness_loss(constant, constant, ramp, FlowField(6, 8), cfg);
    CHECK(r.value == doctest::Approx(7.0 / 8.0));
}

TEST_CASE("a larger beta discounts flow edges aligned with image edges") {
    Image step(6, 8, 1, 0.0);
    FlowField f(6, 8);
    for (int y = 0; y < 6; ++y) {
        for (int x = 4; x < 8; ++x) {
            step(y, x) = 1.0;
            f.u(y, x) = 3.0;
        }
    }
    LossConfig a, b;
    b.beta = 2 * a.beta;
    CHECK(smoothness_loss(step, step, f, f, b).value < smoothness_loss(step, step, f, f, a).value);
}

TEST_CASE("distillation losses direct evaluations") {
    const LossConfig cfg;
    FlowField teacher(3, 3), student(3, 3);
    teacher.u(1, 1) = 3.0;
    MaskMap one(3, 3);
    one(1, 1) = 1.0;
    const LossReport occ = occlusion_distill_loss(teacher, teacher, student, teacher, one, MaskMap(3, 3), cfg);
    CHECK(occ.value == doctest::Approx(oracle::psi(3) + oracle::psi(0)));
    CHECK(occlusion_distill_loss(teacher, teacher, student, student, MaskMap(3, 3), MaskMap(3, 3), cfg).value == 0.0);

    FlowField t11 = FlowField::constant(3, 3, 1, 1);
    const LossReport dis = confidence_distill_loss(t11, t11, FlowField(3, 3), FlowField(3, 3), one, one, cfg);
    CHECK(dis.value == doctest::Approx(4 * oracle::psi(1)));
    CHECK_THROWS_AS(confidence_distill_loss(t11, t11, t11, t11, MaskMap(3, 3), one, cfg), DegenerateMask);

    const LossReport same = confidence_distill_loss(t11, t11, t11, t11, MaskMap(3, 3, 1.0), MaskMap(3, 3, 1.0), cfg);
    CHECK(same.value == doctest::Approx(4 * oracle::psi(0)));
    CHECK(flow_sum_abs(same.grad_wf) == 0.0);
    CHECK(flow_sum_abs(same.grad_wb) == 0.0);
}

TEST_CASE("confidence distillation is a normalized mean") {
    std::mt19937_64 rng(5);
    const FlowField t = oracle::random_flow(6, 6, rng, 2), s = oracle::random_flow(6, 6, rng, 2);
    // Same per-pixel error everywhere: any mask gives the same value.
    FlowField s2 = t;
    for (double& v : s2.data()) v += 0.7;
    const double full = confidence_distill_loss(t, t, s2, s2, MaskMap(6, 6, 1.0), MaskMap(6, 6, 1.0), LossConfig{}).value;
    MaskMap half(6, 6);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 6; ++x) half(y, x) = 1.0;
    CHECK(confidence_distill_loss(t, t, s2, s2, half, half, LossConfig{}).value == doctest::Approx(full));
}

TEST_CASE("supervised loss") {
    const LossConfig cfg;
    FlowField gt(4, 4), w(4, 4);
    gt.u(0, 0) = 1.0;
    gt.v(2, 3) = 1.0;
    MaskMap v(4, 4);
    v(0, 0) = v(2, 3) = 1.0;
    const LossReport r = supervised_loss(w, gt, v, cfg);
    CHECK(r.value == doctest::Approx((2 * oracle::psi(1) + 2 * oracle::psi(0)) / 2));
    CHECK(flow_sum_abs(r.grad_wb) == 0.0);
    CHECK_THROWS_AS(supervised_loss(w, gt, MaskMap(4, 4), cfg), DegenerateMask);
    const LossReport m = supervised_loss(gt, gt, MaskMap(4, 4, 1.0), cfg);
    CHECK(m.value == doctest::Approx(2 * oracle::psi(0)));
    CHECK(flow_sum_abs(m.grad_wf) == 0.0);
}

TEST_CASE("masked means are invariant to tiling the instance") {
    std::mt19937_64 rng(6);
    const FlowField t = oracle::random_flow(4, 5, rng, 2), s = oracle::random_flow(4, 5, rng, 2);
    const MaskMap m = oracle::random_mask(4, 5, rng, 0.5);
    auto tile = [](const auto& a) {
        std::decay_t<decltype(a)> out(a.height(), 2 * a.width());
        for (int y = 0; y < a.height(); ++y)
            for (int x = 0; x < 2 * a.width(); ++x)
                for (int c = 0; c < a.as_image().channels(); ++c) out(y, x, c) = a(y, x % a.width(), c);
        return out;
    };
    const LossConfig cfg;
    const double one = confidence_distill_loss(t, t, s, s, m, m, cfg).value;
    const double two = confidence_distill_loss(tile(t), tile(t), tile(s), tile(s), tile(m), tile(m), cfg).value;
    CHECK(one == doctest::Approx(two));
}

TEST_CASE("stage composition") {
    std::mt19937_64 rng(7);
    const oracle::GradientPair p = oracle::gradient_pair(8, 10, rng);
    const FlowField wf = oracle::gradient_flow(8, 10, rng), wb = oracle::gradient_flow(8, 10, rng);
    const MaskMap of = oracle::random_mask(8, 10, rng, 0.2), ob = oracle::random_mask(8, 10, rng, 0.2);
    const FlowField tf = oracle::random_flow(8, 10, rng, 2), tb = oracle::random_flow(8, 10, rng, 2);
    const MaskMap mf = oracle::random_mask(8, 10, rng, 0.7), mb = oracle::random_mask(8, 10, rng, 0.7);

    StageInputs in;
    in.i1 = &p.i1;
    in.i2 = &p.i2;
    in.w_f = &wf;
    in.w_b = &wb;
    in.occ_f = &of;
    in.occ_b = &ob;

    LossConfig cfg;
    cfg.smooth_weight = 0.0;
    CHECK(compose_stage_loss(Stage::stage1, in, cfg).value ==
          doctest::Approx(photometric_loss(p.i1, p.i2, wf, wb, of, ob, cfg).value));

    cfg = LossConfig{};
    const double smooth = smoothness_loss(p.i1, p.i2, wf, wb, cfg).value;
    const double stage1 = compose_stage_loss(Stage::stage1, in, cfg).value;
    CHECK(stage1 == doctest::Approx(photometric_loss(p.i1, p.i2, wf, wb, of, ob, cfg).value + 0.1 * smooth));

    const MaskMap none(8, 10);
    in.teacher_f = &tf;
    in.teacher_b = &tb;
    in.hallucinated_f = &none;
    in.hallucinated_b = &none;
    CHECK(compose_stage_loss(Stage::stage2_v1, in, cfg).value == doctest::Approx(stage1));

    in.confidence_f = &mf;
    in.confidence_b = &mb;
    CHECK(compose_stage_loss(Stage::stage2_v2, in, cfg).value ==
          doctest::Approx(confidence_distill_loss(tf, tb, wf, wb, mf, mb, cfg).value + 0.1 * smooth));

    StageInputs missing;
    missing.i1 = &p.i1;
    missing.i2 = &p.i2;
    missing.w_f = &wf;
    missing.w_b = &wb;
    CHECK_THROWS_AS(compose_stage_loss(Stage::stage2_v2, missing, cfg), InvalidArgument);
}

TEST_CASE("losses are finite and nonnegative on random inputs") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 10; ++i) {
        const Image a = oracle::random_image(7, 8, 3, rng), b = oracle::random_image(7, 8, 3, rng);
        const FlowField wf = oracle::random_flow(7, 8, rng, 5), wb = oracle::random_flow(7, 8, rng, 5);
        const OcclusionPair o{oracle::random_mask(7, 8, rng, 0.3), oracle::random_mask(7, 8, rng, 0.3)};
        for (PhotometricKind k : {PhotometricKind::brightness, PhotometricKind::ssim, PhotometricKind::census}) {
            LossConfig cfg;
            cfg.photometric_kind = k;
            const LossReport r = photometric_loss(a, b, wf, wb, o.forward, o.backward, cfg);
            CHECK(std::isfinite(r.value));
            CHECK(r.value >= 0);
            CHECK(r.grad_wf.all_finite());
            CHECK(r.grad_wb.all_finite());
        }
    }
}

TEST_CASE("analytic gradients match central differences") {
    std::mt19937_64 rng(9);
    for (PhotometricKind k : {PhotometricKind::brightness, PhotometricKind::ssim, PhotometricKind::census}) {
        LossConfig cfg;
        cfg.photometric_kind = k;
        const oracle::GradientPair p = oracle::gradient_pair(H, W, rng);
        const MaskMap of = oracle::random_mask(H, W, rng, 0.2), ob = oracle::random_mask(H, W, rng, 0.2);
        const PhotometricTerm term(p.i1, p.i2, cfg);
        check_gradients([&](const FlowField& a, const FlowField& b) { return term.evaluate(a, b, of, ob); },
                        oracle::gradient_flow(H, W, rng), oracle::gradient_flow(H, W, rng));
    }
    const oracle::GradientPair p = oracle::gradient_pair(H, W, rng);
    const LossConfig cfg;
    check_gradients([&](const FlowField& a, const FlowField& b) { return smoothness_loss(p.i1, p.i2, a, b, cfg); },
                    oracle::gradient_flow(H, W, rng), oracle::gradient_flow(H, W, rng));

    const FlowField tf = oracle::random_flow(H, W, rng, 3), tb = oracle::random_flow(H, W, rng, 3);
    const MaskMap mf = oracle::random_mask(H, W, rng, 0.5), mb = oracle::random_mask(H, W, rng, 0.5);
    const FlowField sf = oracle::offset_flow(tf, rng, 2), sb = oracle::offset_flow(tb, rng, 2);
    check_gradients([&](const FlowField& a, const FlowField& b) { return occlusion_distill_loss(tf, tb, a, b, mf, mb, cfg); },
                    sf, sb);
    check_gradients([&](const FlowField& a, const FlowField& b) { return confidence_distill_loss(tf, tb, a, b, mf, mb, cfg); },
                    sf, sb);
    check_gradients([&](const FlowField& a, const FlowField&) { return supervised_loss(a, tf, mf, cfg); }, sf, sb);
}

}

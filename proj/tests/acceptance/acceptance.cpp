// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "distillflow/engine.hpp"
#include "distillflow/errors.hpp"
#include "distillflow/eval.hpp"
#include "distillflow/flow_io.hpp"
#include "distillflow/synth.hpp"
#include "support/oracles.hpp"

using namespace distillflow;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------

Outcome gradient_correctness() {
    constexpr int H = 16, W = 24, instances = 20;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1);
    int checked = 0, failures = 0;
    double worst = 0.0;
    std::string per_loss;
    auto tally = [&](const char* name, const std::function<oracle::GradientCheck()>& one) {
        int c = 0, f = 0;
        double w = 0.0;
        for (int i = 0; i < instances; ++i) {
            const oracle::GradientCheck g = one();
            c += g.checked;
            f += g.failures;
            w = std::max(w, g.worst);
            if (g.checked == 0) ++f;  // an instance with nothing to check does not count
        }
        checked += c;
        failures += f;
        worst = std::max(worst, w);
        per_loss += fmt(" %s=%.1e", name, w);
    };

    for (PhotometricKind k : {PhotometricKind::brightness, PhotometricKind::ssim, PhotometricKind::census}) {
        LossConfig cfg;
        cfg.photometric_kind = k;
        tally(std::string(to_string(k)).c_str(), [&] {
            const oracle::GradientPair p = oracle::gradient_pair(H, W, rng);
            const MaskMap of = oracle::random_mask(H, W, rng, 0.2), ob = oracle::random_mask(H, W, rng, 0.2);
            const PhotometricTerm term(p.i1, p.i2, cfg);
            return oracle::check_gradient([&](const FlowField& a, const FlowField& b) { return term.evaluate(a, b, of, ob); },
                                          oracle::gradient_flow(H, W, rng), oracle::gradient_flow(H, W, rng));
        });
    }
    const LossConfig cfg;
    tally("smooth", [&] {
        const oracle::GradientPair p = oracle::gradient_pair(H, W, rng);
        return oracle::check_gradient(
            [&](const FlowField& a, const FlowField& b) { return smoothness_loss(p.i1, p.i2, a, b, cfg); },
            oracle::gradient_flow(H, W, rng), oracle::gradient_flow(H, W, rng));
    });
    auto distill_instance = [&](auto&& loss) {
        const FlowField tf = oracle::random_flow(H, W, rng, 3), tb = oracle::random_flow(H, W, rng, 3);
        MaskMap mf = oracle::random_mask(H, W, rng, 0.5), mb = oracle::random_mask(H, W, rng, 0.5);
        mf(0, 0) = mb(0, 0) = 1.0;
        const FlowField sf = oracle::offset_flow(tf, rng, 2), sb = oracle::offset_flow(tb, rng, 2);
        return oracle::check_gradient([&](const FlowField& a, const FlowField& b) { return loss(tf, tb, a, b, mf, mb); },
                                      sf, sb);
    };
    tally("occ", [&] {
        return distill_instance([&](auto&... x) { return occlusion_distill_loss(x..., cfg); });
    });
    tally("dis", [&] {
        return distill_instance([&](auto&... x) { return confidence_distill_loss(x..., cfg); });
    });
    tally("sup", [&] {
        const FlowField gt = oracle::random_flow(H, W, rng, 3);
        MaskMap v = oracle::random_mask(H, W, rng, 0.5);
        v(0, 0) = 1.0;
        return oracle::check_gradient([&](const FlowField& a, const FlowField&) { return supervised_loss(a, gt, v, cfg); },
                                      oracle::offset_flow(gt, rng, 2), oracle::random_flow(H, W, rng, 3));
    });
    const double t = seconds_since(t0);
    return {failures == 0 && worst <= 1e-3 && t < 120.0,
            fmt("7 losses x %d instances, %d components checked, %d failures, worst rel err", instances, checked,
                failures) +
                per_loss + fmt(", %.1f s", t)};
}

Outcome consistency_oracle() {
    TranslationSceneOptions opt;
    int exact = 0;
    double min_f = 1.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Scene sc = make_scene(random_translation_spec(opt, 10 + s));
        const MaskMap all(sc.i1.height(), sc.i1.width(), 1.0);
        const MaskMap of = occlusion_from_consistency(sc.flow_f, sc.flow_b);
        const MaskMap ob = occlusion_from_consistency(sc.flow_b, sc.flow_f);
        const double f = std::min(occlusion_f_measure(of, sc.occ_f, all), occlusion_f_measure(ob, sc.occ_b, all));
        min_f = std::min(min_f, f);
        if (of == sc.occ_f && ob == sc.occ_b) ++exact;
    }
    return {exact == 10 && min_f == 1.0, fmt("%d/10 scenes exact in both directions, min F-measure %.4f", exact, min_f)};
}

Outcome truth_table() {
    // Every binary pattern of a 2x2 map for both inputs: 256 combinations.
    int wrong = 0, cases = 0;
    for (int a = 0; a < 16; ++a) {
        for (int b = 0; b < 16; ++b) {
            MaskMap s(2, 2), t(2, 2);
            for (int i = 0; i < 4; ++i) {
                s.data()[i] = (a >> i) & 1;
                t.data()[i] = (b >> i) & 1;
            }
            const MaskMap o = hallucinated_occlusion(s, t);
            for (int i = 0; i < 4; ++i) {
                const double expect = (s.data()[i] == 1.0 && t.data()[i] == 0.0) ? 1.0 : 0.0;
                wrong += o.data()[i] != expect;
                ++cases;
            }
        }
    }
    return {wrong == 0, fmt("%d pixel cases, %d wrong", cases, wrong)};
}

Outcome stage1_convergence() {
    TranslationSceneOptions opt;
    opt.height = 96;
    opt.width = 128;
    opt.max_motion = 4;
    PipelineConfig cfg;
    cfg.optimizer.iterations_per_level = 500;
    cfg.pyramid.levels = 3;
    bool pass = true;
    std::string detail;
    for (std::uint64_t s = 0; s < 3; ++s) {
        const Scene sc = make_scene(random_translation_spec(opt, 100 + s));
        const MaskMap noc = RegionSplit::from_occlusion(sc.occ_f).noc;
        const auto t0 = Clock::now();
        const TeacherRun run = train_teacher(sc.i1, sc.i2, cfg, 1);
        const double t = seconds_since(t0);
        const double e = epe(run.prediction.w_f, sc.flow_f, noc);
        pass = pass && e < 0.5 && t < 60.0;
        detail += fmt("%sscene %d: EPE-noc %.3f px in %.1f s", detail.empty() ? "" : "; ", static_cast<int>(s), e, t);
    }
    return {pass, detail};
}

// Shared by criteria 5 and 6: teacher ensembles on 3 scenes, then 5 crop+noise
// bundles per scene with v1, v2 and a stage-1 baseline on the transformed pair.
struct DistillRun {
    int scene = 0, seed = 0;
    double hallucinated_pixels = 0;
    double v2_h = 0, base_h = 0;
    double v1_all = 0, v2_all = 0;
};

const std::vector<DistillRun>& distill_runs() {
    static const std::vector<DistillRun> runs = [] {
        std::vector<DistillRun> out;
        PipelineConfig cfg;
        TransformPolicy policy = TransformPolicy::crop_only();
        policy.p_noise = 1.0;
        TranslationSceneOptions opt;
        for (int s = 0; s < 3; ++s) {
            const Scene sc = make_scene(random_translation_spec(opt, 200 + s));
            std::vector<TeacherPrediction> members;
            for (TeacherRun& r : train_teachers(sc.i1, sc.i2, cfg, {11, 12})) {
                for (TeacherPrediction& c : r.checkpoints) members.push_back(std::move(c));
            }
            const TeacherPrediction teacher = ensemble(members);
            for (int seed = 0; seed < 5; ++seed) {
                TransformBundle bundle = sample_transform(policy, {opt.height, opt.width}, 1000 + seed);
                const StudentResult v2 =
                    train_student(sc.i1, sc.i2, teacher, bundle, StudentVariant::v2_confidence_view, cfg, seed);
                const StudentResult v1 =
                    train_student(sc.i1, sc.i2, teacher, bundle, StudentVariant::v1_occlusion_view, cfg, seed);
                const OptimizeResult base = optimize_flow(v2.pair.i1, v2.pair.i2, Stage::stage1, {}, cfg.pyramid,
                                                          cfg.optimizer, cfg.loss, seed);
                const StudentFrameTruth truth =
                    student_frame_truth(sc.flow_f, sc.flow_b, sc.occ_f, bundle, v2.pair.noise_mask);
                DistillRun r;
                r.scene = s;
                r.seed = seed;
                r.hallucinated_pixels = truth.hallucinated.sum();
                r.v2_h = epe(v2.w_f, truth.flow, truth.hallucinated);
                r.base_h = epe(base.w_f, truth.flow, truth.hallucinated);
                r.v1_all = epe(v1.w_f, truth.flow, truth.valid);
                r.v2_all = epe(v2.w_f, truth.flow, truth.valid);
                out.push_back(r);
            }
        }
        return out;
    }();
    return runs;
}

Outcome distillation_gain() {
    const auto t0 = Clock::now();
    const std::vector<DistillRun>& runs = distill_runs();
    std::vector<double> gains;
    double min_gain = 1.0;
    for (const DistillRun& r : runs) {
        const double g = 1.0 - r.v2_h / r.base_h;
        gains.push_back(g);
        min_gain = std::min(min_gain, g);
    }
    const int above = static_cast<int>(std::count_if(gains.begin(), gains.end(), [](double g) { return g >= 0.2; }));
    const double m = mean(gains);
    return {m >= 0.2,
            fmt("%zu pairs (3 scenes x 5 seeds): mean relative gain on hallucinated pixels %.1f%%, min %.1f%%, "
                "%d/%zu pairs >= 20%%, %.0f s",
                runs.size(), 100 * m, 100 * min_gain, above, runs.size(), seconds_since(t0))};
}

Outcome variant_agreement() {
    const std::vector<DistillRun>& runs = distill_runs();
    int within = 0;
    double worst = 0.0;
    for (const DistillRun& r : runs) {
        const double rel = std::abs(r.v1_all - r.v2_all) / std::min(r.v1_all, r.v2_all);
        within += rel <= 0.15;
        worst = std::max(worst, rel);
    }
    std::string per_seed;
    for (int seed = 0; seed < 5; ++seed) {
        std::vector<double> e1, e2;
        for (const DistillRun& r : runs) {
            if (r.seed != seed) continue;
            e1.push_back(r.v1_all);
            e2.push_back(r.v2_all);
        }
        per_seed += fmt(" [%d: v1 %.3f v2 %.3f]", seed, mean(e1), mean(e2));
    }
    return {within == static_cast<int>(runs.size()),
            fmt("all-pixel EPE within 15%% on %d/%zu identical-input pairs, worst gap %.1f%%; scene means per seed:",
                within, runs.size(), 100 * worst) +
                per_seed};
}

Outcome model_distillation() {
    PipelineConfig cfg;
    TranslationSceneOptions opt;
    int jensen = 0, f_ok = 0, strict = 0;
    std::string detail;
    for (int s = 0; s < 10; ++s) {
        const Scene sc = make_scene(random_translation_spec(opt, 300 + s));
        const MaskMap all(opt.height, opt.width, 1.0);
        std::vector<TeacherPrediction> members;
        for (TeacherRun& r : train_teachers(sc.i1, sc.i2, cfg, {21, 22})) {
            for (TeacherPrediction& c : r.checkpoints) members.push_back(std::move(c));
        }
        std::vector<double> e, f;
        for (const TeacherPrediction& m : members) {
            e.push_back(epe(m.w_f, sc.flow_f, all));
            f.push_back(occlusion_f_measure(m.occ_f, sc.occ_f, all));
        }
        const TeacherPrediction ens = ensemble(members);
        const double ee = epe(ens.w_f, sc.flow_f, all), fe = occlusion_f_measure(ens.occ_f, sc.occ_f, all);
        jensen += ee <= mean(e);
        strict += ee < mean(e);
        f_ok += fe >= median(f);
        detail += fmt(" [%d: EPE %.3f/%.3f F %.3f/%.3f]", s, ee, mean(e), fe, median(f));
    }
    return {jensen == 10 && f_ok >= 8,
            fmt("10 members per scene; ensemble EPE <= member mean on %d/10 (strict %d/10), "
                "F >= member median on %d/10; ensemble/member:",
                jensen, strict, f_ok) +
                detail};
}

Outcome photometric_ordering() {
    TranslationSceneOptions opt;
    int ordered = 0;
    std::string detail;
    for (int s = 0; s < 5; ++s) {
        Scene sc = make_scene(random_translation_spec(opt, 400 + s));
        for (double& v : sc.i2.data()) v = std::min(1.0, v + 0.2);
        const MaskMap all(opt.height, opt.width, 1.0);
        double e[3];
        int i = 0;
        for (PhotometricKind k : {PhotometricKind::census, PhotometricKind::ssim, PhotometricKind::brightness}) {
            PipelineConfig cfg;
            cfg.loss.photometric_kind = k;
            e[i++] = epe(train_teacher(sc.i1, sc.i2, cfg, 5).prediction.w_f, sc.flow_f, all);
        }
        ordered += e[0] <= e[1] && e[1] <= e[2];
        detail += fmt(" [%d: census %.3f ssim %.3f brightness %.3f]", s, e[0], e[1], e[2]);
    }
    return {ordered >= 4, fmt("ordering holds on %d/5 scenes;", ordered) + detail};
}

Outcome metrics_brute_force() {
    std::mt19937_64 rng(9);
    int mismatches = 0;
    for (int i = 0; i < 100; ++i) {
        std::uniform_int_distribution<int> dim(1, 40);
        const int h = dim(rng), w = dim(rng);
        const FlowField g = oracle::random_flow(h, w, rng, 60), f = oracle::random_flow(h, w, rng, 60);
        MaskMap m = oracle::random_mask(h, w, rng, 0.7);
        m(0, 0) = 1.0;
        const MaskMap p = oracle::random_mask(h, w, rng, 0.4), o = oracle::random_mask(h, w, rng, 0.4);
        const ScalarMap dg = flow_to_disparity(g).values, df = flow_to_disparity(f).values;
        mismatches += epe(f, g, m) != oracle::epe(f, g, m);
        mismatches += fl_rate(f, g, m) != oracle::fl(f, g, m);
        mismatches += occlusion_f_measure(p, o, m) != oracle::f_measure(p, o, m);
        mismatches += d1_rate(df, dg, m) != oracle::d1(df, dg, m);
    }
    // .flo stores 32-bit floats: fields of float-representable values round trip bit-exactly.
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / "distillflow_acceptance_flo";
    std::filesystem::create_directories(dir);
    int flo_bad = 0;
    for (int i = 0; i < 100; ++i) {
        std::uniform_int_distribution<int> dim(1, 64);
        FlowField f(dim(rng), dim(rng));
        std::uniform_real_distribution<float> v(-500.0f, 500.0f);
        for (double& x : f.data()) x = v(rng);
        const std::filesystem::path path = dir / ("f" + std::to_string(i) + ".flo");
        write_flo(path, f);
        flo_bad += !(read_flo(path) == f);
    }
    std::filesystem::remove_all(dir);
    return {mismatches == 0 && flo_bad == 0,
            fmt("400 metric comparisons, %d mismatches; 100 .flo round trips, %d not bit-exact", mismatches, flo_bad)};
}

Outcome semi_schedule() {
    const SemiSchedule s = build_semi_schedule(10, 100);
    const std::vector<Presentation> epoch = epoch_presentations(s);
    std::vector<int> lab(10, 0), self(100, 0);
    for (const Presentation& p : epoch) (p.labeled ? lab.at(p.index) : self.at(p.index))++;
    // Labeled presentations per labeled pair against presentations per self-annotated pair.
    const auto [lmin, lmax] = std::minmax_element(lab.begin(), lab.end());
    const auto [smin, smax] = std::minmax_element(self.begin(), self.end());
    const int labeled_total = std::accumulate(lab.begin(), lab.end(), 0);
    const int self_total = std::accumulate(self.begin(), self.end(), 0);
    return {s.repeat_factor == 10 && *lmax - *lmin == 0 && *smax - *smin == 0 &&
                std::abs(labeled_total - self_total) <= 1,
            fmt("repeat_factor %d; labeled presentations %d (per pair %d..%d), self-annotated %d (per pair %d..%d)",
                s.repeat_factor, labeled_total, *lmin, *lmax, self_total, *smin, *smax)};
}

Outcome disparity_smoke() {
    TranslationSceneOptions opt;
    opt.horizontal_only = true;
    PipelineConfig cfg;
    bool pass = true;
    std::string detail;
    for (int s = 0; s < 3; ++s) {
        const Scene sc = make_scene(random_translation_spec(opt, 500 + s));
        const TeacherRun run = train_teacher(sc.i1, sc.i2, cfg, 5);
        const ScalarMap d = flow_to_disparity(run.prediction.w_f).values, g = flow_to_disparity(sc.flow_f).values;
        const RegionSplit r = RegionSplit::from_occlusion(sc.occ_f);
        const double all = d1_rate(d, g, r.all), noc = d1_rate(d, g, r.noc);
        pass = pass && all < 0.10;
        detail += fmt("%sscene %d D1-all %.2f%% D1-noc %.2f%%", detail.empty() ? "" : "; ", s, 100 * all, 100 * noc);
    }
    return {pass, detail};
}

struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {1, "gradient correctness", gradient_correctness},
        {2, "consistency check reproduces analytic occlusion", consistency_oracle},
        {3, "hallucinated occlusion truth table", truth_table},
        {4, "stage-1 convergence", stage1_convergence},
        {5, "distillation gain on hallucinated occlusions", distillation_gain},
        {6, "variant agreement", variant_agreement},
        {7, "model distillation", model_distillation},
        {8, "photometric ordering under a brightness offset", photometric_ordering},
        {9, "metrics and .flo against brute force", metrics_brute_force},
        {10, "semi-supervised schedule", semi_schedule},
        {11, "disparity from flow", disparity_smoke},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const Criterion& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}

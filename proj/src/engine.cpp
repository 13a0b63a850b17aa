#include "distillflow/engine.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>
#include <thread>

#include "distillflow/errors.hpp"
#include "distillflow/eval.hpp"

namespace distillflow {

void OptimizerConfig::validate() const {
    if (!(step_size > 0.0)) throw InvalidArgument("optimizer: step_size must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw InvalidArgument("optimizer: beta1 and beta2 must be in [0,1)");
    }
    if (!(eps_adam > 0.0)) throw InvalidArgument("optimizer: eps_adam must be > 0");
    if (iterations_per_level < 1) throw InvalidArgument("optimizer: iterations_per_level must be >= 1");
    if (occlusion_refresh_interval < 1) throw InvalidArgument("optimizer: occlusion_refresh_interval must be >= 1");
    if (pretrain_iterations < -1) throw InvalidArgument("optimizer: pretrain_iterations must be >= 0 (or -1 for auto)");
    if (!(init_noise >= 0.0)) throw InvalidArgument("optimizer: init_noise must be >= 0");
    if (checkpoints < 1) throw InvalidArgument("optimizer: checkpoints must be >= 1");
    for (const auto& [fraction, factor] : schedule) {
        if (!(fraction >= 0.0 && fraction <= 1.0) || !(factor > 0.0)) {
            throw InvalidArgument("optimizer: schedule entries need fraction in [0,1] and factor > 0");
        }
    }
}

int OptimizerConfig::effective_pretrain() const {
    return pretrain_iterations >= 0 ? pretrain_iterations : iterations_per_level / 10;
}

double OptimizerConfig::step_at(int iteration) const {
    double step = step_size;
    for (const auto& [fraction, factor] : schedule) {
        if (iteration >= fraction * iterations_per_level) step *= factor;
    }
    return step;
}

void PyramidSpec::validate() const {
    if (levels < 1) throw InvalidArgument("pyramid: levels must be >= 1");
    if (!(scale_factor > 0.0 && scale_factor <= 1.0)) throw InvalidArgument("pyramid: scale_factor must be in (0,1]");
    if (min_size < 2) throw InvalidArgument("pyramid: min_size must be >= 2");
}

std::vector<Extent> PyramidSpec::extents(int height, int width) const {
    validate();
    std::vector<Extent> out;
    for (int l = levels - 1; l >= 0; --l) {
        const double s = std::pow(scale_factor, l);
        Extent e{static_cast<int>(std::lround(height * s)), static_cast<int>(std::lround(width * s))};
        if (l == 0) e = {height, width};
        if (e.height < min_size || e.width < min_size) {
            throw InvalidArgument("pyramid: level " + std::to_string(l) + " is smaller than min_size");
        }
        out.push_back(e);
    }
    return out;
}

namespace {

FlowField at_extent(const FlowField& f, Extent e) {
    return (f.height() == e.height && f.width() == e.width) ? f : resize_flow(f, e.height, e.width);
}

MaskMap at_extent(const MaskMap& m, Extent e) {
    return (m.height() == e.height && m.width() == e.width) ? m : resize_mask(m, e.height, e.width);
}

// Optional level copy of an aux input.
template <typename T>
struct LevelInput {
    T value;
    const T* ptr = nullptr;
    void set(const T* full, Extent e) {
        if (!full) return;
        value = at_extent(*full, e);
        ptr = &value;
    }
};

bool uses_occlusion(Stage s) { return s == Stage::stage1 || s == Stage::stage2_v1; }

struct Adam {
    std::vector<double> m, v;
    int t = 0;
    explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    void step(std::span<double> params, std::span<const double> grad, std::size_t offset, double lr,
              const OptimizerConfig& opt, double bias1, double bias2) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = grad[i];
            double& mi = m[offset + i];
            double& vi = v[offset + i];
            mi = opt.beta1 * mi + (1.0 - opt.beta1) * g;
            vi = opt.beta2 * vi + (1.0 - opt.beta2) * g * g;
            params[i] -= lr * (mi / bias1) / (std::sqrt(vi / bias2) + opt.eps_adam);
        }
    }
};

}  // namespace

OptimizeResult optimize_flow(const Image& i1, const Image& i2, Stage stage, const StageAux& aux,
                             const PyramidSpec& pyramid, const OptimizerConfig& opt, const LossConfig& loss,
                             std::uint64_t seed) {
    if (!i1.same_shape(i2)) throw ShapeError("optimize_flow: images differ in shape");
    opt.validate();
    loss.validate();
    const int H = i1.height(), W = i1.width();
    const std::vector<Extent> levels = pyramid.extents(H, W);
    const int pretrain = opt.effective_pretrain();
    const int N = opt.iterations_per_level;
    const int R = opt.occlusion_refresh_interval;

    OptimizeResult result;
    std::mt19937_64 rng(seed);
    FlowField w_f, w_b;
    int global_iteration = 0;

    for (std::size_t li = 0; li < levels.size(); ++li) {
        const Extent e = levels[li];
        const int level_index = static_cast<int>(levels.size() - 1 - li);
        const bool finest = level_index == 0;
        const Image l1 = finest ? i1 : resize_area(i1, e.height, e.width);
        const Image l2 = finest ? i2 : resize_area(i2, e.height, e.width);
        const StageObjective objective(stage, l1, l2, loss);

        if (li == 0) {
            if (aux.init_f) {
                w_f = at_extent(*aux.init_f, e);
                w_b = aux.init_b ? at_extent(*aux.init_b, e) : FlowField(e.height, e.width);
            } else {
                w_f = FlowField(e.height, e.width);
                w_b = FlowField(e.height, e.width);
                if (opt.init_noise > 0.0) {
                    std::normal_distribution<double> noise(0.0, opt.init_noise);
                    for (double& v : w_f.data()) v = noise(rng);
                    for (double& v : w_b.data()) v = noise(rng);
                }
            }
        } else {
            w_f = resize_flow(w_f, e.height, e.width);
            w_b = resize_flow(w_b, e.height, e.width);
        }

        LevelInput<FlowField> teacher_f, teacher_b, gt;
        LevelInput<MaskMap> tocc_f, tocc_b, conf_f, conf_b, validity;
        teacher_f.set(aux.teacher_f, e);
        teacher_b.set(aux.teacher_b, e);
        tocc_f.set(aux.teacher_occ_f, e);
        tocc_b.set(aux.teacher_occ_b, e);
        conf_f.set(aux.confidence_f, e);
        conf_b.set(aux.confidence_b, e);
        gt.set(aux.ground_truth, e);
        validity.set(aux.validity, e);

        MaskMap occ_f(e.height, e.width), occ_b(e.height, e.width);
        MaskMap hal_f(e.height, e.width), hal_b(e.height, e.width);
        StageInputs in;
        in.i1 = &l1;
        in.i2 = &l2;
        in.w_f = &w_f;
        in.w_b = &w_b;
        in.occ_f = &occ_f;
        in.occ_b = &occ_b;
        in.teacher_f = teacher_f.ptr;
        in.teacher_b = teacher_b.ptr;
        in.hallucinated_f = &hal_f;
        in.hallucinated_b = &hal_b;
        in.confidence_f = conf_f.ptr;
        in.confidence_b = conf_b.ptr;
        in.ground_truth = gt.ptr;
        in.validity = validity.ptr;
        if (stage == Stage::stage2_v1 && (!tocc_f.ptr || !tocc_b.ptr)) {
            throw InvalidArgument("optimize_flow: stage2_v1 needs teacher occlusion maps");
        }

        const std::size_t n = w_f.data().size();
        Adam adam(2 * n);
        for (int it = 0; it < N; ++it, ++global_iteration) {
            if (uses_occlusion(stage) && it >= pretrain && (it - pretrain) % R == 0) {
                OcclusionPair o = occlusion_maps(w_f, w_b, loss.alpha1, loss.alpha2);
                occ_f = std::move(o.forward);
                occ_b = std::move(o.backward);
                ++result.occlusion_refreshes;
                if (stage == Stage::stage2_v1) {
                    hal_f = hallucinated_occlusion(occ_f, *tocc_f.ptr);
                    hal_b = hallucinated_occlusion(occ_b, *tocc_b.ptr);
                }
            }
            const LossReport report = objective.evaluate(in);
            if (!std::isfinite(report.value)) {
                throw NumericalError("optimize_flow: non-finite loss at iteration " + std::to_string(it) +
                                     " of level " + std::to_string(level_index));
            }
            TraceRow row{global_iteration, level_index, report.value, -1.0};
            if (aux.eval_gt) {
                const FlowField full = finest ? w_f : resize_flow(w_f, H, W);
                row.epe = aux.eval_mask ? epe(full, *aux.eval_gt, *aux.eval_mask)
                                        : epe(full, *aux.eval_gt, MaskMap(H, W, 1.0));
            }
            result.trace.push_back(row);

            ++adam.t;
            const double bias1 = 1.0 - std::pow(opt.beta1, adam.t);
            const double bias2 = 1.0 - std::pow(opt.beta2, adam.t);
            const double lr = opt.step_at(it);
            adam.step(w_f.data(), report.grad_wf.data(), 0, lr, opt, bias1, bias2);
            if (!aux.forward_only) adam.step(w_b.data(), report.grad_wb.data(), n, lr, opt, bias1, bias2);
            if (!w_f.all_finite() || !w_b.all_finite()) {
                throw NumericalError("optimize_flow: non-finite flow after update");
            }

            const int from_end = N - 1 - it;
            if (finest && from_end % R == 0 && from_end / R < opt.checkpoints) {
                result.checkpoints.push_back({global_iteration, w_f, w_b});
            }
        }
        if (finest && stage == Stage::stage2_v1) {
            result.last_hallucinated_f = hal_f;
            result.last_hallucinated_b = hal_b;
        }
    }
    OcclusionPair o = occlusion_maps(w_f, w_b, loss.alpha1, loss.alpha2);
    result.occ_f = std::move(o.forward);
    result.occ_b = std::move(o.backward);
    result.w_f = std::move(w_f);
    result.w_b = std::move(w_b);
    return result;
}

TeacherPrediction TeacherPrediction::from_flows(FlowField w_f, FlowField w_b, double alpha1, double alpha2,
                                                std::string provenance) {
    OcclusionPair o = occlusion_maps(w_f, w_b, alpha1, alpha2);
    TeacherPrediction p;
    p.conf_f = confidence_map(o.forward);
    p.conf_b = confidence_map(o.backward);
    p.occ_f = std::move(o.forward);
    p.occ_b = std::move(o.backward);
    p.w_f = std::move(w_f);
    p.w_b = std::move(w_b);
    p.provenance = std::move(provenance);
    return p;
}

TeacherRun train_teacher(const Image& i1, const Image& i2, const PipelineConfig& cfg, std::uint64_t seed,
                         const FlowField* eval_gt, const MaskMap* eval_mask) {
    StageAux aux;
    aux.eval_gt = eval_gt;
    aux.eval_mask = eval_mask;
    OptimizeResult r = optimize_flow(i1, i2, Stage::stage1, aux, cfg.pyramid, cfg.optimizer, cfg.loss, seed);
    TeacherRun run;
    const std::string tag = "seed=" + std::to_string(seed);
    for (FlowCheckpoint& c : r.checkpoints) {
        run.checkpoints.push_back(TeacherPrediction::from_flows(std::move(c.w_f), std::move(c.w_b), cfg.loss.alpha1,
                                                                cfg.loss.alpha2,
                                                                tag + ";iteration=" + std::to_string(c.iteration)));
    }
    run.prediction = TeacherPrediction::from_flows(std::move(r.w_f), std::move(r.w_b), cfg.loss.alpha1,
                                                   cfg.loss.alpha2, tag + ";final");
    run.trace = std::move(r.trace);
    return run;
}

std::vector<TeacherRun> train_teachers(const Image& i1, const Image& i2, const PipelineConfig& cfg,
                                       const std::vector<std::uint64_t>& seeds) {
    std::vector<TeacherRun> runs;
    if (std::thread::hardware_concurrency() > 1 && seeds.size() > 1) {
        std::vector<std::future<TeacherRun>> jobs;
        for (std::uint64_t s : seeds) {
            jobs.push_back(std::async(std::launch::async, [&, s] { return train_teacher(i1, i2, cfg, s); }));
        }
        for (auto& j : jobs) runs.push_back(j.get());
    } else {
        for (std::uint64_t s : seeds) runs.push_back(train_teacher(i1, i2, cfg, s));
    }
    return runs;
}

TeacherPrediction ensemble(const std::vector<TeacherPrediction>& members, double alpha1, double alpha2) {
    if (members.empty()) throw InvalidArgument("ensemble: no predictions");
    const FlowField& first = members.front().w_f;
    FlowField sum_f(first.height(), first.width()), sum_b(first.height(), first.width());
    std::string provenance = "ensemble(";
    for (std::size_t k = 0; k < members.size(); ++k) {
        const TeacherPrediction& m = members[k];
        if (!m.w_f.same_extent(first) || !m.w_b.same_extent(first)) throw ShapeError("ensemble: member shapes differ");
        auto sf = sum_f.data();
        auto sb = sum_b.data();
        auto mf = m.w_f.data();
        auto mb = m.w_b.data();
        for (std::size_t i = 0; i < sf.size(); ++i) {
            sf[i] += mf[i];
            sb[i] += mb[i];
        }
        provenance += (k ? "," : "") + m.provenance;
    }
    const double inv = 1.0 / static_cast<double>(members.size());
    for (double& v : sum_f.data()) v *= inv;
    for (double& v : sum_b.data()) v *= inv;
    return TeacherPrediction::from_flows(std::move(sum_f), std::move(sum_b), alpha1, alpha2, provenance + ")");
}

TransformedTeacher transform_teacher(const TeacherPrediction& teacher, const TransformBundle& bundle) {
    TransformedFlow f = transform_flow(teacher.w_f, bundle.affine, bundle.output);
    TransformedFlow b = transform_flow(teacher.w_b, bundle.affine, bundle.output);
    TransformedTeacher t;
    t.occ_f = transform_mask(teacher.occ_f, bundle.affine, bundle.output, 1.0);
    t.occ_b = transform_mask(teacher.occ_b, bundle.affine, bundle.output, 1.0);
    t.conf_f = transform_mask(teacher.conf_f, bundle.affine, bundle.output, 0.0);
    t.conf_b = transform_mask(teacher.conf_b, bundle.affine, bundle.output, 0.0);
    auto cf = t.conf_f.data();
    auto cb = t.conf_b.data();
    auto vf = f.sample_valid.data();
    auto vb = b.sample_valid.data();
    for (std::size_t i = 0; i < cf.size(); ++i) {
        cf[i] *= vf[i];
        cb[i] *= vb[i];
    }
    t.w_f = std::move(f.flow);
    t.w_b = std::move(b.flow);
    return t;
}

StudentFrameTruth student_frame_truth(const FlowField& gt_f, const FlowField& gt_b, const MaskMap& gt_occ_f,
                                      const TransformBundle& bundle, const MaskMap& noise_mask) {
    const int h = bundle.output.height;
    const int w = bundle.output.width;
    if (!noise_mask.empty() && (noise_mask.height() != h || noise_mask.width() != w)) {
        throw ShapeError("student_frame_truth: noise mask does not match the bundle output");
    }
    TransformedFlow f = transform_flow(gt_f, bundle.affine, bundle.output);
    TransformedFlow b = transform_flow(gt_b, bundle.affine, bundle.output);
    StudentFrameTruth t;
    t.occluded = transform_mask(gt_occ_f, bundle.affine, bundle.output, 1.0);
    const MaskMap lost = occlusion_from_consistency(f.flow, b.flow);
    t.hallucinated = MaskMap(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool gone = lost(y, x) > 0.5;
            const long qx = std::lround(x + f.flow.u(y, x));
            const long qy = std::lround(y + f.flow.v(y, x));
            if (!noise_mask.empty() && qx >= 0 && qy >= 0 && qx < w && qy < h && noise_mask(qy, qx) > 0.5) gone = true;
            t.hallucinated(y, x) = gone && t.occluded(y, x) < 0.5 ? 1.0 : 0.0;
        }
    }
    t.flow = std::move(f.flow);
    t.valid = std::move(f.sample_valid);
    return t;
}

StudentVariant parse_student_variant(std::string_view name) {
    if (name == "v1" || name == "v1_occlusion_view") return StudentVariant::v1_occlusion_view;
    if (name == "v2" || name == "v2_confidence_view") return StudentVariant::v2_confidence_view;
    throw ConfigError("unknown student variant '" + std::string(name) + "' (expected v1 or v2)");
}

std::string_view to_string(StudentVariant v) {
    return v == StudentVariant::v1_occlusion_view ? "v1" : "v2";
}

StudentResult train_student(const Image& i1, const Image& i2, const TeacherPrediction& teacher,
                            TransformBundle& bundle, StudentVariant variant, const PipelineConfig& cfg,
                            std::uint64_t seed, const StudentOptions& options) {
    if (!i1.same_extent(teacher.w_f.height(), teacher.w_f.width())) {
        throw ShapeError("train_student: teacher prediction does not match the pair");
    }
    StudentResult out{FlowField(), FlowField(), MaskMap(), MaskMap(), apply_bundle(bundle, i1, i2),
                      transform_teacher(teacher, bundle), {}};
    const TransformedTeacher& t = out.teacher;
    StageAux aux;
    aux.teacher_f = &t.w_f;
    aux.teacher_b = &t.w_b;
    if (options.init_from_teacher) {
        aux.init_f = &t.w_f;
        aux.init_b = &t.w_b;
    }
    Stage stage;
    if (variant == StudentVariant::v1_occlusion_view) {
        stage = Stage::stage2_v1;
        aux.teacher_occ_f = &t.occ_f;
        aux.teacher_occ_b = &t.occ_b;
    } else {
        stage = Stage::stage2_v2;
        aux.confidence_f = &t.conf_f;
        aux.confidence_b = &t.conf_b;
        if (t.conf_f.sum() <= 0.0 || t.conf_b.sum() <= 0.0) {
            throw DegenerateMask("train_student: transformed teacher has no confident pixel");
        }
    }
    OptimizeResult r = optimize_flow(out.pair.i1, out.pair.i2, stage, aux, cfg.pyramid, cfg.optimizer, cfg.loss, seed);
    out.report.final_loss = r.trace.empty() ? 0.0 : r.trace.back().loss;
    out.report.occlusion_refreshes = r.occlusion_refreshes;
    if (!r.last_hallucinated_f.empty()) {
        out.report.hallucinated_f = r.last_hallucinated_f.sum();
        out.report.hallucinated_b = r.last_hallucinated_b.sum();
    }
    if (variant == StudentVariant::v2_confidence_view) {
        out.report.confident_f = t.conf_f.sum();
        out.report.confident_b = t.conf_b.sum();
    }
    out.report.trace = std::move(r.trace);
    out.w_f = std::move(r.w_f);
    out.w_b = std::move(r.w_b);
    out.occ_f = std::move(r.occ_f);
    out.occ_b = std::move(r.occ_b);
    return out;
}

std::pair<FlowField, FlowField> finetune_supervised(const Image& i1, const Image& i2, const FlowField& w_gt,
                                                    const MaskMap& validity, const FlowField& init_f,
                                                    const FlowField& init_b, const PipelineConfig& cfg,
                                                    std::uint64_t seed) {
    if (!w_gt.same_extent(validity) || !i1.same_extent(w_gt.height(), w_gt.width()) || !init_f.same_extent(w_gt) ||
        !init_b.same_extent(w_gt)) {
        throw ShapeError("finetune_supervised: extents differ");
    }
    if (!(validity.sum() > 0.0)) throw DegenerateMask("finetune_supervised: no labeled pixel");
    StageAux aux;
    aux.ground_truth = &w_gt;
    aux.validity = &validity;
    aux.init_f = &init_f;
    aux.init_b = &init_b;
    aux.forward_only = true;
    PyramidSpec single = cfg.pyramid;
    single.levels = 1;
    OptimizeResult r = optimize_flow(i1, i2, Stage::supervised, aux, single, cfg.optimizer, cfg.loss, seed);
    return {std::move(r.w_f), init_b};
}

SemiSchedule build_semi_schedule(int n_labeled, int n_self_annotated) {
    if (n_labeled < 0 || n_self_annotated < 0) throw InvalidArgument("semi schedule: counts must be >= 0");
    if (n_labeled == 0 && n_self_annotated == 0) throw InvalidArgument("semi schedule: both counts are zero");
    SemiSchedule s{n_labeled, n_self_annotated, 1};
    if (n_labeled > 0) {
        // round half up of n2 / n1 in integer arithmetic
        const long long r = (2LL * n_self_annotated + n_labeled) / (2LL * n_labeled);
        s.repeat_factor = static_cast<int>(std::max(1LL, r));
    }
    return s;
}

std::vector<Presentation> epoch_presentations(const SemiSchedule& schedule) {
    const long long labeled = static_cast<long long>(schedule.n_labeled) * schedule.repeat_factor;
    const long long self = schedule.n_self_annotated;
    std::vector<Presentation> out;
    out.reserve(static_cast<std::size_t>(labeled + self));
    long long a = 0, b = 0;
    // Merge by fractional position (i + 1/2) / count; ties go to labeled.
    while (a < labeled || b < self) {
        const bool take_labeled =
            b >= self || (a < labeled && (2 * a + 1) * self <= (2 * b + 1) * labeled);
        if (take_labeled) {
            out.push_back({true, static_cast<int>(a % schedule.n_labeled)});
            ++a;
        } else {
            out.push_back({false, static_cast<int>(b)});
            ++b;
        }
    }
    return out;
}

}  // namespace distillflow

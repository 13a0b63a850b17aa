#include "distillflow/losses.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace distillflow {

PhotometricKind parse_photometric_kind(std::string_view name) {
    if (name == "brightness") return PhotometricKind::brightness;
    if (name == "ssim") return PhotometricKind::ssim;
    if (name == "census") return PhotometricKind::census;
    throw InvalidArgument("unknown photometric kind: " + std::string(name));
}

std::string_view to_string(PhotometricKind kind) {
    switch (kind) {
        case PhotometricKind::brightness: return "brightness";
        case PhotometricKind::ssim: return "ssim";
        case PhotometricKind::census: return "census";
    }
    return "?";
}

void LossConfig::validate() const {
    if (!(epsilon > 0.0)) throw InvalidArgument("loss: epsilon must be > 0");
    if (!(q_exponent > 0.0 && q_exponent <= 1.0)) throw InvalidArgument("loss: q must be in (0,1]");
    if (!(beta >= 0.0)) throw InvalidArgument("loss: beta must be >= 0");
    if (!(smooth_weight >= 0.0)) throw InvalidArgument("loss: smooth_weight must be >= 0");
    if (!(alpha1 >= 0.0) || !(alpha2 > 0.0)) throw InvalidArgument("loss: need alpha1 >= 0, alpha2 > 0");
    if (census_radius < 1) throw InvalidArgument("loss: census radius must be >= 1");
    if (!(census_softness > 0.0)) throw InvalidArgument("loss: census softness must be > 0");
    if (ssim_window < 1 || ssim_window % 2 == 0) throw InvalidArgument("loss: ssim window must be odd");
}

void LossReport::accumulate(const LossReport& other, double weight) {
    value += weight * other.value;
    auto add = [weight](FlowField& dst, const FlowField& src) {
        if (src.empty()) return;
        auto d = dst.data();
        auto s = src.data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += weight * s[i];
    };
    add(grad_wf, other.grad_wf);
    add(grad_wb, other.grad_wb);
}

Penalty robust_penalty(double x, const LossConfig& cfg) {
    const double a = std::abs(x) + cfg.epsilon;
    const double value = std::pow(a, cfg.q_exponent);
    if (x == 0.0) return {value, 0.0};
    const double derivative = cfg.q_exponent * value / a;
    return {value, x > 0.0 ? derivative : -derivative};
}

namespace {

void require_extent(const FlowField& a, const FlowField& b, const char* what) {
    if (!a.same_extent(b)) throw ShapeError(std::string(what) + ": flow extents differ");
}

void require_extent(const FlowField& a, const MaskMap& m, const char* what) {
    if (!a.same_extent(m)) throw ShapeError(std::string(what) + ": mask extent differs");
}

// One direction of a flow-vs-flow masked robust loss, per-component sum.
// Returns the normalized value; gradient w.r.t. `student` is added to grad.
double masked_flow_term(const FlowField& target, const FlowField& student, const MaskMap& mask,
                        const LossConfig& cfg, FlowField& grad, double mass) {
    double total = 0.0;
    for (int y = 0; y < student.height(); ++y) {
        for (int x = 0; x < student.width(); ++x) {
            const double m = mask(y, x);
            if (m == 0.0) continue;
            for (int c = 0; c < 2; ++c) {
                const Penalty p = robust_penalty(target(y, x, c) - student(y, x, c), cfg);
                total += p.value * m;
                grad(y, x, c) -= p.derivative * m / mass;
            }
        }
    }
    return total / mass;
}

}  // namespace

PhotometricTerm::PhotometricTerm(const Image& i1, const Image& i2, const LossConfig& cfg)
    : cfg_(cfg), i1_(i1), i2_(i2) {
    cfg_.validate();
    if (!i1.same_shape(i2)) throw ShapeError("photometric: image shapes differ");
    switch (cfg_.photometric_kind) {
        case PhotometricKind::brightness:
        case PhotometricKind::ssim:
            f1_ = i1;
            f2_ = i2;
            break;
        case PhotometricKind::census:
            f1_ = soft_census(i1, cfg_.census_radius, cfg_.census_softness).as_image();
            f2_ = soft_census(i2, cfg_.census_radius, cfg_.census_softness).as_image();
            break;
    }
}

double PhotometricTerm::direction(const Image& reference_features, const Image& target_features,
                                  const Image& reference_raw, const Image& target_raw,
                                  const FlowField& flow, const MaskMap& occ, FlowField& grad) const {
    const int h = flow.height();
    const int w = flow.width();
    double mass = 0.0;
    for (double o : occ.data()) mass += 1.0 - o;
    if (!(mass > 0.0)) throw DegenerateMask("photometric loss: every pixel is occluded");

    if (cfg_.photometric_kind != PhotometricKind::ssim) {
        const int channels = target_features.channels();
        const double norm = 1.0 / (channels * mass);
        std::vector<double> val(channels), gx(channels), gy(channels);
        double total = 0.0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double m = 1.0 - occ(y, x);
                if (m == 0.0) continue;
                sample_into(target_features, x + flow.u(y, x), y + flow.v(y, x), val, gx, gy);
                double gu = 0.0;
                double gv = 0.0;
                for (int c = 0; c < channels; ++c) {
                    const Penalty p = robust_penalty(reference_features(y, x, c) - val[c], cfg_);
                    total += p.value * m;
                    gu -= p.derivative * gx[c];
                    gv -= p.derivative * gy[c];
                }
                grad.u(y, x) += gu * m * norm;
                grad.v(y, x) += gv * m * norm;
            }
        }
        return total * norm;
    }

    // SSIM: warp the raw target, score it against the reference, then
    // back-propagate through the windowed statistics and the warp.
    const int channels = target_raw.channels();
    const double norm = 1.0 / (channels * mass);
    Image warped(h, w, channels), dwx(h, w, channels), dwy(h, w, channels);
    std::vector<double> val(channels), gx(channels), gy(channels);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            sample_into(target_raw, x + flow.u(y, x), y + flow.v(y, x), val, gx, gy);
            for (int c = 0; c < channels; ++c) {
                warped(y, x, c) = val[c];
                dwx(y, x, c) = gx[c];
                dwy(y, x, c) = gy[c];
            }
        }
    }
    const Image dissim = ssim_map(reference_raw, warped, cfg_.ssim_window);
    Image grad_dissim(h, w, channels);
    double total = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double m = 1.0 - occ(y, x);
            if (m == 0.0) continue;
            for (int c = 0; c < channels; ++c) {
                const Penalty p = robust_penalty(dissim(y, x, c), cfg_);
                total += p.value * m;
                grad_dissim(y, x, c) = p.derivative * m * norm;
            }
        }
    }
    const Image grad_warped = ssim_map_vjp_b(reference_raw, warped, grad_dissim, cfg_.ssim_window);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < channels; ++c) {
                grad.u(y, x) += grad_warped(y, x, c) * dwx(y, x, c);
                grad.v(y, x) += grad_warped(y, x, c) * dwy(y, x, c);
            }
        }
    }
    return total * norm;
}

LossReport PhotometricTerm::evaluate(const FlowField& w_f, const FlowField& w_b,
                                     const MaskMap& occ_f, const MaskMap& occ_b) const {
    if (!w_f.same_extent(i1_) || !w_b.same_extent(i1_)) throw ShapeError("photometric: flow extent differs");
    require_extent(w_f, occ_f, "photometric");
    require_extent(w_b, occ_b, "photometric");
    LossReport r(w_f.height(), w_f.width());
    r.value = direction(f1_, f2_, i1_, i2_, w_f, occ_f, r.grad_wf) +
              direction(f2_, f1_, i2_, i1_, w_b, occ_b, r.grad_wb);
    return r;
}

SmoothnessTerm::SmoothnessTerm(const Image& img, double beta)
    : weight_x_(img.height(), img.width(), 1), weight_y_(img.height(), img.width(), 1) {
    const ImageGradient g = image_gradient(img);
    const int channels = img.channels();
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            double ax = 0.0;
            double ay = 0.0;
            for (int c = 0; c < channels; ++c) {
                ax += std::abs(g.gx(y, x, c));
                ay += std::abs(g.gy(y, x, c));
            }
            weight_x_(y, x) = std::exp(-beta * ax / channels);
            weight_y_(y, x) = std::exp(-beta * ay / channels);
        }
    }
}

double SmoothnessTerm::evaluate(const FlowField& flow, FlowField& grad, const MaskMap* pixel_mask) const {
    const int h = flow.height();
    const int w = flow.width();
    if (!flow.same_extent(weight_x_)) throw ShapeError("smoothness: flow extent differs from image");
    if (pixel_mask && !flow.same_extent(*pixel_mask)) throw ShapeError("smoothness: mask extent differs");
    const double norm = 1.0 / (static_cast<double>(h) * w);
    auto sign = [](double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); };
    double total = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double m = pixel_mask ? (*pixel_mask)(y, x) : 1.0;
            if (m == 0.0) continue;
            for (int c = 0; c < 2; ++c) {
                if (x + 1 < w) {
                    const double d = flow(y, x + 1, c) - flow(y, x, c);
                    const double wgt = weight_x_(y, x) * m;
                    total += wgt * std::abs(d);
                    grad(y, x + 1, c) += wgt * sign(d) * norm;
                    grad(y, x, c) -= wgt * sign(d) * norm;
                }
                if (y + 1 < h) {
                    const double d = flow(y + 1, x, c) - flow(y, x, c);
                    const double wgt = weight_y_(y, x) * m;
                    total += wgt * std::abs(d);
                    grad(y + 1, x, c) += wgt * sign(d) * norm;
                    grad(y, x, c) -= wgt * sign(d) * norm;
                }
            }
        }
    }
    return total * norm;
}

LossReport photometric_loss(const Image& i1, const Image& i2, const FlowField& w_f,
                            const FlowField& w_b, const MaskMap& occ_f, const MaskMap& occ_b,
                            const LossConfig& cfg) {
    return PhotometricTerm(i1, i2, cfg).evaluate(w_f, w_b, occ_f, occ_b);
}

LossReport smoothness_loss(const Image& i1, const Image& i2, const FlowField& w_f,
                           const FlowField& w_b, const LossConfig& cfg) {
    cfg.validate();
    if (!i1.same_shape(i2)) throw ShapeError("smoothness: image shapes differ");
    require_extent(w_f, w_b, "smoothness");
    LossReport r(w_f.height(), w_f.width());
    r.value = SmoothnessTerm(i1, cfg.beta).evaluate(w_f, r.grad_wf) +
              SmoothnessTerm(i2, cfg.beta).evaluate(w_b, r.grad_wb);
    return r;
}

LossReport occlusion_distill_loss(const FlowField& teacher_f, const FlowField& teacher_b,
                                  const FlowField& student_f, const FlowField& student_b,
                                  const MaskMap& hallucinated_f, const MaskMap& hallucinated_b,
                                  const LossConfig& cfg) {
    cfg.validate();
    require_extent(teacher_f, student_f, "occlusion_distill_loss");
    require_extent(teacher_b, student_b, "occlusion_distill_loss");
    require_extent(student_f, student_b, "occlusion_distill_loss");
    require_extent(student_f, hallucinated_f, "occlusion_distill_loss");
    require_extent(student_b, hallucinated_b, "occlusion_distill_loss");
    LossReport r(student_f.height(), student_f.width());
    const double mass_f = hallucinated_f.sum();
    const double mass_b = hallucinated_b.sum();
    if (mass_f > 0.0) r.value += masked_flow_term(teacher_f, student_f, hallucinated_f, cfg, r.grad_wf, mass_f);
    if (mass_b > 0.0) r.value += masked_flow_term(teacher_b, student_b, hallucinated_b, cfg, r.grad_wb, mass_b);
    return r;
}

LossReport confidence_distill_loss(const FlowField& teacher_f, const FlowField& teacher_b,
                                   const FlowField& student_f, const FlowField& student_b,
                                   const MaskMap& confidence_f, const MaskMap& confidence_b,
                                   const LossConfig& cfg) {
    cfg.validate();
    require_extent(teacher_f, student_f, "confidence_distill_loss");
    require_extent(teacher_b, student_b, "confidence_distill_loss");
    require_extent(student_f, student_b, "confidence_distill_loss");
    require_extent(student_f, confidence_f, "confidence_distill_loss");
    require_extent(student_b, confidence_b, "confidence_distill_loss");
    const double mass_f = confidence_f.sum();
    const double mass_b = confidence_b.sum();
    if (!(mass_f > 0.0) || !(mass_b > 0.0)) {
        throw DegenerateMask("confidence_distill_loss: no confident teacher pixel");
    }
    LossReport r(student_f.height(), student_f.width());
    r.value = masked_flow_term(teacher_f, student_f, confidence_f, cfg, r.grad_wf, mass_f) +
              masked_flow_term(teacher_b, student_b, confidence_b, cfg, r.grad_wb, mass_b);
    return r;
}

LossReport supervised_loss(const FlowField& w_f, const FlowField& w_gt, const MaskMap& validity,
                           const LossConfig& cfg) {
    cfg.validate();
    require_extent(w_f, w_gt, "supervised_loss");
    require_extent(w_f, validity, "supervised_loss");
    const double mass = validity.sum();
    if (!(mass > 0.0)) throw DegenerateMask("supervised_loss: empty validity mask");
    LossReport r(w_f.height(), w_f.width());
    r.value = masked_flow_term(w_gt, w_f, validity, cfg, r.grad_wf, mass);
    return r;
}

StageObjective::StageObjective(Stage stage, const Image& i1, const Image& i2, const LossConfig& cfg)
    : stage_(stage), cfg_(cfg), smooth_f_(i1, cfg.beta), smooth_b_(i2, cfg.beta) {
    cfg_.validate();
    if (!i1.same_shape(i2)) throw ShapeError("stage objective: image shapes differ");
    if (stage == Stage::stage1 || stage == Stage::stage2_v1) photometric_.emplace(i1, i2, cfg_);
}

LossReport StageObjective::evaluate(const StageInputs& in) const {
    auto need = [](const void* p, const char* what) {
        if (!p) throw InvalidArgument(std::string("stage loss: missing input ") + what);
    };
    need(in.w_f, "w_f");
    const int h = in.w_f->height();
    const int w = in.w_f->width();
    LossReport total(h, w);

    if (stage_ == Stage::supervised) {
        need(in.ground_truth, "ground_truth");
        need(in.validity, "validity");
        total.accumulate(supervised_loss(*in.w_f, *in.ground_truth, *in.validity, cfg_), 1.0);
        if (cfg_.smooth_weight > 0.0) {
            const MaskMap unlabeled = confidence_map(*in.validity);
            FlowField g(h, w);
            const double s = smooth_f_.evaluate(*in.w_f, g, &unlabeled);
            LossReport smooth(h, w);
            smooth.value = s;
            smooth.grad_wf = std::move(g);
            total.accumulate(smooth, cfg_.smooth_weight);
        }
        return total;
    }

    need(in.w_b, "w_b");
    switch (stage_) {
        case Stage::stage1:
        case Stage::stage2_v1:
            need(in.occ_f, "occ_f");
            need(in.occ_b, "occ_b");
            total.accumulate(photometric_->evaluate(*in.w_f, *in.w_b, *in.occ_f, *in.occ_b), 1.0);
            if (stage_ == Stage::stage2_v1) {
                need(in.teacher_f, "teacher_f");
                need(in.teacher_b, "teacher_b");
                need(in.hallucinated_f, "hallucinated_f");
                need(in.hallucinated_b, "hallucinated_b");
                total.accumulate(occlusion_distill_loss(*in.teacher_f, *in.teacher_b, *in.w_f, *in.w_b,
                                                        *in.hallucinated_f, *in.hallucinated_b, cfg_),
                                 1.0);
            }
            break;
        case Stage::stage2_v2:
            need(in.teacher_f, "teacher_f");
            need(in.teacher_b, "teacher_b");
            need(in.confidence_f, "confidence_f");
            need(in.confidence_b, "confidence_b");
            total.accumulate(confidence_distill_loss(*in.teacher_f, *in.teacher_b, *in.w_f, *in.w_b,
                                                     *in.confidence_f, *in.confidence_b, cfg_),
                             1.0);
            break;
        case Stage::supervised:
            break;
    }
    if (cfg_.smooth_weight > 0.0) {
        LossReport smooth(h, w);
        smooth.value = smooth_f_.evaluate(*in.w_f, smooth.grad_wf) + smooth_b_.evaluate(*in.w_b, smooth.grad_wb);
        total.accumulate(smooth, cfg_.smooth_weight);
    }
    return total;
}

LossReport compose_stage_loss(Stage stage, const StageInputs& in, const LossConfig& cfg) {
    if (!in.i1 || !in.i2) throw InvalidArgument("stage loss: missing images");
    return StageObjective(stage, *in.i1, *in.i2, cfg).evaluate(in);
}

}  // namespace distillflow

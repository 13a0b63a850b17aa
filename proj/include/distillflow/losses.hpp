#pragma once

#include <optional>
#include <string_view>

#include "distillflow/flow.hpp"
#include "distillflow/image.hpp"

namespace distillflow {

enum class PhotometricKind { brightness, ssim, census };

PhotometricKind parse_photometric_kind(std::string_view name);
std::string_view to_string(PhotometricKind kind);

struct LossConfig {
    double epsilon = 0.01;      // robust penalty offset
    double q_exponent = 0.4;    // robust penalty exponent
    double beta = 10.0;         // edge-aware smoothness sharpness
    double smooth_weight = 0.1;
    PhotometricKind photometric_kind = PhotometricKind::census;
    double alpha1 = kDefaultAlpha1;
    double alpha2 = kDefaultAlpha2;
    int census_radius = 1;
    double census_softness = 0.02;
    int ssim_window = 3;

    // Throws InvalidArgument when a field is out of range.
    void validate() const;
};

// Scalar loss with dense gradients w.r.t. the forward and backward flows.
struct LossReport {
    double value = 0.0;
    FlowField grad_wf;
    FlowField grad_wb;

    LossReport() = default;
    LossReport(int height, int width) : grad_wf(height, width), grad_wb(height, width) {}

    // this += weight * other
    void accumulate(const LossReport& other, double weight);
};

struct Penalty {
    double value;
    double derivative;
};

// psi(x) = (|x| + eps)^q. The derivative at exactly x = 0 is taken as 0.
Penalty robust_penalty(double x, const LossConfig& cfg);

// Occlusion-masked photometric term with features precomputed once:
// identity (brightness), soft census descriptors, or the SSIM
// dissimilarity against the warped target. Sum over both directions of
// the per-channel mean of psi(feature difference), normalized by the
// non-occluded mass. Masks are constants (no gradient through them).
class PhotometricTerm {
public:
    PhotometricTerm(const Image& i1, const Image& i2, const LossConfig& cfg);

    LossReport evaluate(const FlowField& w_f, const FlowField& w_b, const MaskMap& occ_f,
                        const MaskMap& occ_b) const;

private:
    double direction(const Image& reference_features, const Image& target_features,
                     const Image& reference_raw, const Image& target_raw, const FlowField& flow,
                     const MaskMap& occ, FlowField& grad) const;

    LossConfig cfg_;
    Image i1_, i2_;
    Image f1_, f2_;  // features fed to the penalty; raw images for SSIM
};

// Edge-aware first-order smoothness, one direction:
// (1/HW) sum_p mask(p) [ e^{-beta |Ix|} (|u_x| + |v_x|) + e^{-beta |Iy|} (|u_y| + |v_y|) ]
// with |I*| the channel-mean absolute forward difference.
class SmoothnessTerm {
public:
    SmoothnessTerm(const Image& img, double beta);

    // Adds the gradient into `grad`; an empty pixel_mask means all ones.
    double evaluate(const FlowField& flow, FlowField& grad, const MaskMap* pixel_mask = nullptr) const;

private:
    Image weight_x_, weight_y_;
};

LossReport photometric_loss(const Image& i1, const Image& i2, const FlowField& w_f,
                            const FlowField& w_b, const MaskMap& occ_f, const MaskMap& occ_b,
                            const LossConfig& cfg);

LossReport smoothness_loss(const Image& i1, const Image& i2, const FlowField& w_f,
                           const FlowField& w_b, const LossConfig& cfg);

// Teacher-to-student loss on hallucinated occlusions O'. Teacher flows are
// constants. A direction whose mask is empty contributes 0.
LossReport occlusion_distill_loss(const FlowField& teacher_f, const FlowField& teacher_b,
                                  const FlowField& student_f, const FlowField& student_b,
                                  const MaskMap& hallucinated_f, const MaskMap& hallucinated_b,
                                  const LossConfig& cfg);

// Teacher-to-student loss on confident teacher pixels M^T. Throws
// DegenerateMask when a direction has no confident pixel.
LossReport confidence_distill_loss(const FlowField& teacher_f, const FlowField& teacher_b,
                                   const FlowField& student_f, const FlowField& student_b,
                                   const MaskMap& confidence_f, const MaskMap& confidence_b,
                                   const LossConfig& cfg);

// Forward-only masked robust loss against labels; grad_wb is zero.
LossReport supervised_loss(const FlowField& w_f, const FlowField& w_gt, const MaskMap& validity,
                           const LossConfig& cfg);

enum class Stage { stage1, stage2_v1, stage2_v2, supervised };

// Non-owning view of everything a stage may need. Which fields are
// required depends on the stage; see compose_stage_loss.
struct StageInputs {
    const Image* i1 = nullptr;
    const Image* i2 = nullptr;
    const FlowField* w_f = nullptr;
    const FlowField* w_b = nullptr;
    const MaskMap* occ_f = nullptr;  // photometric masks (student occlusion in stage2_v1)
    const MaskMap* occ_b = nullptr;
    const FlowField* teacher_f = nullptr;
    const FlowField* teacher_b = nullptr;
    const MaskMap* hallucinated_f = nullptr;
    const MaskMap* hallucinated_b = nullptr;
    const MaskMap* confidence_f = nullptr;
    const MaskMap* confidence_b = nullptr;
    const FlowField* ground_truth = nullptr;
    const MaskMap* validity = nullptr;
};

// Stage objective with image-dependent parts precomputed, so an optimizer
// can evaluate it repeatedly:
//   stage1      L_pho + w_s L_smo
//   stage2_v1   L_pho + L_occ + w_s L_smo
//   stage2_v2   L_dis + w_s L_smo
//   supervised  L_sup + w_s L_smo(forward, unlabeled pixels only)
// with w_s = cfg.smooth_weight (0.1 by default).
class StageObjective {
public:
    StageObjective(Stage stage, const Image& i1, const Image& i2, const LossConfig& cfg);

    Stage stage() const { return stage_; }
    LossReport evaluate(const StageInputs& in) const;

private:
    Stage stage_;
    LossConfig cfg_;
    std::optional<PhotometricTerm> photometric_;
    SmoothnessTerm smooth_f_;
    SmoothnessTerm smooth_b_;
};

// Throws InvalidArgument when a field required by the stage is missing.
LossReport compose_stage_loss(Stage stage, const StageInputs& in, const LossConfig& cfg);

}  // namespace distillflow

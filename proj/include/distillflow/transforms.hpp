#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "distillflow/flow.hpp"
#include "distillflow/image.hpp"
#include "distillflow/keyvalue.hpp"

namespace distillflow {

struct Extent {
    int height = 0;
    int width = 0;
    friend bool operator==(const Extent&, const Extent&) = default;
};

// p = L p~ + t. In a TransformBundle it maps student-frame coordinates to
// teacher-frame coordinates; in a scene it maps frame-1 positions to
// frame-2 positions.
struct AffineTransform {
    double a11 = 1.0, a12 = 0.0, a21 = 0.0, a22 = 1.0;
    double tx = 0.0, ty = 0.0;

    static AffineTransform identity() { return {}; }
    static AffineTransform translation(double tx, double ty) { return {1.0, 0.0, 0.0, 1.0, tx, ty}; }
    // Similarity about the origin: scale * R(angle) with translation t.
    static AffineTransform similarity(double scale, double angle, double tx, double ty);

    double determinant() const { return a11 * a22 - a12 * a21; }
    bool is_identity() const;
    bool is_integer_translation() const;

    double apply_x(double x, double y) const { return a11 * x + a12 * y + tx; }
    double apply_y(double x, double y) const { return a21 * x + a22 * y + ty; }

    // Throws InvalidArgument when det(L) == 0.
    AffineTransform inverse() const;
    // L^-1 applied to a displacement vector.
    void inverse_linear(double u, double v, double& out_u, double& out_v) const;

    friend bool operator==(const AffineTransform&, const AffineTransform&) = default;
};

struct ColorTransform {
    double contrast = 1.0;     // about 0.5
    double brightness = 0.0;   // additive
    double saturation = 1.0;
    double hue_shift = 0.0;    // radians, rotation in the YIQ chroma plane
    double gamma = 1.0;

    bool is_identity() const;
    friend bool operator==(const ColorTransform&, const ColorTransform&) = default;
};

// Segment id per pixel, ids contiguous 0..count-1.
class LabelMap {
public:
    LabelMap() = default;
    LabelMap(int height, int width, std::vector<int> labels);

    int height() const { return height_; }
    int width() const { return width_; }
    int count() const { return count_; }
    int operator()(int y, int x) const { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
    const std::vector<int>& labels() const { return labels_; }

    friend bool operator==(const LabelMap&, const LabelMap&) = default;

private:
    int height_ = 0;
    int width_ = 0;
    int count_ = 0;
    std::vector<int> labels_;
};

// SLIC-style superpixels over (luminance, x, y): jittered grid seeds,
// five k-means iterations in a 2S window, then orphan components are
// absorbed into their largest neighbor so every segment is connected.
LabelMap superpixel_segment(const Image& img, int target_count, double compactness, std::uint64_t seed);

struct NoiseInjection {
    Image image;
    MaskMap mask;              // 1 on replaced pixels
    std::vector<int> noised_ids;
};

// Replaces `count_to_noise` uniformly chosen segments with independent
// uniform [0,1] noise per channel.
NoiseInjection inject_superpixel_noise(const Image& img, const LabelMap& labels, int count_to_noise,
                                       std::uint64_t seed);

// Recorded superpixel-noise parameters. The label map and chosen ids are
// realized deterministically from these when the bundle is applied.
struct SuperpixelNoise {
    int segments = 200;
    double compactness = 0.1;
    std::uint64_t segment_seed = 0;
    int count = 1;
    std::uint64_t noise_seed = 0;

    // Filled in by apply_bundle.
    LabelMap label_map;
    std::vector<int> noised_ids;

    friend bool operator==(const SuperpixelNoise& a, const SuperpixelNoise& b) {
        return a.segments == b.segments && a.compactness == b.compactness &&
               a.segment_seed == b.segment_seed && a.count == b.count && a.noise_seed == b.noise_seed;
    }
};

// One sampled challenging transformation.
struct TransformBundle {
    AffineTransform affine;
    ColorTransform color;
    std::optional<SuperpixelNoise> noise;
    Extent output;
    bool crop = false;
    bool geometric = false;
    bool color_jitter = false;
    std::uint64_t seed = 0;

    static TransformBundle identity(Extent extent);

    KeyValues to_record() const;
    static TransformBundle from_record(const KeyValues& kv);

    friend bool operator==(const TransformBundle&, const TransformBundle&) = default;
};

// Sampling ranges and per-kind probabilities for sample_transform.
struct TransformPolicy {
    double p_crop = 0.9;
    double p_noise = 0.7;
    double p_geometric = 0.3;
    double p_color = 0.5;

    double crop_min = 0.75;   // fraction of each dimension kept
    double crop_max = 0.9;
    std::optional<Extent> fixed_crop;

    double scale_min = 0.9;   // L = s R(theta); s > 1 shows more content, downsampled
    double scale_max = 1.2;
    double rotation_max = 0.087;  // radians, ~5 degrees
    double translation_max = 4.0;

    double contrast_jitter = 0.3;
    double brightness_jitter = 0.15;
    double saturation_jitter = 0.3;
    double hue_max = 0.2;
    double gamma_jitter = 0.3;

    int superpixel_segments = 200;
    double superpixel_compactness = 0.1;
    int noise_min = 1;
    int noise_max = 5;

    static TransformPolicy kitti_preset();   // fixed 320x896 crop
    static TransformPolicy sintel_preset();  // fixed 384x768 crop
    static TransformPolicy crop_only();

    void validate() const;
};

// Deterministic given (policy, input extent, seed); always contains at
// least one of crop / noise / geometric / color (draws with no component
// are rejected and redrawn).
TransformBundle sample_transform(const TransformPolicy& policy, Extent input, std::uint64_t seed);

// I~(p~) = I(L p~ + t) by bilinear sampling.
Image affine_apply_image(const Image& img, const AffineTransform& a, Extent out);

struct TransformedFlow {
    FlowField flow;
    MaskMap sample_valid;
};

// w^T(p~) = L^-1 w(L p~ + t); sample_valid flags in-bounds taps.
TransformedFlow transform_flow(const FlowField& flow, const AffineTransform& a, Extent out);

// Nearest-neighbor resampling; out-of-bounds taps get out_of_bounds_value.
MaskMap transform_mask(const MaskMap& mask, const AffineTransform& a, Extent out, double out_of_bounds_value);

// gamma, contrast about 0.5, brightness, then saturation / hue in YIQ,
// clamped to [0,1]. Geometry is untouched.
Image color_apply(const Image& img, const ColorTransform& c);

// O' = min(max(O~ - O^T, 0), 1).
MaskMap hallucinated_occlusion(const MaskMap& student_occ, const MaskMap& teacher_occ_t);

struct TransformedPair {
    Image i1;
    Image i2;
    MaskMap noise_mask;  // student frame, second image
};

// Applies affine and color to both frames, then superpixel noise to the
// second one. Realizes bundle.noise (label map and ids) in place.
TransformedPair apply_bundle(TransformBundle& bundle, const Image& i1, const Image& i2);

}  // namespace distillflow

#pragma once

#include <string>
#include <utility>

#include "distillflow/errors.hpp"
#include "distillflow/image.hpp"

namespace distillflow {

// Fixed-channel raster backed by an Image. Subclasses give the channels a
// role (flow components, mask value, disparity).
template <int Channels>
class Raster {
public:
    Raster() = default;
    Raster(int height, int width, double fill = 0.0) : img_(height, width, Channels, fill) {}
    explicit Raster(Image img) : img_(std::move(img)) {
        if (img_.channels() != Channels) throw ShapeError("raster: wrong channel count");
    }

    int height() const { return img_.height(); }
    int width() const { return img_.width(); }
    std::size_t pixel_count() const { return img_.pixel_count(); }
    bool empty() const { return img_.empty(); }

    double& operator()(int y, int x, int c = 0) { return img_(y, x, c); }
    double operator()(int y, int x, int c = 0) const { return img_(y, x, c); }

    std::span<double> data() { return img_.data(); }
    std::span<const double> data() const { return img_.data(); }

    const Image& as_image() const { return img_; }

    template <int Other>
    bool same_extent(const Raster<Other>& other) const {
        return height() == other.height() && width() == other.width();
    }
    bool same_extent(const Image& other) const { return img_.same_extent(other.height(), other.width()); }
    bool all_finite() const { return img_.all_finite(); }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    Image img_;
};

// Per-pixel displacement (u, v) in pixels.
class FlowField : public Raster<2> {
public:
    using Raster<2>::Raster;

    double& u(int y, int x) { return (*this)(y, x, 0); }
    double& v(int y, int x) { return (*this)(y, x, 1); }
    double u(int y, int x) const { return (*this)(y, x, 0); }
    double v(int y, int x) const { return (*this)(y, x, 1); }

    static FlowField constant(int height, int width, double u, double v);
};

// Per-pixel value in [0,1]. The role decides the meaning of 1: occluded
// (occlusion maps), confident (confidence maps) or labeled (validity).
// Binary masks are produced as exact 0/1; resampled masks are re-binarized
// with the rule value >= 0.5.
class MaskMap : public Raster<1> {
public:
    using Raster<1>::Raster;

    double sum() const;
    bool is_binary() const;
    bool in_unit_range() const;
};

// Single-channel real raster without a range restriction (disparities,
// per-pixel errors).
class ScalarMap : public Raster<1> {
public:
    using Raster<1>::Raster;
};

struct WarpResult {
    Image warped;
    MaskMap valid;
};

// warped(p) = target(p + flow(p)) by bilinear sampling; valid(p) = 1 iff
// the sample location was inside the image.
WarpResult warp_image(const Image& target, const FlowField& flow);

// Reversed forward flow: w_b sampled at p + w_f(p), border-clamped.
FlowField reverse_flow(const FlowField& w_f, const FlowField& w_b);

inline bool in_pixel_footprint(double x, double y, int height, int width) {
    return x >= -0.5 && x <= width - 0.5 && y >= -0.5 && y <= height - 0.5;
}

inline constexpr double kDefaultAlpha1 = 0.01;
inline constexpr double kDefaultAlpha2 = 0.5;

// Forward-backward consistency check for the direction of w_f. A pixel is
// occluded (1) when |w_f + w_hat|^2 >= alpha1 (|w_f|^2 + |w_hat|^2) + alpha2,
// with w_hat = reverse_flow(w_f, w_b), or when p + w_f(p) leaves the image
// footprint [-0.5, W-0.5] x [-0.5, H-0.5].
MaskMap occlusion_from_consistency(const FlowField& w_f, const FlowField& w_b,
                                   double alpha1 = kDefaultAlpha1, double alpha2 = kDefaultAlpha2);

struct OcclusionPair {
    MaskMap forward;
    MaskMap backward;
};

OcclusionPair occlusion_maps(const FlowField& w_f, const FlowField& w_b,
                             double alpha1 = kDefaultAlpha1, double alpha2 = kDefaultAlpha2);

// M = 1 - O.
MaskMap confidence_map(const MaskMap& occ);

// Disparity extracted from flow with the left->right stereo convention:
// d = max(0, -u). The vertical component is dropped.
struct DisparityMap {
    ScalarMap values;
    std::string convention = "d=max(0,-u) left-to-right";
};

DisparityMap flow_to_disparity(const FlowField& flow);

// Area resampling with vector components rescaled by the per-axis extent
// ratio, so a flow stays a displacement in the new pixel grid.
FlowField resize_flow(const FlowField& flow, int height, int width);

// Area resampling followed by the >= 0.5 binarization rule.
MaskMap resize_mask(const MaskMap& mask, int height, int width);

// Pointwise |a - b| endpoint error.
ScalarMap endpoint_error_map(const FlowField& flow, const FlowField& gt);

}  // namespace distillflow

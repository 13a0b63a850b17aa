#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace distillflow {

// Dense row-major raster of real-valued channels, nominal range [0,1].
// Holds both input frames and their transformed / warped versions.
class Image {
public:
    Image() = default;
    Image(int height, int width, int channels, double fill = 0.0);

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }
    bool empty() const { return data_.empty(); }

    double& operator()(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
    double operator()(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool same_shape(const Image& other) const {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }
    bool same_extent(int height, int width) const { return height_ == height && width_ == width; }
    bool all_finite() const;

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t index(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

// Per-pixel soft census descriptors. dim == (2r+1)^2 - 1, entries in [-1,1].
class DescriptorImage {
public:
    DescriptorImage() = default;
    DescriptorImage(int height, int width, int radius);

    int height() const { return features_.height(); }
    int width() const { return features_.width(); }
    int dim() const { return features_.channels(); }
    int radius() const { return radius_; }

    double& operator()(int y, int x, int k) { return features_(y, x, k); }
    double operator()(int y, int x, int k) const { return features_(y, x, k); }

    // Descriptor entries viewed as a multi-channel image, so they can be
    // warped and sampled like any other raster.
    const Image& as_image() const { return features_; }

private:
    Image features_;
    int radius_ = 0;
};

struct BilinearSample {
    std::vector<double> values;
    bool in_bounds = false;
};

// Bilinear interpolation at (x, y) with clamp-to-border. in_bounds is false
// when the point lies outside [0,W-1]x[0,H-1]. Throws InvalidArgument on NaN.
BilinearSample bilinear_sample(const Image& img, double x, double y);

// Allocation-free variant used in inner loops. `values` must hold
// img.channels() entries. Optional gradients receive d(values)/dx and
// d(values)/dy; components along a clamped axis are zero.
bool sample_into(const Image& img, double x, double y, std::span<double> values,
                 std::span<double> grad_x = {}, std::span<double> grad_y = {});

struct ImageGradient {
    Image gx;
    Image gy;
};

// Forward differences; zero on the last column (gx) and last row (gy).
ImageGradient image_gradient(const Image& img);

// ITU-R 601 luminance. Single-channel input is returned unchanged.
Image luminance(const Image& img);

// Soft census transform on the luminance of `img`: entry k of pixel p is
// s((L(q_k) - L(p)) / softness) for every neighbor q_k != p in the
// (2r+1)^2 window, s(t) = t / sqrt(1 + t^2). Out-of-image neighbors use
// the border-clamped value.
DescriptorImage soft_census(const Image& img, int radius = 1, double softness = 0.02);

// The squashing function used by soft_census, and its derivative.
double census_squash(double t);
double census_squash_derivative(double t);

// Per-channel structural dissimilarity (1 - SSIM) / 2 over an odd
// window with replicate padding and the usual constants C1 = 0.01^2,
// C2 = 0.03^2.
Image ssim_map(const Image& a, const Image& b, int window = 3);

// Vector-Jacobian product of ssim_map with respect to `b`: given
// dL/dD for every pixel and channel of the dissimilarity map, returns
// dL/db with the same shape.
Image ssim_map_vjp_b(const Image& a, const Image& b, const Image& grad_dissimilarity,
                     int window = 3);

// Area-weighted resampling to an arbitrary extent; used to build pyramids.
Image resize_area(const Image& img, int height, int width);

Image gaussian_blur(const Image& img, double sigma);

}  // namespace distillflow

#include "distillflow/image.hpp"

#include <algorithm>
#include <cmath>

#include "distillflow/errors.hpp"

namespace distillflow {

namespace {

constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

}  // namespace

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
    if (height < 1 || width < 1 || channels < 1) {
        throw InvalidArgument("image dimensions must be positive");
    }
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

bool Image::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

DescriptorImage::DescriptorImage(int height, int width, int radius)
    : features_(height, width, (2 * radius + 1) * (2 * radius + 1) - 1), radius_(radius) {}

bool sample_into(const Image& img, double x, double y, std::span<double> values,
                 std::span<double> grad_x, std::span<double> grad_y) {
    if (std::isnan(x) || std::isnan(y)) {
        throw InvalidArgument("bilinear_sample: NaN coordinate");
    }
    const int w = img.width();
    const int h = img.height();
    const bool in_x = x >= 0.0 && x <= w - 1;
    const bool in_y = y >= 0.0 && y <= h - 1;
    const double xc = std::clamp(x, 0.0, static_cast<double>(w - 1));
    const double yc = std::clamp(y, 0.0, static_cast<double>(h - 1));
    int x0 = std::min(static_cast<int>(std::floor(xc)), w - 2);
    int y0 = std::min(static_cast<int>(std::floor(yc)), h - 2);
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    const double fx = xc - x0;
    const double fy = yc - y0;
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);

    const int channels = img.channels();
    const bool want_grad = !grad_x.empty();
    for (int c = 0; c < channels; ++c) {
        const double v00 = img(y0, x0, c);
        const double v01 = img(y0, x1, c);
        const double v10 = img(y1, x0, c);
        const double v11 = img(y1, x1, c);
        // Weighted form: exact at fx, fy in {0, 1}.
        const double top = (1.0 - fx) * v00 + fx * v01;
        const double bottom = (1.0 - fx) * v10 + fx * v11;
        values[c] = (1.0 - fy) * top + fy * bottom;
        if (want_grad) {
            grad_x[c] = in_x ? (1.0 - fy) * (v01 - v00) + fy * (v11 - v10) : 0.0;
            grad_y[c] = in_y ? bottom - top : 0.0;
        }
    }
    return in_x && in_y;
}

BilinearSample bilinear_sample(const Image& img, double x, double y) {
    BilinearSample out;
    out.values.resize(img.channels());
    out.in_bounds = sample_into(img, x, y, out.values);
    return out;
}

ImageGradient image_gradient(const Image& img) {
    const int h = img.height();
    const int w = img.width();
    const int channels = img.channels();
    ImageGradient g{Image(h, w, channels), Image(h, w, channels)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < channels; ++c) {
                if (x + 1 < w) g.gx(y, x, c) = img(y, x + 1, c) - img(y, x, c);
                if (y + 1 < h) g.gy(y, x, c) = img(y + 1, x, c) - img(y, x, c);
            }
        }
    }
    return g;
}

Image luminance(const Image& img) {
    if (img.channels() == 1) return img;
    if (img.channels() != 3) throw InvalidArgument("luminance: expected 1 or 3 channels");
    Image out(img.height(), img.width(), 1);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            out(y, x) = 0.299 * img(y, x, 0) + 0.587 * img(y, x, 1) + 0.114 * img(y, x, 2);
        }
    }
    return out;
}

double census_squash(double t) { return t / std::sqrt(1.0 + t * t); }

double census_squash_derivative(double t) {
    const double s = 1.0 + t * t;
    return 1.0 / (s * std::sqrt(s));
}

DescriptorImage soft_census(const Image& img, int radius, double softness) {
    if (radius < 1) throw InvalidArgument("soft_census: radius must be >= 1");
    if (!(softness > 0.0)) throw InvalidArgument("soft_census: softness must be > 0");
    const Image lum = luminance(img);
    const int h = lum.height();
    const int w = lum.width();
    DescriptorImage out(h, w, radius);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double center = lum(y, x);
            int k = 0;
            for (int dy = -radius; dy <= radius; ++dy) {
                for (int dx = -radius; dx <= radius; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const double q = lum(clamp_index(y + dy, h), clamp_index(x + dx, w));
                    out(y, x, k++) = census_squash((q - center) / softness);
                }
            }
        }
    }
    return out;
}

namespace {

// Windowed first and second moments of a and b, one channel at a time.
struct SsimStats {
    double mu_a, mu_b, e_aa, e_bb, e_ab;
};

SsimStats window_stats(const Image& a, const Image& b, int y, int x, int c, int half) {
    const int h = a.height();
    const int w = a.width();
    SsimStats s{0, 0, 0, 0, 0};
    for (int dy = -half; dy <= half; ++dy) {
        const int yy = clamp_index(y + dy, h);
        for (int dx = -half; dx <= half; ++dx) {
            const int xx = clamp_index(x + dx, w);
            const double va = a(yy, xx, c);
            const double vb = b(yy, xx, c);
            s.mu_a += va;
            s.mu_b += vb;
            s.e_aa += va * va;
            s.e_bb += vb * vb;
            s.e_ab += va * vb;
        }
    }
    const double n = (2.0 * half + 1) * (2.0 * half + 1);
    s.mu_a /= n;
    s.mu_b /= n;
    s.e_aa /= n;
    s.e_bb /= n;
    s.e_ab /= n;
    return s;
}

void check_ssim_args(const Image& a, const Image& b, int window) {
    if (!a.same_shape(b)) throw ShapeError("ssim_map: shape mismatch");
    if (window < 1 || window % 2 == 0) throw InvalidArgument("ssim_map: window must be odd");
}

}  // namespace

Image ssim_map(const Image& a, const Image& b, int window) {
    check_ssim_args(a, b, window);
    const int half = window / 2;
    Image out(a.height(), a.width(), a.channels());
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            for (int c = 0; c < a.channels(); ++c) {
                const SsimStats s = window_stats(a, b, y, x, c, half);
                const double var_a = s.e_aa - s.mu_a * s.mu_a;
                const double var_b = s.e_bb - s.mu_b * s.mu_b;
                const double cov = s.e_ab - s.mu_a * s.mu_b;
                const double num = (2 * s.mu_a * s.mu_b + kSsimC1) * (2 * cov + kSsimC2);
                const double den = (s.mu_a * s.mu_a + s.mu_b * s.mu_b + kSsimC1) *
                                   (var_a + var_b + kSsimC2);
                out(y, x, c) = std::clamp((1.0 - num / den) / 2.0, 0.0, 1.0);
            }
        }
    }
    return out;
}

Image ssim_map_vjp_b(const Image& a, const Image& b, const Image& grad_dissimilarity,
                     int window) {
    check_ssim_args(a, b, window);
    if (!grad_dissimilarity.same_shape(a)) throw ShapeError("ssim_map_vjp_b: shape mismatch");
    const int h = a.height();
    const int w = a.width();
    const int half = window / 2;
    const double n = static_cast<double>(window) * window;
    Image grad_b(h, w, a.channels());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < a.channels(); ++c) {
                const double g = grad_dissimilarity(y, x, c);
                if (g == 0.0) continue;
                const SsimStats s = window_stats(a, b, y, x, c, half);
                const double var_a = s.e_aa - s.mu_a * s.mu_a;
                const double var_b = s.e_bb - s.mu_b * s.mu_b;
                const double cov = s.e_ab - s.mu_a * s.mu_b;
                const double l_num = 2 * s.mu_a * s.mu_b + kSsimC1;
                const double l_den = s.mu_a * s.mu_a + s.mu_b * s.mu_b + kSsimC1;
                const double c_num = 2 * cov + kSsimC2;
                const double c_den = var_a + var_b + kSsimC2;
                const double ssim = (l_num * c_num) / (l_den * c_den);
                const double d = (1.0 - ssim) / 2.0;
                if (d < 0.0 || d > 1.0) continue;  // clamped, flat

                // SSIM as a function of (mu_b, e_bb, e_ab); var_b and cov
                // depend on mu_b too.
                const double dl_dmub = (2 * s.mu_a * l_den - l_num * 2 * s.mu_b) / (l_den * l_den);
                const double l = l_num / l_den;
                const double cs = c_num / c_den;
                // d(cs)/d(cov) and d(cs)/d(var_b)
                const double dcs_dcov = 2.0 / c_den;
                const double dcs_dvarb = -c_num / (c_den * c_den);
                // cov = e_ab - mu_a mu_b ; var_b = e_bb - mu_b^2
                const double dssim_dmub =
                    dl_dmub * cs + l * (dcs_dcov * (-s.mu_a) + dcs_dvarb * (-2 * s.mu_b));
                const double dssim_debb = l * dcs_dvarb;
                const double dssim_deab = l * dcs_dcov;
                const double scale = -0.5 * g / n;

                for (int dy = -half; dy <= half; ++dy) {
                    const int yy = clamp_index(y + dy, h);
                    for (int dx = -half; dx <= half; ++dx) {
                        const int xx = clamp_index(x + dx, w);
                        const double vb = b(yy, xx, c);
                        const double va = a(yy, xx, c);
                        grad_b(yy, xx, c) +=
                            scale * (dssim_dmub + dssim_debb * 2 * vb + dssim_deab * va);
                    }
                }
            }
        }
    }
    return grad_b;
}

Image resize_area(const Image& img, int height, int width) {
    if (height < 1 || width < 1) throw InvalidArgument("resize_area: empty target");
    const int src_h = img.height();
    const int src_w = img.width();
    const int channels = img.channels();
    const double sy = static_cast<double>(src_h) / height;
    const double sx = static_cast<double>(src_w) / width;
    Image out(height, width, channels);

    // Separable: overlap weights of each output cell with source cells.
    auto weights = [](int out_n, double scale, int src_n) {
        std::vector<std::vector<std::pair<int, double>>> taps(out_n);
        for (int i = 0; i < out_n; ++i) {
            const double lo = i * scale;
            const double hi = (i + 1) * scale;
            if (scale <= 1.0) {
                // Upsampling: fall back to linear interpolation at cell centers.
                const double center = (i + 0.5) * scale - 0.5;
                const double cc = std::clamp(center, 0.0, static_cast<double>(src_n - 1));
                const int j0 = std::min(static_cast<int>(cc), src_n - 1);
                const int j1 = std::min(j0 + 1, src_n - 1);
                const double f = cc - j0;
                taps[i].push_back({j0, 1.0 - f});
                if (j1 != j0) taps[i].push_back({j1, f});
                continue;
            }
            for (int j = static_cast<int>(std::floor(lo)); j < static_cast<int>(std::ceil(hi)); ++j) {
                const double overlap = std::min(hi, j + 1.0) - std::max(lo, static_cast<double>(j));
                if (overlap > 0) taps[i].push_back({std::min(j, src_n - 1), overlap / scale});
            }
        }
        return taps;
    };
    const auto ty = weights(height, sy, src_h);
    const auto tx = weights(width, sx, src_w);

    Image rows(height, src_w, channels);
    for (int y = 0; y < height; ++y) {
        for (auto [j, wgt] : ty[y]) {
            for (int x = 0; x < src_w; ++x) {
                for (int c = 0; c < channels; ++c) rows(y, x, c) += wgt * img(j, x, c);
            }
        }
    }
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (auto [j, wgt] : tx[x]) {
                for (int c = 0; c < channels; ++c) out(y, x, c) += wgt * rows(y, j, c);
            }
        }
    }
    return out;
}

Image gaussian_blur(const Image& img, double sigma) {
    if (!(sigma > 0.0)) return img;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        total += kernel[i + radius];
    }
    for (double& k : kernel) k /= total;

    const int h = img.height();
    const int w = img.width();
    const int channels = img.channels();
    Image tmp(h, w, channels);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int i = -radius; i <= radius; ++i) {
                const int xx = clamp_index(x + i, w);
                for (int c = 0; c < channels; ++c) tmp(y, x, c) += kernel[i + radius] * img(y, xx, c);
            }
        }
    }
    Image out(h, w, channels);
    for (int y = 0; y < h; ++y) {
        for (int i = -radius; i <= radius; ++i) {
            const int yy = clamp_index(y + i, h);
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < channels; ++c) out(y, x, c) += kernel[i + radius] * tmp(yy, x, c);
            }
        }
    }
    return out;
}

}  // namespace distillflow

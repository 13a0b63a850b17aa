#include "distillflow/flow_viz.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace distillflow {

namespace {

// RY, YG, GC, CB, BM, MR segment lengths of the Middlebury wheel.
constexpr std::array<int, 6> kSegments = {15, 6, 4, 11, 13, 6};
constexpr int kWheelSize = 15 + 6 + 4 + 11 + 13 + 6;

using Rgb = std::array<double, 3>;

std::array<Rgb, kWheelSize> make_wheel() {
    std::array<Rgb, kWheelSize> wheel{};
    int k = 0;
    auto ramp = [&](int n, auto fn) {
        for (int i = 0; i < n; ++i) wheel[k++] = fn(static_cast<double>(i) / n);
    };
    ramp(kSegments[0], [](double t) { return Rgb{1.0, t, 0.0}; });
    ramp(kSegments[1], [](double t) { return Rgb{1.0 - t, 1.0, 0.0}; });
    ramp(kSegments[2], [](double t) { return Rgb{0.0, 1.0, t}; });
    ramp(kSegments[3], [](double t) { return Rgb{0.0, 1.0 - t, 1.0}; });
    ramp(kSegments[4], [](double t) { return Rgb{t, 0.0, 1.0}; });
    ramp(kSegments[5], [](double t) { return Rgb{1.0, 0.0, 1.0 - t}; });
    return wheel;
}

const std::array<Rgb, kWheelSize>& wheel() {
    static const auto w = make_wheel();
    return w;
}

}  // namespace

double color_wheel_position(double u, double v) {
    const double angle = std::atan2(-v, -u) / std::numbers::pi;  // [-1, 1]
    double pos = (angle + 1.0) / 2.0 * (kWheelSize - 1);
    return std::clamp(pos, 0.0, static_cast<double>(kWheelSize - 1));
}

Image flow_to_color(const FlowField& flow, std::optional<double> max_magnitude) {
    double max_mag = 1.0;
    if (max_magnitude) {
        if (!(*max_magnitude > 0.0)) throw InvalidArgument("flow_to_color: max_magnitude must be > 0");
        max_mag = *max_magnitude;
    } else {
        std::vector<double> mags;
        mags.reserve(flow.pixel_count());
        for (int y = 0; y < flow.height(); ++y) {
            for (int x = 0; x < flow.width(); ++x) mags.push_back(std::hypot(flow.u(y, x), flow.v(y, x)));
        }
        const auto nth = mags.begin() + static_cast<std::ptrdiff_t>(0.99 * (mags.size() - 1));
        std::nth_element(mags.begin(), nth, mags.end());
        if (*nth > 0.0) max_mag = *nth;
    }

    const auto& w = wheel();
    Image out(flow.height(), flow.width(), 3);
    for (int y = 0; y < flow.height(); ++y) {
        for (int x = 0; x < flow.width(); ++x) {
            const double u = flow.u(y, x);
            const double v = flow.v(y, x);
            const double rad = std::min(std::hypot(u, v) / max_mag, 1.0);
            const double pos = color_wheel_position(u, v);
            const int k0 = static_cast<int>(std::floor(pos));
            const int k1 = (k0 + 1) % kWheelSize;
            const double f = pos - k0;
            for (int c = 0; c < 3; ++c) {
                const double col = (1.0 - f) * w[k0][c] + f * w[k1][c];
                out(y, x, c) = 1.0 - rad * (1.0 - col);
            }
        }
    }
    return out;
}

Image error_to_color(const ScalarMap& error, double max_error) {
    Image out(error.height(), error.width(), 3);
    for (int y = 0; y < error.height(); ++y) {
        for (int x = 0; x < error.width(); ++x) {
            const double t = std::clamp(error(y, x) / max_error, 0.0, 1.0);
            // black -> red -> yellow -> white
            out(y, x, 0) = std::min(1.0, 3.0 * t);
            out(y, x, 1) = std::clamp(3.0 * t - 1.0, 0.0, 1.0);
            out(y, x, 2) = std::clamp(3.0 * t - 2.0, 0.0, 1.0);
        }
    }
    return out;
}

}  // namespace distillflow

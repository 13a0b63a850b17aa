#include "distillflow/flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace distillflow {

FlowField FlowField::constant(int height, int width, double u, double v) {
    FlowField f(height, width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            f.u(y, x) = u;
            f.v(y, x) = v;
        }
    }
    return f;
}

double MaskMap::sum() const {
    double total = 0.0;
    for (double v : data()) total += v;
    return total;
}

bool MaskMap::is_binary() const {
    return std::all_of(data().begin(), data().end(), [](double v) { return v == 0.0 || v == 1.0; });
}

bool MaskMap::in_unit_range() const {
    return std::all_of(data().begin(), data().end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

WarpResult warp_image(const Image& target, const FlowField& flow) {
    if (!flow.same_extent(target)) throw ShapeError("warp_image: flow and image extents differ");
    WarpResult out{Image(target.height(), target.width(), target.channels()),
                   MaskMap(target.height(), target.width())};
    std::vector<double> values(target.channels());
    for (int y = 0; y < target.height(); ++y) {
        for (int x = 0; x < target.width(); ++x) {
            const bool inside = sample_into(target, x + flow.u(y, x), y + flow.v(y, x), values);
            for (int c = 0; c < target.channels(); ++c) out.warped(y, x, c) = values[c];
            out.valid(y, x) = inside ? 1.0 : 0.0;
        }
    }
    return out;
}

FlowField reverse_flow(const FlowField& w_f, const FlowField& w_b) {
    if (!w_f.same_extent(w_b)) throw ShapeError("reverse_flow: extents differ");
    FlowField out(w_f.height(), w_f.width());
    std::array<double, 2> s{};
    for (int y = 0; y < w_f.height(); ++y) {
        for (int x = 0; x < w_f.width(); ++x) {
            sample_into(w_b.as_image(), x + w_f.u(y, x), y + w_f.v(y, x), s);
            out.u(y, x) = s[0];
            out.v(y, x) = s[1];
        }
    }
    return out;
}

MaskMap occlusion_from_consistency(const FlowField& w_f, const FlowField& w_b, double alpha1,
                                   double alpha2) {
    if (!w_f.same_extent(w_b)) throw ShapeError("occlusion_from_consistency: extents differ");
    if (!(alpha1 >= 0.0) || !(alpha2 > 0.0)) {
        throw InvalidArgument("occlusion_from_consistency: need alpha1 >= 0 and alpha2 > 0");
    }
    MaskMap occ(w_f.height(), w_f.width());
    std::array<double, 2> hat{};
    for (int y = 0; y < w_f.height(); ++y) {
        for (int x = 0; x < w_f.width(); ++x) {
            const double u = w_f.u(y, x);
            const double v = w_f.v(y, x);
            sample_into(w_b.as_image(), x + u, y + v, hat);
            const bool inside = in_pixel_footprint(x + u, y + v, w_f.height(), w_f.width());
            const double du = u + hat[0];
            const double dv = v + hat[1];
            const double lhs = du * du + dv * dv;
            const double rhs = alpha1 * (u * u + v * v + hat[0] * hat[0] + hat[1] * hat[1]) + alpha2;
            occ(y, x) = (!inside || lhs >= rhs) ? 1.0 : 0.0;
        }
    }
    return occ;
}

OcclusionPair occlusion_maps(const FlowField& w_f, const FlowField& w_b, double alpha1,
                             double alpha2) {
    return {occlusion_from_consistency(w_f, w_b, alpha1, alpha2),
            occlusion_from_consistency(w_b, w_f, alpha1, alpha2)};
}

MaskMap confidence_map(const MaskMap& occ) {
    MaskMap m(occ.height(), occ.width());
    auto out = m.data();
    auto in = occ.data();
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = 1.0 - in[i];
    return m;
}

DisparityMap flow_to_disparity(const FlowField& flow) {
    DisparityMap d{ScalarMap(flow.height(), flow.width())};
    for (int y = 0; y < flow.height(); ++y) {
        for (int x = 0; x < flow.width(); ++x) d.values(y, x) = std::max(0.0, -flow.u(y, x));
    }
    return d;
}

FlowField resize_flow(const FlowField& flow, int height, int width) {
    FlowField out(resize_area(flow.as_image(), height, width));
    const double su = static_cast<double>(width) / flow.width();
    const double sv = static_cast<double>(height) / flow.height();
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            out.u(y, x) *= su;
            out.v(y, x) *= sv;
        }
    }
    return out;
}

MaskMap resize_mask(const MaskMap& mask, int height, int width) {
    MaskMap out(resize_area(mask.as_image(), height, width));
    for (double& v : out.data()) v = v >= 0.5 ? 1.0 : 0.0;
    return out;
}

ScalarMap endpoint_error_map(const FlowField& flow, const FlowField& gt) {
    if (!flow.same_extent(gt)) throw ShapeError("endpoint_error_map: extents differ");
    ScalarMap err(flow.height(), flow.width());
    for (int y = 0; y < flow.height(); ++y) {
        for (int x = 0; x < flow.width(); ++x) {
            err(y, x) = std::hypot(flow.u(y, x) - gt.u(y, x), flow.v(y, x) - gt.v(y, x));
        }
    }
    return err;
}

}  // namespace distillflow

#include "distillflow/transforms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace distillflow {

AffineTransform AffineTransform::similarity(double scale, double angle, double tx, double ty) {
    const double c = scale * std::cos(angle);
    const double s = scale * std::sin(angle);
    return {c, -s, s, c, tx, ty};
}

bool AffineTransform::is_identity() const { return *this == AffineTransform{}; }

bool AffineTransform::is_integer_translation() const {
    return a11 == 1.0 && a12 == 0.0 && a21 == 0.0 && a22 == 1.0 && tx == std::round(tx) &&
           ty == std::round(ty);
}

AffineTransform AffineTransform::inverse() const {
    const double det = determinant();
    if (det == 0.0 || !std::isfinite(det)) throw InvalidArgument("affine transform is not invertible");
    AffineTransform inv;
    inv.a11 = a22 / det;
    inv.a12 = -a12 / det;
    inv.a21 = -a21 / det;
    inv.a22 = a11 / det;
    inv.tx = -(inv.a11 * tx + inv.a12 * ty);
    inv.ty = -(inv.a21 * tx + inv.a22 * ty);
    return inv;
}

void AffineTransform::inverse_linear(double u, double v, double& out_u, double& out_v) const {
    const double det = determinant();
    if (det == 0.0) throw InvalidArgument("affine transform is not invertible");
    out_u = (a22 * u - a12 * v) / det;
    out_v = (-a21 * u + a11 * v) / det;
}

bool ColorTransform::is_identity() const { return *this == ColorTransform{}; }

TransformBundle TransformBundle::identity(Extent extent) {
    TransformBundle b;
    b.output = extent;
    return b;
}

namespace {

void require_invertible(const AffineTransform& a) {
    const double det = a.determinant();
    if (det == 0.0 || !std::isfinite(det)) throw InvalidArgument("affine transform is not invertible");
}

void require_output(Extent out) {
    if (out.height < 2 || out.width < 2) throw InvalidArgument("transform output must be at least 2x2");
}

}  // namespace

Image affine_apply_image(const Image& img, const AffineTransform& a, Extent out) {
    require_invertible(a);
    require_output(out);
    Image result(out.height, out.width, img.channels());
    std::vector<double> values(img.channels());
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            sample_into(img, a.apply_x(x, y), a.apply_y(x, y), values);
            for (int c = 0; c < img.channels(); ++c) result(y, x, c) = values[c];
        }
    }
    return result;
}

TransformedFlow transform_flow(const FlowField& flow, const AffineTransform& a, Extent out) {
    require_invertible(a);
    require_output(out);
    TransformedFlow r{FlowField(out.height, out.width), MaskMap(out.height, out.width)};
    std::array<double, 2> s{};
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const bool inside = sample_into(flow.as_image(), a.apply_x(x, y), a.apply_y(x, y), s);
            a.inverse_linear(s[0], s[1], r.flow.u(y, x), r.flow.v(y, x));
            r.sample_valid(y, x) = inside ? 1.0 : 0.0;
        }
    }
    return r;
}

MaskMap transform_mask(const MaskMap& mask, const AffineTransform& a, Extent out, double out_of_bounds_value) {
    require_invertible(a);
    require_output(out);
    MaskMap r(out.height, out.width);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const double sx = a.apply_x(x, y);
            const double sy = a.apply_y(x, y);
            const bool inside = sx >= 0.0 && sx <= mask.width() - 1 && sy >= 0.0 && sy <= mask.height() - 1;
            r(y, x) = inside ? mask(static_cast<int>(std::lround(sy)), static_cast<int>(std::lround(sx)))
                             : out_of_bounds_value;
        }
    }
    return r;
}

Image color_apply(const Image& img, const ColorTransform& c) {
    if (!(c.contrast > 0.0) || !(c.gamma > 0.0)) throw InvalidArgument("color transform: contrast and gamma must be > 0");
    Image out = img;
    for (double& v : out.data()) {
        if (c.gamma != 1.0) v = std::pow(std::max(v, 0.0), c.gamma);
        if (c.contrast != 1.0 || c.brightness != 0.0) v = 0.5 + c.contrast * (v - 0.5) + c.brightness;
    }
    if (img.channels() == 3 && (c.saturation != 1.0 || c.hue_shift != 0.0)) {
        const double cs = std::cos(c.hue_shift) * c.saturation;
        const double sn = std::sin(c.hue_shift) * c.saturation;
        for (int y = 0; y < out.height(); ++y) {
            for (int x = 0; x < out.width(); ++x) {
                const double r = out(y, x, 0), g = out(y, x, 1), b = out(y, x, 2);
                const double luma = 0.299 * r + 0.587 * g + 0.114 * b;
                const double i = 0.596 * r - 0.274 * g - 0.322 * b;
                const double q = 0.211 * r - 0.523 * g + 0.312 * b;
                const double i2 = cs * i - sn * q;
                const double q2 = sn * i + cs * q;
                out(y, x, 0) = luma + 0.956 * i2 + 0.621 * q2;
                out(y, x, 1) = luma - 0.272 * i2 - 0.647 * q2;
                out(y, x, 2) = luma - 1.106 * i2 + 1.703 * q2;
            }
        }
    }
    for (double& v : out.data()) v = std::clamp(v, 0.0, 1.0);
    return out;
}

MaskMap hallucinated_occlusion(const MaskMap& student_occ, const MaskMap& teacher_occ_t) {
    if (!student_occ.same_extent(teacher_occ_t)) throw ShapeError("hallucinated_occlusion: extents differ");
    MaskMap out(student_occ.height(), student_occ.width());
    auto o = out.data();
    auto s = student_occ.data();
    auto t = teacher_occ_t.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::min(std::max(s[i] - t[i], 0.0), 1.0);
    return out;
}

TransformPolicy TransformPolicy::kitti_preset() {
    TransformPolicy p;
    p.fixed_crop = Extent{320, 896};
    return p;
}

TransformPolicy TransformPolicy::sintel_preset() {
    TransformPolicy p;
    p.fixed_crop = Extent{384, 768};
    return p;
}

TransformPolicy TransformPolicy::crop_only() {
    TransformPolicy p;
    p.p_crop = 1.0;
    p.p_noise = 0.0;
    p.p_geometric = 0.0;
    p.p_color = 0.0;
    return p;
}

void TransformPolicy::validate() const {
    for (double p : {p_crop, p_noise, p_geometric, p_color}) {
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("transform policy: probabilities must be in [0,1]");
    }
    if (p_crop + p_noise + p_geometric + p_color <= 0.0) throw InvalidArgument("transform policy is empty");
    if (!(crop_min > 0.0 && crop_min <= crop_max && crop_max <= 1.0)) {
        throw InvalidArgument("transform policy: need 0 < crop_min <= crop_max <= 1");
    }
    if (!(scale_min > 0.0 && scale_min <= scale_max)) throw InvalidArgument("transform policy: bad scale range");
    if (noise_min < 0 || noise_min > noise_max) throw InvalidArgument("transform policy: bad noise count range");
    if (superpixel_segments < 2) throw InvalidArgument("transform policy: need >= 2 superpixels");
}

TransformBundle sample_transform(const TransformPolicy& policy, Extent input, std::uint64_t seed) {
    policy.validate();
    require_output(input);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    TransformBundle b;
    b.seed = seed;
    do {
        b.crop = unit(rng) < policy.p_crop;
        b.noise.reset();
        if (unit(rng) < policy.p_noise) b.noise.emplace();
        b.geometric = unit(rng) < policy.p_geometric;
        b.color_jitter = unit(rng) < policy.p_color;
    } while (!b.crop && !b.noise && !b.geometric && !b.color_jitter);

    b.output = input;
    if (b.crop) {
        if (policy.fixed_crop) {
            b.output = {std::min(policy.fixed_crop->height, input.height),
                        std::min(policy.fixed_crop->width, input.width)};
        } else {
            b.output.height = std::max(2, static_cast<int>(std::lround(input.height * uniform(policy.crop_min, policy.crop_max))));
            b.output.width = std::max(2, static_cast<int>(std::lround(input.width * uniform(policy.crop_min, policy.crop_max))));
        }
    }
    const int slack_x = input.width - b.output.width;
    const int slack_y = input.height - b.output.height;
    if (b.geometric) {
        const double scale = uniform(policy.scale_min, policy.scale_max);
        const double angle = uniform(-policy.rotation_max, policy.rotation_max);
        b.affine = AffineTransform::similarity(scale, angle, 0.0, 0.0);
        // Student center maps to the teacher center plus a random offset.
        const double cx_s = (b.output.width - 1) / 2.0;
        const double cy_s = (b.output.height - 1) / 2.0;
        const double off_x = uniform(-0.5, 0.5) * slack_x + uniform(-policy.translation_max, policy.translation_max);
        const double off_y = uniform(-0.5, 0.5) * slack_y + uniform(-policy.translation_max, policy.translation_max);
        b.affine.tx = (input.width - 1) / 2.0 + off_x - (b.affine.a11 * cx_s + b.affine.a12 * cy_s);
        b.affine.ty = (input.height - 1) / 2.0 + off_y - (b.affine.a21 * cx_s + b.affine.a22 * cy_s);
    } else if (b.crop) {
        std::uniform_int_distribution<int> ox(0, slack_x);
        std::uniform_int_distribution<int> oy(0, slack_y);
        b.affine = AffineTransform::translation(ox(rng), oy(rng));
    }
    if (b.color_jitter) {
        b.color.contrast = uniform(1.0 - policy.contrast_jitter, 1.0 + policy.contrast_jitter);
        b.color.brightness = uniform(-policy.brightness_jitter, policy.brightness_jitter);
        b.color.saturation = uniform(1.0 - policy.saturation_jitter, 1.0 + policy.saturation_jitter);
        b.color.hue_shift = uniform(-policy.hue_max, policy.hue_max);
        b.color.gamma = uniform(1.0 - policy.gamma_jitter, 1.0 + policy.gamma_jitter);
    }
    if (b.noise) {
        b.noise->segments = policy.superpixel_segments;
        b.noise->compactness = policy.superpixel_compactness;
        b.noise->segment_seed = rng();
        b.noise->count = std::uniform_int_distribution<int>(policy.noise_min, policy.noise_max)(rng);
        b.noise->noise_seed = rng();
    }
    return b;
}

TransformedPair apply_bundle(TransformBundle& bundle, const Image& i1, const Image& i2) {
    if (!i1.same_shape(i2)) throw ShapeError("apply_bundle: image shapes differ");
    TransformedPair out{affine_apply_image(i1, bundle.affine, bundle.output),
                        affine_apply_image(i2, bundle.affine, bundle.output),
                        MaskMap(bundle.output.height, bundle.output.width)};
    if (!bundle.color.is_identity()) {
        out.i1 = color_apply(out.i1, bundle.color);
        out.i2 = color_apply(out.i2, bundle.color);
    }
    if (bundle.noise) {
        SuperpixelNoise& n = *bundle.noise;
        const int pixels = bundle.output.height * bundle.output.width;
        const int segments = std::clamp(n.segments, 2, pixels);
        n.label_map = superpixel_segment(out.i2, segments, n.compactness, n.segment_seed);
        const int count = std::min(n.count, n.label_map.count());
        NoiseInjection injected = inject_superpixel_noise(out.i2, n.label_map, count, n.noise_seed);
        out.i2 = std::move(injected.image);
        out.noise_mask = std::move(injected.mask);
        n.noised_ids = std::move(injected.noised_ids);
    }
    return out;
}

KeyValues TransformBundle::to_record() const {
    KeyValues kv;
    kv.set("seed", seed);
    kv.set("output.height", output.height);
    kv.set("output.width", output.width);
    kv.set("kind.crop", crop);
    kv.set("kind.geometric", geometric);
    kv.set("kind.color", color_jitter);
    kv.set("kind.noise", noise.has_value());
    kv.set("affine.a11", affine.a11);
    kv.set("affine.a12", affine.a12);
    kv.set("affine.a21", affine.a21);
    kv.set("affine.a22", affine.a22);
    kv.set("affine.tx", affine.tx);
    kv.set("affine.ty", affine.ty);
    kv.set("color.contrast", color.contrast);
    kv.set("color.brightness", color.brightness);
    kv.set("color.saturation", color.saturation);
    kv.set("color.hue_shift", color.hue_shift);
    kv.set("color.gamma", color.gamma);
    if (noise) {
        kv.set("noise.segments", noise->segments);
        kv.set("noise.compactness", noise->compactness);
        kv.set("noise.segment_seed", noise->segment_seed);
        kv.set("noise.count", noise->count);
        kv.set("noise.seed", noise->noise_seed);
        if (!noise->noised_ids.empty()) {
            std::string ids;
            for (int id : noise->noised_ids) ids += (ids.empty() ? "" : ",") + std::to_string(id);
            kv.set("noise.ids", ids);
        }
    }
    return kv;
}

TransformBundle TransformBundle::from_record(const KeyValues& kv) {
    TransformBundle b;
    b.seed = kv.get_uint("seed");
    b.output = {static_cast<int>(kv.get_int("output.height")), static_cast<int>(kv.get_int("output.width"))};
    b.crop = kv.get_bool("kind.crop");
    b.geometric = kv.get_bool("kind.geometric");
    b.color_jitter = kv.get_bool("kind.color");
    b.affine = {kv.get_double("affine.a11"), kv.get_double("affine.a12"), kv.get_double("affine.a21"),
                kv.get_double("affine.a22"), kv.get_double("affine.tx"),  kv.get_double("affine.ty")};
    b.color = {kv.get_double("color.contrast"), kv.get_double("color.brightness"),
               kv.get_double("color.saturation"), kv.get_double("color.hue_shift"),
               kv.get_double("color.gamma")};
    if (kv.get_bool("kind.noise")) {
        SuperpixelNoise n;
        n.segments = static_cast<int>(kv.get_int("noise.segments"));
        n.compactness = kv.get_double("noise.compactness");
        n.segment_seed = kv.get_uint("noise.segment_seed");
        n.count = static_cast<int>(kv.get_int("noise.count"));
        n.noise_seed = kv.get_uint("noise.seed");
        b.noise = std::move(n);
    }
    require_invertible(b.affine);
    require_output(b.output);
    return b;
}

}  // namespace distillflow

#include "distillflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "distillflow/errors.hpp"
#include "distillflow/flow_io.hpp"
#include "distillflow/image_io.hpp"

namespace distillflow {

namespace {

constexpr int kTextureMargin = 32;

std::string_view shape_name(ShapeKind k) { return k == ShapeKind::rect ? "rect" : "ellipse"; }

ShapeKind parse_shape(std::string_view s) {
    if (s == "rect") return ShapeKind::rect;
    if (s == "ellipse") return ShapeKind::ellipse;
    throw ConfigError("unknown layer shape '" + std::string(s) + "'");
}

void put_affine(KeyValues& kv, const std::string& prefix, const AffineTransform& a) {
    kv.set(prefix + ".a11", a.a11);
    kv.set(prefix + ".a12", a.a12);
    kv.set(prefix + ".a21", a.a21);
    kv.set(prefix + ".a22", a.a22);
    kv.set(prefix + ".tx", a.tx);
    kv.set(prefix + ".ty", a.ty);
}

AffineTransform get_affine(const KeyValues& kv, const std::string& prefix) {
    return {kv.get_double(prefix + ".a11"), kv.get_double(prefix + ".a12"), kv.get_double(prefix + ".a21"),
            kv.get_double(prefix + ".a22"), kv.get_double(prefix + ".tx"),  kv.get_double(prefix + ".ty")};
}

// Multi-octave blurred noise, coarser octaves weighted up so the field
// keeps structure at every pyramid level.
Image octave_noise(int h, int w, int channels, double scale, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Image acc(h, w, channels);
    double weight = 1.0;
    for (int octave = 0; octave < 3; ++octave) {
        Image noise(h, w, channels);
        for (double& v : noise.data()) v = unit(rng);
        const Image blurred = gaussian_blur(noise, scale * (1 << octave));
        auto a = acc.data();
        auto b = blurred.data();
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += weight * b[i];
        weight *= 1.8;
    }
    return acc;
}

// Band-limited RGB texture over the frame plus a margin, each channel
// stretched to its own range with headroom below 1.
Image make_texture(int height, int width, double scale, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int h = height + 2 * kTextureMargin;
    const int w = width + 2 * kTextureMargin;
    Image acc = octave_noise(h, w, 3, scale, rng);
    for (int c = 0; c < 3; ++c) {
        const double lo = 0.08 + 0.12 * unit(rng);
        const double hi = lo + 0.45 + 0.1 * unit(rng);
        double mn = 1e300, mx = -1e300;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                mn = std::min(mn, acc(y, x, c));
                mx = std::max(mx, acc(y, x, c));
            }
        }
        const double span = mx > mn ? mx - mn : 1.0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) acc(y, x, c) = lo + (hi - lo) * (acc(y, x, c) - mn) / span;
        }
    }
    return acc;
}

struct Renderer {
    const SceneSpec& spec;
    std::vector<AffineTransform> motions;  // index 0 = background
    std::vector<AffineTransform> inverses;
    std::vector<Image> textures;

    explicit Renderer(const SceneSpec& s) : spec(s) {
        motions.push_back(s.background_motion);
        textures.push_back(make_texture(s.height, s.width, s.texture_scale, s.seed));
        for (const Layer& l : s.layers) {
            motions.push_back(l.motion);
            textures.push_back(make_texture(s.height, s.width, s.texture_scale, l.texture_seed));
        }
        for (const auto& m : motions) inverses.push_back(m.inverse());
    }

    int layer_count() const { return static_cast<int>(motions.size()); }

    bool contains(int k, double x, double y) const { return k == 0 || spec.layers[k - 1].contains(x, y); }

    // Topmost layer covering frame-1 position (x, y).
    int top_frame1(double x, double y) const {
        for (int k = layer_count() - 1; k > 0; --k) {
            if (contains(k, x, y)) return k;
        }
        return 0;
    }

    // Topmost layer covering frame-2 position (x, y).
    int top_frame2(double x, double y) const {
        for (int k = layer_count() - 1; k > 0; --k) {
            const AffineTransform& inv = inverses[k];
            if (contains(k, inv.apply_x(x, y), inv.apply_y(x, y))) return k;
        }
        return 0;
    }

    void shade(int k, double x, double y, std::span<double> rgb) const {
        sample_into(textures[k], x + kTextureMargin, y + kTextureMargin, rgb);
    }
};

bool in_view(double x, double y, int h, int w) { return in_pixel_footprint(x, y, h, w); }

struct Coverage {
    double total = 0, frame1 = 0, frame2 = 0;
};

Coverage layer_coverage(const Layer& l, int h, int w) {
    Coverage c;
    const int x0 = static_cast<int>(std::floor(l.cx - l.rx)), x1 = static_cast<int>(std::ceil(l.cx + l.rx));
    const int y0 = static_cast<int>(std::floor(l.cy - l.ry)), y1 = static_cast<int>(std::ceil(l.cy + l.ry));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            if (!l.contains(x, y)) continue;
            c.total += 1;
            if (in_view(x, y, h, w)) c.frame1 += 1;
            if (in_view(l.motion.apply_x(x, y), l.motion.apply_y(x, y), h, w)) c.frame2 += 1;
        }
    }
    return c;
}

}  // namespace

bool Layer::contains(double x, double y) const {
    const double dx = (x - cx) / rx;
    const double dy = (y - cy) / ry;
    if (shape == ShapeKind::rect) return std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
    return dx * dx + dy * dy <= 1.0;
}

void SceneSpec::validate() const {
    if (height < 2 || width < 2) throw InvalidArgument("scene: empty extent");
    if (!(texture_scale > 0.0)) throw InvalidArgument("scene: texture_scale must be > 0");
    background_motion.inverse();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        if (!(l.rx > 0.0 && l.ry > 0.0)) throw InvalidArgument("scene: layer " + std::to_string(i) + " is empty");
        l.motion.inverse();
        const Coverage c = layer_coverage(l, height, width);
        if (c.total == 0) throw InvalidArgument("scene: layer " + std::to_string(i) + " covers no pixel");
        if (c.frame1 < 0.5 * c.total || c.frame2 < 0.5 * c.total) {
            throw InvalidArgument("scene: layer " + std::to_string(i) + " is less than half in view");
        }
    }
}

KeyValues SceneSpec::to_record() const {
    KeyValues kv;
    kv.set("height", height);
    kv.set("width", width);
    kv.set("seed", seed);
    kv.set("texture_scale", texture_scale);
    put_affine(kv, "background.motion", background_motion);
    kv.set("layers", static_cast<int>(layers.size()));
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        const std::string p = "layer" + std::to_string(i);
        kv.set(p + ".shape", std::string(shape_name(l.shape)));
        kv.set(p + ".cx", l.cx);
        kv.set(p + ".cy", l.cy);
        kv.set(p + ".rx", l.rx);
        kv.set(p + ".ry", l.ry);
        kv.set(p + ".texture_seed", l.texture_seed);
        put_affine(kv, p + ".motion", l.motion);
    }
    return kv;
}

SceneSpec SceneSpec::from_record(const KeyValues& kv) {
    SceneSpec s;
    s.height = static_cast<int>(kv.get_int("height"));
    s.width = static_cast<int>(kv.get_int("width"));
    s.seed = kv.get_uint("seed");
    s.texture_scale = kv.get_double("texture_scale");
    s.background_motion = get_affine(kv, "background.motion");
    const auto n = kv.get_int("layers");
    for (std::int64_t i = 0; i < n; ++i) {
        const std::string p = "layer" + std::to_string(i);
        Layer l;
        l.shape = parse_shape(kv.get(p + ".shape"));
        l.cx = kv.get_double(p + ".cx");
        l.cy = kv.get_double(p + ".cy");
        l.rx = kv.get_double(p + ".rx");
        l.ry = kv.get_double(p + ".ry");
        l.texture_seed = kv.get_uint(p + ".texture_seed");
        l.motion = get_affine(kv, p + ".motion");
        s.layers.push_back(l);
    }
    return s;
}

Scene make_scene(const SceneSpec& spec) {
    spec.validate();
    const int h = spec.height, w = spec.width;
    const Renderer r(spec);
    Scene s{Image(h, w, 3), Image(h, w, 3), FlowField(h, w), FlowField(h, w), MaskMap(h, w), MaskMap(h, w)};
    double rgb[3];
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // Frame 1 and forward direction.
            const int k = r.top_frame1(x, y);
            r.shade(k, x, y, rgb);
            for (int c = 0; c < 3; ++c) s.i1(y, x, c) = rgb[c];
            const double qx = r.motions[k].apply_x(x, y);
            const double qy = r.motions[k].apply_y(x, y);
            s.flow_f.u(y, x) = qx - x;
            s.flow_f.v(y, x) = qy - y;
            const bool fwd_visible = in_view(qx, qy, h, w) && r.top_frame2(std::round(qx), std::round(qy)) == k;
            s.occ_f(y, x) = fwd_visible ? 0.0 : 1.0;

            // Frame 2 and backward direction.
            const int j = r.top_frame2(x, y);
            const double px = r.inverses[j].apply_x(x, y);
            const double py = r.inverses[j].apply_y(x, y);
            r.shade(j, px, py, rgb);
            for (int c = 0; c < 3; ++c) s.i2(y, x, c) = rgb[c];
            s.flow_b.u(y, x) = px - x;
            s.flow_b.v(y, x) = py - y;
            const bool bwd_visible = in_view(px, py, h, w) && r.top_frame1(std::round(px), std::round(py)) == j;
            s.occ_b(y, x) = bwd_visible ? 0.0 : 1.0;
        }
    }
    return s;
}

SceneSpec random_translation_spec(const TranslationSceneOptions& opt, std::uint64_t seed) {
    if (opt.height < 16 || opt.width < 16) throw InvalidArgument("translation scene: extent too small");
    if (opt.min_layers < 0 || opt.min_layers > opt.max_layers) throw InvalidArgument("translation scene: bad layer range");
    if (opt.max_motion < 1) throw InvalidArgument("translation scene: max_motion must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> motion(-opt.max_motion, opt.max_motion);
    std::uniform_int_distribution<int> leftward(-opt.max_motion, 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    SceneSpec spec;
    spec.height = opt.height;
    spec.width = opt.width;
    spec.texture_scale = opt.texture_scale;
    spec.seed = rng();

    auto separated = [](const std::pair<int, int>& a, const std::pair<int, int>& b) {
        const int du = a.first - b.first, dv = a.second - b.second;
        return du * du + dv * dv >= 2;
    };

    std::vector<std::pair<int, int>> used;
    int n_layers = 0;
    if (opt.horizontal_only) {
        // Leftward motions 2 apart: at most max_motion / 2 + 1 of them fit.
        const int capacity = opt.max_motion / 2 + 1;
        if (opt.min_layers + 1 > capacity) {
            throw InvalidArgument("translation scene: max_motion too small to separate min_layers horizontal motions");
        }
        n_layers = std::uniform_int_distribution<int>(opt.min_layers, std::min(opt.max_layers, capacity - 1))(rng);
        for (int attempt = 0;; ++attempt) {
            if (attempt > 100000) throw InvalidArgument("translation scene: cannot separate layer motions");
            used.clear();
            for (int i = 0; i <= n_layers; ++i) used.emplace_back(leftward(rng), 0);
            bool ok = true;
            for (std::size_t a = 0; a < used.size(); ++a)
                for (std::size_t b = a + 1; b < used.size(); ++b) ok = ok && separated(used[a], used[b]);
            if (ok) break;
        }
        spec.background_motion = AffineTransform::translation(used[0].first, 0);
    } else {
        const std::pair<int, int> bg{motion(rng), motion(rng)};
        spec.background_motion = AffineTransform::translation(bg.first, bg.second);
        used.push_back(bg);
        n_layers = std::uniform_int_distribution<int>(opt.min_layers, opt.max_layers)(rng);
    }

    for (int i = 0; i < n_layers; ++i) {
        Layer l;
        l.shape = unit(rng) < 0.5 ? ShapeKind::rect : ShapeKind::ellipse;
        l.rx = std::round(opt.width * (0.08 + 0.1 * unit(rng)));
        l.ry = std::round(opt.height * (0.08 + 0.1 * unit(rng)));
        const double mx = l.rx + opt.max_motion + 1;
        const double my = l.ry + opt.max_motion + 1;
        l.cx = std::round(mx + (opt.width - 1 - 2 * mx) * unit(rng));
        l.cy = std::round(my + (opt.height - 1 - 2 * my) * unit(rng));
        l.texture_seed = rng();
        std::pair<int, int> m;
        if (opt.horizontal_only) {
            m = used[i + 1];
        } else {
            for (int attempt = 0;; ++attempt) {
                if (attempt > 1000) throw InvalidArgument("translation scene: cannot separate layer motions");
                m = {motion(rng), motion(rng)};
                if (std::all_of(used.begin(), used.end(), [&](const auto& o) { return separated(m, o); })) break;
            }
            used.push_back(m);
        }
        l.motion = AffineTransform::translation(m.first, m.second);
        spec.layers.push_back(l);
    }
    spec.validate();
    return spec;
}

void write_scene(const std::filesystem::path& dir, const Scene& scene, const SceneSpec* spec) {
    std::filesystem::create_directories(dir);
    write_image(dir / "frame1.png", scene.i1);
    write_image(dir / "frame2.png", scene.i2);
    write_flo(dir / "flow_fwd.flo", scene.flow_f);
    write_flo(dir / "flow_bwd.flo", scene.flow_b);
    write_mask_pgm(dir / "occ_fwd.pgm", scene.occ_f);
    write_mask_pgm(dir / "occ_bwd.pgm", scene.occ_b);
    if (spec) {
        std::ofstream out(dir / "scene.txt");
        if (!out) throw IoError("cannot write " + (dir / "scene.txt").string());
        spec->to_record().write(out);
    }
}

SceneFiles read_scene(const std::filesystem::path& dir) {
    SceneFiles f;
    f.i1 = read_image(dir / "frame1.png");
    f.i2 = read_image(dir / "frame2.png");
    if (!f.i1.same_shape(f.i2)) throw ShapeError("scene " + dir.string() + ": frames differ in shape");
    if (std::filesystem::exists(dir / "flow_fwd.flo")) f.flow_f = read_flo(dir / "flow_fwd.flo");
    if (std::filesystem::exists(dir / "flow_bwd.flo")) f.flow_b = read_flo(dir / "flow_bwd.flo");
    if (std::filesystem::exists(dir / "occ_fwd.pgm")) f.occ_f = read_mask_pgm(dir / "occ_fwd.pgm");
    if (std::filesystem::exists(dir / "occ_bwd.pgm")) f.occ_b = read_mask_pgm(dir / "occ_bwd.pgm");
    return f;
}

}  // namespace distillflow

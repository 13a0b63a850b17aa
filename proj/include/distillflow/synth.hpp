#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "distillflow/flow.hpp"
#include "distillflow/image.hpp"
#include "distillflow/keyvalue.hpp"
#include "distillflow/transforms.hpp"

namespace distillflow {

enum class ShapeKind { rect, ellipse };

// A textured layer. The shape lives in frame-1 coordinates; `motion` maps a
// frame-1 position of the layer to its frame-2 position.
struct Layer {
    ShapeKind shape = ShapeKind::rect;
    double cx = 0.0, cy = 0.0;
    double rx = 1.0, ry = 1.0;  // half extents / radii
    std::uint64_t texture_seed = 0;
    AffineTransform motion;

    bool contains(double x, double y) const;
    friend bool operator==(const Layer&, const Layer&) = default;
};

struct SceneSpec {
    int height = 64;
    int width = 96;
    AffineTransform background_motion;
    std::vector<Layer> layers;  // back to front
    double texture_scale = 2.5; // blur sigma of the finest texture octave
    std::uint64_t seed = 0;     // background texture

    // Throws InvalidArgument for an empty scene, a non-invertible motion or
    // a layer with less than half of its area in view in either frame.
    void validate() const;

    KeyValues to_record() const;
    static SceneSpec from_record(const KeyValues& kv);

    friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

struct Scene {
    Image i1, i2;
    FlowField flow_f, flow_b;
    MaskMap occ_f, occ_b;
};

Scene make_scene(const SceneSpec& spec);

// Random scene with integer translations, |t| components <= max_motion.
// Motions of any two layers (background included) differ by a squared
// norm of at least 2, so occlusions are detectable by the consistency
// check at its default thresholds. Layers sit fully in view in frame 1.
struct TranslationSceneOptions {
    int height = 64;
    int width = 96;
    int min_layers = 1;
    int max_layers = 3;
    int max_motion = 4;
    bool horizontal_only = false;  // v = 0 everywhere, u <= 0 (stereo-like)
    double texture_scale = 2.5;
};

SceneSpec random_translation_spec(const TranslationSceneOptions& opt, std::uint64_t seed);

// frame1.png, frame2.png, flow_fwd.flo, flow_bwd.flo, occ_fwd.pgm,
// occ_bwd.pgm and scene.txt (when a spec is given).
void write_scene(const std::filesystem::path& dir, const Scene& scene, const SceneSpec* spec = nullptr);

// Reads a scene directory. Ground-truth files are optional; missing ones
// are left empty.
struct SceneFiles {
    Image i1, i2;
    FlowField flow_f, flow_b;
    MaskMap occ_f, occ_b;
    bool has_ground_truth() const { return !flow_f.empty(); }
    bool has_occlusion() const { return !occ_f.empty(); }
};

SceneFiles read_scene(const std::filesystem::path& dir);

}  // namespace distillflow

#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "distillflow/errors.hpp"
#include "distillflow/flow.hpp"
#include "distillflow/synth.hpp"

using namespace distillflow;
namespace fs = std::filesystem;

TEST_SUITE("synth") {

TEST_CASE("static scene") {
    SceneSpec spec;
    spec.height = 20;
    spec.width = 30;
    const Scene s = make_scene(spec);
    CHECK(s.i1 == s.i2);
    CHECK(s.flow_f == FlowField(20, 30));
    CHECK(s.flow_b == FlowField(20, 30));
    CHECK(s.occ_f.sum() == 0);
    CHECK(s.occ_b.sum() == 0);
}

TEST_CASE("translating rectangle over a static background") {
    SceneSpec spec;
    spec.height = 30;
    spec.width = 40;
    Layer l;
    l.cx = 15;
    l.cy = 15;
    l.rx = 6;
    l.ry = 5;
    l.texture_seed = 3;
    l.motion = AffineTransform::translation(5, 0);
    spec.layers.push_back(l);
    const Scene s = make_scene(spec);
    for (int y = 0; y < 30; ++y) {
        for (int x = 0; x < 40; ++x) {
            const bool in1 = l.contains(x, y);
            const bool in2 = l.contains(x - 5, y);
            CHECK(s.flow_f.u(y, x) == (in1 ? 5.0 : 0.0));
            CHECK(s.flow_f.v(y, x) == 0.0);
            CHECK(s.occ_f(y, x) == (!in1 && in2 ? 1.0 : 0.0));
            CHECK(s.occ_b(y, x) == (!in2 && in1 ? 1.0 : 0.0));
        }
    }
    // Band width 5 on every row the rectangle spans.
    double band = 0;
    for (int x = 0; x < 40; ++x) band += s.occ_f(15, x);
    CHECK(band == 5);
}

TEST_CASE("global translation: the consistency check finds exactly the border band") {
    SceneSpec spec;
    spec.height = 16;
    spec.width = 24;
    spec.background_motion = AffineTransform::translation(-2, 0);
    const Scene s = make_scene(spec);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 24; ++x) CHECK(s.occ_f(y, x) == (x < 2 ? 1.0 : 0.0));
    CHECK(occlusion_from_consistency(s.flow_f, s.flow_b) == s.occ_f);
    CHECK(occlusion_from_consistency(s.flow_b, s.flow_f) == s.occ_b);
}

TEST_CASE("random integer scenes: exact warping and exact occlusion") {
    TranslationSceneOptions opt;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const SceneSpec spec = random_translation_spec(opt, seed);
        CHECK(spec == random_translation_spec(opt, seed));
        const Scene s = make_scene(spec);
        CHECK(occlusion_from_consistency(s.flow_f, s.flow_b) == s.occ_f);
        CHECK(occlusion_from_consistency(s.flow_b, s.flow_f) == s.occ_b);
        const WarpResult w = warp_image(s.i2, s.flow_f);
        for (int y = 0; y < s.i1.height(); ++y)
            for (int x = 0; x < s.i1.width(); ++x)
                if (s.occ_f(y, x) == 0)
                    for (int c = 0; c < 3; ++c) CHECK(w.warped(y, x, c) == s.i1(y, x, c));
    }
}

TEST_CASE("horizontal-only scenes move left only") {
    TranslationSceneOptions opt;
    opt.horizontal_only = true;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Scene s = make_scene(random_translation_spec(opt, seed));
        for (int y = 0; y < s.i1.height(); ++y)
            for (int x = 0; x < s.i1.width(); ++x) {
                CHECK(s.flow_f.v(y, x) == 0.0);
                CHECK(s.flow_f.u(y, x) <= 0.0);
            }
    }
}

TEST_CASE("spec validation and records") {
    SceneSpec spec;
    spec.height = 1;
    CHECK_THROWS_AS(make_scene(spec), InvalidArgument);

    SceneSpec far;
    Layer l;
    l.cx = 10;
    l.cy = 10;
    l.rx = l.ry = 4;
    l.motion = AffineTransform::translation(200, 0);
    far.layers.push_back(l);
    CHECK_THROWS_AS(far.validate(), InvalidArgument);

    const SceneSpec r = random_translation_spec(TranslationSceneOptions{}, 11);
    std::istringstream in(r.to_record().str());
    CHECK(SceneSpec::from_record(KeyValues::parse(in)) == r);
}

TEST_CASE("scenes export and re-read") {
    const SceneSpec spec = random_translation_spec(TranslationSceneOptions{}, 4);
    const Scene s = make_scene(spec);
    const fs::path dir = fs::temp_directory_path() / "distillflow_unit" / "scene";
    fs::remove_all(dir);
    write_scene(dir, s, &spec);
    const SceneFiles f = read_scene(dir);
    CHECK(f.has_ground_truth());
    CHECK(f.has_occlusion());
    CHECK(f.flow_f == s.flow_f);
    CHECK(f.occ_b == s.occ_b);
    CHECK(f.i1.same_shape(s.i1));
    CHECK(SceneSpec::from_record(KeyValues::load(dir / "scene.txt")) == spec);
    fs::remove(dir / "flow_fwd.flo");
    CHECK(!read_scene(dir).has_ground_truth());
}

}

#include <doctest.h>

#include <sstream>

#include "distillflow/errors.hpp"
#include "distillflow/keyvalue.hpp"
#include "distillflow/run_config.hpp"

using namespace distillflow;

namespace {

KeyValues parse(const std::string& text) {
    std::istringstream in(text);
    return KeyValues::parse(in);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("key=value parsing") {
    const KeyValues kv = parse("# comment\n  a = 1 \nb=x y\n\n");
    CHECK(kv.get("a") == "1");
    CHECK(kv.get("b") == "x y");
    CHECK(kv.get_int("a") == 1);
    CHECK_THROWS_AS(kv.get("missing"), ConfigError);
    CHECK_THROWS_AS(kv.get_double("b"), ConfigError);
    CHECK_THROWS_AS(parse("novalue\n"), ConfigError);
}

TEST_CASE("doubles are written in round-trip form") {
    KeyValues kv;
    kv.set("x", 0.1 + 0.2);
    kv.set("y", 1e-300);
    const KeyValues back = parse(kv.str());
    CHECK(back.get_double("x") == 0.1 + 0.2);
    CHECK(back.get_double("y") == 1e-300);
}

TEST_CASE("defaults and overrides") {
    const RunConfig d = RunConfig::from_key_values(KeyValues{});
    CHECK(d.pipeline.loss.epsilon == 0.01);
    CHECK(d.pipeline.loss.q_exponent == 0.4);
    CHECK(d.pipeline.loss.beta == 10.0);
    CHECK(d.pipeline.loss.smooth_weight == 0.1);
    CHECK(d.pipeline.loss.alpha1 == 0.01);
    CHECK(d.pipeline.loss.alpha2 == 0.5);
    CHECK(d.pipeline.optimizer.checkpoints == 5);
    CHECK(d.teacher_seeds.size() == 2);

    const RunConfig c = RunConfig::from_key_values(
        parse("loss.photometric=ssim\noptimizer.schedule=0.5:0.1\nteacher.seeds=4,5,6\ntransform.preset=crop_only\n"));
    CHECK(c.pipeline.loss.photometric_kind == PhotometricKind::ssim);
    REQUIRE(c.pipeline.optimizer.schedule.size() == 1);
    CHECK(c.pipeline.optimizer.schedule[0].second == 0.1);
    CHECK(c.teacher_seeds == std::vector<std::uint64_t>{4, 5, 6});
    CHECK(c.policy.p_noise == 0.0);
}

TEST_CASE("unknown keys and bad values are rejected") {
    CHECK_THROWS_AS(RunConfig::from_key_values(parse("optimizer.step=1\n")), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_key_values(parse("transform.preset=huge\n")), ConfigError);
    CHECK_THROWS(RunConfig::from_key_values(parse("optimizer.iterations=0\n")));
    CHECK_THROWS(RunConfig::from_key_values(parse("loss.q=2\n")));
}

TEST_CASE("the echoed config reloads to the same effective config") {
    const RunConfig c = RunConfig::from_key_values(parse("seed=9\nloss.beta=3.5\ntransform.preset=sintel\n"));
    const KeyValues echo = c.to_key_values();
    const RunConfig back = RunConfig::from_key_values(echo);
    CHECK(back.to_key_values().str() == echo.str());
    CHECK(back.policy.fixed_crop.has_value());
    CHECK(back.seed == 9);
}

}

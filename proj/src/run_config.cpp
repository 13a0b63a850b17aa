#include "distillflow/run_config.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "distillflow/errors.hpp"

namespace distillflow {

namespace {

struct Binding {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, std::string_view)> set;
};

std::string to_text(double v) { return format_double(v); }
std::string to_text(int v) { return std::to_string(v); }
std::string to_text(std::uint64_t v) { return std::to_string(v); }
std::string to_text(bool v) { return v ? "1" : "0"; }

void from_text(std::string_view t, double& out) { out = parse_double(t); }
void from_text(std::string_view t, int& out) { out = static_cast<int>(parse_int(t)); }
void from_text(std::string_view t, std::uint64_t& out) { out = parse_uint(t); }
void from_text(std::string_view t, bool& out) { out = parse_bool(t); }

template <typename Access>
Binding bind(std::string key, Access access) {
    return {std::move(key),
            [access](const RunConfig& c) { return to_text(access(const_cast<RunConfig&>(c))); },
            [access](RunConfig& c, std::string_view t) { from_text(t, access(c)); }};
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in{std::string(text)};
    while (std::getline(in, item, sep)) {
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

#define DF_BIND(key, expr) bind(key, [](RunConfig& c) -> auto& { return expr; })

const std::vector<Binding>& bindings() {
    static const std::vector<Binding> table = {
        DF_BIND("seed", c.seed),
        {"teacher.seeds",
         [](const RunConfig& c) {
             std::string s;
             for (std::uint64_t v : c.teacher_seeds) s += (s.empty() ? "" : ",") + std::to_string(v);
             return s;
         },
         [](RunConfig& c, std::string_view t) {
             c.teacher_seeds.clear();
             for (const std::string& p : split(t, ',')) c.teacher_seeds.push_back(parse_uint(p));
         }},
        DF_BIND("student.init_from_teacher", c.student_init_from_teacher),
        DF_BIND("finetune.label_density", c.label_density),

        DF_BIND("loss.epsilon", c.pipeline.loss.epsilon),
        DF_BIND("loss.q", c.pipeline.loss.q_exponent),
        DF_BIND("loss.beta", c.pipeline.loss.beta),
        DF_BIND("loss.smooth_weight", c.pipeline.loss.smooth_weight),
        {"loss.photometric", [](const RunConfig& c) { return std::string(to_string(c.pipeline.loss.photometric_kind)); },
         [](RunConfig& c, std::string_view t) { c.pipeline.loss.photometric_kind = parse_photometric_kind(t); }},
        DF_BIND("loss.alpha1", c.pipeline.loss.alpha1),
        DF_BIND("loss.alpha2", c.pipeline.loss.alpha2),
        DF_BIND("loss.census_radius", c.pipeline.loss.census_radius),
        DF_BIND("loss.census_softness", c.pipeline.loss.census_softness),
        DF_BIND("loss.ssim_window", c.pipeline.loss.ssim_window),

        DF_BIND("optimizer.step_size", c.pipeline.optimizer.step_size),
        DF_BIND("optimizer.beta1", c.pipeline.optimizer.beta1),
        DF_BIND("optimizer.beta2", c.pipeline.optimizer.beta2),
        DF_BIND("optimizer.eps", c.pipeline.optimizer.eps_adam),
        DF_BIND("optimizer.iterations", c.pipeline.optimizer.iterations_per_level),
        DF_BIND("optimizer.refresh_interval", c.pipeline.optimizer.occlusion_refresh_interval),
        DF_BIND("optimizer.pretrain", c.pipeline.optimizer.pretrain_iterations),
        {"optimizer.schedule",
         [](const RunConfig& c) {
             std::string s;
             for (const auto& [f, k] : c.pipeline.optimizer.schedule) {
                 s += (s.empty() ? "" : ",") + format_double(f) + ":" + format_double(k);
             }
             return s;
         },
         [](RunConfig& c, std::string_view t) {
             c.pipeline.optimizer.schedule.clear();
             for (const std::string& p : split(t, ',')) {
                 const auto colon = p.find(':');
                 if (colon == std::string::npos) throw ConfigError("optimizer.schedule: expected fraction:factor");
                 c.pipeline.optimizer.schedule.emplace_back(parse_double(p.substr(0, colon)),
                                                            parse_double(p.substr(colon + 1)));
             }
         }},
        DF_BIND("optimizer.init_noise", c.pipeline.optimizer.init_noise),
        DF_BIND("optimizer.checkpoints", c.pipeline.optimizer.checkpoints),

        DF_BIND("pyramid.levels", c.pipeline.pyramid.levels),
        DF_BIND("pyramid.scale", c.pipeline.pyramid.scale_factor),
        DF_BIND("pyramid.min_size", c.pipeline.pyramid.min_size),

        DF_BIND("transform.p_crop", c.policy.p_crop),
        DF_BIND("transform.p_noise", c.policy.p_noise),
        DF_BIND("transform.p_geometric", c.policy.p_geometric),
        DF_BIND("transform.p_color", c.policy.p_color),
        DF_BIND("transform.crop_min", c.policy.crop_min),
        DF_BIND("transform.crop_max", c.policy.crop_max),
        DF_BIND("transform.scale_min", c.policy.scale_min),
        DF_BIND("transform.scale_max", c.policy.scale_max),
        DF_BIND("transform.rotation_max", c.policy.rotation_max),
        DF_BIND("transform.translation_max", c.policy.translation_max),
        DF_BIND("transform.contrast_jitter", c.policy.contrast_jitter),
        DF_BIND("transform.brightness_jitter", c.policy.brightness_jitter),
        DF_BIND("transform.saturation_jitter", c.policy.saturation_jitter),
        DF_BIND("transform.hue_max", c.policy.hue_max),
        DF_BIND("transform.gamma_jitter", c.policy.gamma_jitter),
        DF_BIND("transform.superpixels", c.policy.superpixel_segments),
        DF_BIND("transform.compactness", c.policy.superpixel_compactness),
        DF_BIND("transform.noise_min", c.policy.noise_min),
        DF_BIND("transform.noise_max", c.policy.noise_max),

        DF_BIND("synth.count", c.synth_count),
        DF_BIND("synth.height", c.synth.height),
        DF_BIND("synth.width", c.synth.width),
        DF_BIND("synth.min_layers", c.synth.min_layers),
        DF_BIND("synth.max_layers", c.synth.max_layers),
        DF_BIND("synth.max_motion", c.synth.max_motion),
        DF_BIND("synth.horizontal_only", c.synth.horizontal_only),
        DF_BIND("synth.texture_scale", c.synth.texture_scale),
    };
    return table;
}

#undef DF_BIND

TransformPolicy preset_policy(std::string_view name) {
    if (name == "default") return TransformPolicy{};
    if (name == "kitti") return TransformPolicy::kitti_preset();
    if (name == "sintel") return TransformPolicy::sintel_preset();
    if (name == "crop_only") return TransformPolicy::crop_only();
    throw ConfigError("unknown transform.preset '" + std::string(name) + "'");
}

}  // namespace

RunConfig RunConfig::from_key_values(const KeyValues& kv) {
    RunConfig c;
    if (kv.contains("transform.preset")) {
        c.policy_preset = kv.get("transform.preset");
        c.policy = preset_policy(c.policy_preset);
    }
    for (const auto& [key, value] : kv.entries()) {
        if (key == "transform.preset") continue;
        const auto& table = bindings();
        const auto it = std::find_if(table.begin(), table.end(), [&](const Binding& b) { return b.key == key; });
        if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
        try {
            it->set(c, value);
        } catch (const ConfigError& e) {
            throw ConfigError(key + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) { return from_key_values(KeyValues::load(path)); }

KeyValues RunConfig::to_key_values() const {
    KeyValues kv;
    kv.set("transform.preset", policy_preset);
    for (const Binding& b : bindings()) kv.set(b.key, b.get(*this));
    return kv;
}

void RunConfig::validate() const {
    pipeline.loss.validate();
    pipeline.optimizer.validate();
    pipeline.pyramid.validate();
    policy.validate();
    if (synth_count < 1) throw ConfigError("synth.count must be >= 1");
    if (teacher_seeds.empty()) throw ConfigError("teacher.seeds must list at least one seed");
    if (!(label_density > 0.0 && label_density <= 1.0)) throw ConfigError("finetune.label_density must be in (0,1]");
}

}  // namespace distillflow

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "distillflow/engine.hpp"
#include "distillflow/keyvalue.hpp"
#include "distillflow/synth.hpp"
#include "distillflow/transforms.hpp"

namespace distillflow {

// Every tunable of a CLI run. All keys have defaults; unknown keys are
// rejected with ConfigError.
struct RunConfig {
    PipelineConfig pipeline;
    TransformPolicy policy;
    std::string policy_preset = "default";  // default | kitti | sintel | crop_only
    TranslationSceneOptions synth;
    int synth_count = 1;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> teacher_seeds = {1, 2};
    bool student_init_from_teacher = false;
    double label_density = 1.0;  // fraction of labeled pixels in finetune

    static RunConfig from_key_values(const KeyValues& kv);
    static RunConfig load(const std::filesystem::path& path);

    // Effective configuration, every key present.
    KeyValues to_key_values() const;

    void validate() const;
};

}  // namespace distillflow

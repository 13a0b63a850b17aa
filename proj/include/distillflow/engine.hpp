#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "distillflow/flow.hpp"
#include "distillflow/image.hpp"
#include "distillflow/losses.hpp"
#include "distillflow/transforms.hpp"

namespace distillflow {

struct OptimizerConfig {
    double step_size = 0.1;   // pixels per iteration at the start of a level
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-8;
    int iterations_per_level = 300;
    int occlusion_refresh_interval = 20;
    int pretrain_iterations = -1;  // -1: 10% of iterations_per_level
    // (fraction of the level's iterations, multiplicative factor)
    std::vector<std::pair<double, double>> schedule = {{0.6, 0.5}, {0.85, 0.5}};
    double init_noise = 0.1;  // std-dev of the seeded initial flow, pixels
    int checkpoints = 5;

    void validate() const;
    int effective_pretrain() const;
    double step_at(int iteration) const;
};

struct PyramidSpec {
    int levels = 3;
    double scale_factor = 0.5;
    int min_size = 8;

    // Extents from coarsest to finest. Throws InvalidArgument when the
    // coarsest level would fall below min_size.
    std::vector<Extent> extents(int height, int width) const;
    void validate() const;
};

struct TraceRow {
    int iteration = 0;  // counted across levels
    int level = 0;      // 0 = finest
    double loss = 0.0;
    double epe = -1.0;  // < 0 when no ground truth was supplied
};

// Stage-specific inputs at full resolution. They are resampled to each
// pyramid level. Which ones are needed depends on the stage.
struct StageAux {
    const FlowField* teacher_f = nullptr;
    const FlowField* teacher_b = nullptr;
    const MaskMap* teacher_occ_f = nullptr;  // O^T, stage2_v1
    const MaskMap* teacher_occ_b = nullptr;
    const MaskMap* confidence_f = nullptr;   // M^T, stage2_v2
    const MaskMap* confidence_b = nullptr;
    const FlowField* ground_truth = nullptr; // supervised labels
    const MaskMap* validity = nullptr;
    const FlowField* init_f = nullptr;       // optional initial flows
    const FlowField* init_b = nullptr;
    const FlowField* eval_gt = nullptr;      // forward ground truth for the trace
    const MaskMap* eval_mask = nullptr;
    bool forward_only = false;               // leave w_b at its initial value
};

struct FlowCheckpoint {
    int iteration = 0;
    FlowField w_f, w_b;
};

struct OptimizeResult {
    FlowField w_f, w_b;
    MaskMap occ_f, occ_b;  // consistency check on the final flows
    std::vector<TraceRow> trace;
    std::vector<FlowCheckpoint> checkpoints;  // last iterates of the finest level, oldest first
    int occlusion_refreshes = 0;  // student/teacher occlusion recomputations during optimization
    MaskMap last_hallucinated_f, last_hallucinated_b;  // stage2_v1 only
};

OptimizeResult optimize_flow(const Image& i1, const Image& i2, Stage stage, const StageAux& aux,
                             const PyramidSpec& pyramid, const OptimizerConfig& opt, const LossConfig& loss,
                             std::uint64_t seed);

struct TeacherPrediction {
    FlowField w_f, w_b;
    MaskMap occ_f, occ_b;
    MaskMap conf_f, conf_b;  // 1 - occ
    std::string provenance;

    // Occlusion (consistency check) and confidence from the given flows.
    static TeacherPrediction from_flows(FlowField w_f, FlowField w_b, double alpha1, double alpha2,
                                        std::string provenance);
};

struct PipelineConfig {
    LossConfig loss;
    OptimizerConfig optimizer;
    PyramidSpec pyramid;
};

struct TeacherRun {
    TeacherPrediction prediction;               // final iterate
    std::vector<TeacherPrediction> checkpoints; // last C iterates
    std::vector<TraceRow> trace;
};

TeacherRun train_teacher(const Image& i1, const Image& i2, const PipelineConfig& cfg, std::uint64_t seed,
                         const FlowField* eval_gt = nullptr, const MaskMap* eval_mask = nullptr);

// Independent teacher runs, one per seed; run concurrently when more than
// one hardware thread is available. Results are in seed order.
std::vector<TeacherRun> train_teachers(const Image& i1, const Image& i2, const PipelineConfig& cfg,
                                       const std::vector<std::uint64_t>& seeds);

// Mean flows; occlusion recomputed from them.
TeacherPrediction ensemble(const std::vector<TeacherPrediction>& members, double alpha1 = kDefaultAlpha1,
                           double alpha2 = kDefaultAlpha2);

// Teacher outputs moved into the student frame: w^T by transform_flow,
// O^T by transform_mask with out-of-view = occluded, and M^T = transformed
// confidence times the in-view flag.
struct TransformedTeacher {
    FlowField w_f, w_b;
    MaskMap occ_f, occ_b;
    MaskMap conf_f, conf_b;
};

TransformedTeacher transform_teacher(const TeacherPrediction& teacher, const TransformBundle& bundle);

// Ground truth moved into the student frame of a bundle. `occluded` is the
// transformed original occlusion (out of view counts as occluded);
// `hallucinated` marks pixels that were visible in the original pair but
// lose their correspondent in the transformed one, by leaving the view or
// landing on a noised superpixel.
struct StudentFrameTruth {
    FlowField flow;
    MaskMap valid;
    MaskMap occluded;
    MaskMap hallucinated;
};

StudentFrameTruth student_frame_truth(const FlowField& gt_f, const FlowField& gt_b, const MaskMap& gt_occ_f,
                                      const TransformBundle& bundle, const MaskMap& noise_mask);

enum class StudentVariant { v1_occlusion_view, v2_confidence_view };

StudentVariant parse_student_variant(std::string_view name);
std::string_view to_string(StudentVariant v);

struct StudentReport {
    double final_loss = 0.0;
    double hallucinated_f = 0.0;  // |O'| at the last refresh (v1)
    double hallucinated_b = 0.0;
    double confident_f = 0.0;     // |M^T| (v2)
    double confident_b = 0.0;
    int occlusion_refreshes = 0;
    std::vector<TraceRow> trace;
};

struct StudentResult {
    FlowField w_f, w_b;  // student frame
    MaskMap occ_f, occ_b;
    TransformedPair pair;
    TransformedTeacher teacher;
    StudentReport report;
};

struct StudentOptions {
    bool init_from_teacher = false;  // start from w^T instead of zero
};

StudentResult train_student(const Image& i1, const Image& i2, const TeacherPrediction& teacher,
                            TransformBundle& bundle, StudentVariant variant, const PipelineConfig& cfg,
                            std::uint64_t seed, const StudentOptions& options = {});

// Forward flow optimized under the supervised stage at full resolution,
// starting from init_f. The backward flow is returned unchanged.
std::pair<FlowField, FlowField> finetune_supervised(const Image& i1, const Image& i2, const FlowField& w_gt,
                                                    const MaskMap& validity, const FlowField& init_f,
                                                    const FlowField& init_b, const PipelineConfig& cfg,
                                                    std::uint64_t seed = 0);

struct SemiSchedule {
    int n_labeled = 0;
    int n_self_annotated = 0;
    int repeat_factor = 1;
};

SemiSchedule build_semi_schedule(int n_labeled, int n_self_annotated);

struct Presentation {
    bool labeled = false;
    int index = 0;
};

// One epoch: every labeled pair repeat_factor times and every
// self-annotated pair once, interleaved evenly.
std::vector<Presentation> epoch_presentations(const SemiSchedule& schedule);

}  // namespace distillflow

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "distillflow/engine.hpp"
#include "distillflow/errors.hpp"
#include "distillflow/eval.hpp"
#include "distillflow/flow_io.hpp"
#include "distillflow/flow_viz.hpp"
#include "distillflow/image_io.hpp"
#include "distillflow/run_config.hpp"
#include "distillflow/synth.hpp"

namespace fs = std::filesystem;
using namespace distillflow;

namespace {

// Files of one run. Each file is written to a temporary name in its final
// directory and renamed into place; unless commit() is called, everything
// written and every directory created is removed again.
class OutputSet {
public:
    explicit OutputSet(fs::path root) : root_(std::move(root)) { make_dirs(root_); }
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;

    ~OutputSet() {
        if (committed_) return;
        std::error_code ec;
        for (auto it = files_.rbegin(); it != files_.rend(); ++it) fs::remove(*it, ec);
        for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it) {
            if (fs::is_empty(*it, ec)) fs::remove(*it, ec);
        }
    }

    const fs::path& root() const { return root_; }

    void write(const fs::path& relative, const std::function<void(const fs::path&)>& writer) {
        const fs::path target = root_ / relative;
        make_dirs(target.parent_path());
        const fs::path tmp = target.parent_path() / (".tmp-" + target.stem().string() + target.extension().string());
        try {
            writer(tmp);
            fs::rename(tmp, target);
        } catch (...) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw;
        }
        files_.push_back(target);
    }

    void write_text(const fs::path& relative, const std::string& text) {
        write(relative, [&](const fs::path& p) {
            std::ofstream out(p, std::ios::binary);
            out << text;
            if (!out) throw IoError("cannot write " + p.string());
        });
    }

    void commit() { committed_ = true; }

private:
    void make_dirs(const fs::path& dir) {
        if (dir.empty() || fs::exists(dir)) return;
        make_dirs(dir.parent_path());
        std::error_code ec;
        if (!fs::create_directory(dir, ec) && !fs::is_directory(dir)) {
            throw IoError("cannot create directory " + dir.string());
        }
        dirs_.push_back(dir);
    }

    fs::path root_;
    std::vector<fs::path> files_;
    std::vector<fs::path> dirs_;
    bool committed_ = false;
};

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::int64_t seed = -1;
    std::string out;
};

RunConfig load_config(const Common& c) {
    KeyValues kv;
    if (!c.config_path.empty()) kv = KeyValues::load(c.config_path);
    for (const std::string& o : c.overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + o + "'");
        kv.set(o.substr(0, eq), o.substr(eq + 1));
    }
    if (c.seed >= 0) kv.set("seed", static_cast<std::uint64_t>(c.seed));
    return RunConfig::from_key_values(kv);
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
    std::string s = "iteration,level,loss,epe\n";
    for (const TraceRow& r : trace) {
        s += std::to_string(r.iteration) + "," + std::to_string(r.level) + "," + format_double(r.loss) + "," +
             (r.epe < 0.0 ? std::string() : format_double(r.epe)) + "\n";
    }
    return s;
}

void write_prediction(OutputSet& out, const fs::path& sub, const TeacherPrediction& p) {
    out.write(sub / "flow_fwd.flo", [&](const fs::path& f) { write_flo(f, p.w_f); });
    out.write(sub / "flow_bwd.flo", [&](const fs::path& f) { write_flo(f, p.w_b); });
    out.write(sub / "occ_fwd.pgm", [&](const fs::path& f) { write_mask_pgm(f, p.occ_f); });
    out.write(sub / "occ_bwd.pgm", [&](const fs::path& f) { write_mask_pgm(f, p.occ_b); });
    out.write_text(sub / "provenance.txt", p.provenance + "\n");
}

// Flows are stored as float32; rounding them here keeps in-memory results
// identical to what a later read returns.
FlowField as_stored(const FlowField& f) {
    FlowField r = f;
    for (double& v : r.data()) v = static_cast<float>(v);
    return r;
}

TeacherPrediction stored_prediction(const FlowField& w_f, const FlowField& w_b, const RunConfig& cfg,
                                    std::string provenance) {
    return TeacherPrediction::from_flows(as_stored(w_f), as_stored(w_b), cfg.pipeline.loss.alpha1,
                                         cfg.pipeline.loss.alpha2, std::move(provenance));
}

TeacherPrediction read_prediction(const fs::path& dir, const RunConfig& cfg) {
    FlowField w_f = read_flo(dir / "flow_fwd.flo");
    FlowField w_b = read_flo(dir / "flow_bwd.flo");
    std::string provenance = dir.string();
    std::ifstream prov(dir / "provenance.txt");
    if (prov) std::getline(prov, provenance);
    TeacherPrediction p = TeacherPrediction::from_flows(std::move(w_f), std::move(w_b), cfg.pipeline.loss.alpha1,
                                                        cfg.pipeline.loss.alpha2, provenance);
    if (fs::exists(dir / "occ_fwd.pgm") && fs::exists(dir / "occ_bwd.pgm")) {
        p.occ_f = read_mask_pgm(dir / "occ_fwd.pgm");
        p.occ_b = read_mask_pgm(dir / "occ_bwd.pgm");
        p.conf_f = confidence_map(p.occ_f);
        p.conf_b = confidence_map(p.occ_b);
    }
    return p;
}

std::uint64_t run_seed(const RunConfig& cfg) { return cfg.seed; }

// --- subcommands -----------------------------------------------------------

int cmd_synth(const Common& c) {
    const RunConfig cfg = load_config(c);
    OutputSet out(c.out);
    for (int k = 0; k < cfg.synth_count; ++k) {
        const SceneSpec spec = random_translation_spec(cfg.synth, run_seed(cfg) + static_cast<std::uint64_t>(k));
        const Scene scene = make_scene(spec);
        const fs::path sub = "scene" + std::to_string(k);
        out.write(sub / "frame1.png", [&](const fs::path& p) { write_image(p, scene.i1); });
        out.write(sub / "frame2.png", [&](const fs::path& p) { write_image(p, scene.i2); });
        out.write(sub / "flow_fwd.flo", [&](const fs::path& p) { write_flo(p, scene.flow_f); });
        out.write(sub / "flow_bwd.flo", [&](const fs::path& p) { write_flo(p, scene.flow_b); });
        out.write(sub / "occ_fwd.pgm", [&](const fs::path& p) { write_mask_pgm(p, scene.occ_f); });
        out.write(sub / "occ_bwd.pgm", [&](const fs::path& p) { write_mask_pgm(p, scene.occ_b); });
        out.write_text(sub / "scene.txt", spec.to_record().str());
        std::cerr << "synth: " << (out.root() / sub).string() << "\n";
    }
    out.write_text("config.txt", cfg.to_key_values().str());
    out.commit();
    return 0;
}

int cmd_teacher(const Common& c, const std::string& pair, const std::vector<std::uint64_t>& seeds,
                bool checkpoints) {
    const RunConfig cfg = load_config(c);
    const SceneFiles scene = read_scene(pair);
    const std::vector<std::uint64_t> run_seeds = seeds.empty() ? cfg.teacher_seeds : seeds;
    const FlowField* gt = scene.has_ground_truth() ? &scene.flow_f : nullptr;
    MaskMap all;
    if (gt != nullptr) all = MaskMap(gt->height(), gt->width(), 1.0);

    OutputSet out(c.out);
    for (std::uint64_t s : run_seeds) {
        TeacherRun run = train_teacher(scene.i1, scene.i2, cfg.pipeline, s, gt, gt ? &all : nullptr);
        const fs::path sub = "seed" + std::to_string(s);
        write_prediction(out, sub, stored_prediction(run.prediction.w_f, run.prediction.w_b, cfg,
                                                     run.prediction.provenance));
        out.write_text(sub / "trace.csv", trace_csv(run.trace));
        if (checkpoints) {
            for (std::size_t k = 0; k < run.checkpoints.size(); ++k) {
                const TeacherPrediction& p = run.checkpoints[k];
                write_prediction(out, sub / ("ckpt" + std::to_string(k)),
                                 stored_prediction(p.w_f, p.w_b, cfg, p.provenance));
            }
        }
        std::cerr << "teacher: seed " << s << " loss " << run.trace.back().loss << "\n";
    }
    out.write_text("config.txt", cfg.to_key_values().str());
    out.commit();
    return 0;
}

int cmd_ensemble(const Common& c, const std::vector<std::string>& members) {
    const RunConfig cfg = load_config(c);
    if (members.empty()) throw ConfigError("ensemble: --members is empty");
    std::vector<TeacherPrediction> preds;
    for (const std::string& m : members) preds.push_back(read_prediction(m, cfg));
    const TeacherPrediction e = ensemble(preds, cfg.pipeline.loss.alpha1, cfg.pipeline.loss.alpha2);
    OutputSet out(c.out);
    write_prediction(out, ".", stored_prediction(e.w_f, e.w_b, cfg, e.provenance));
    out.write_text("config.txt", cfg.to_key_values().str());
    out.commit();
    return 0;
}

int cmd_student(const Common& c, const std::string& pair, const std::string& teacher_dir,
                const std::string& variant_name, const std::string& replay) {
    const RunConfig cfg = load_config(c);
    const StudentVariant variant = parse_student_variant(variant_name);
    const SceneFiles scene = read_scene(pair);
    const TeacherPrediction teacher = read_prediction(teacher_dir, cfg);
    TransformBundle bundle =
        replay.empty() ? sample_transform(cfg.policy, {scene.i1.height(), scene.i1.width()}, run_seed(cfg))
                       : TransformBundle::from_record(KeyValues::load(replay));
    StudentOptions options;
    options.init_from_teacher = cfg.student_init_from_teacher;
    // The bundle carries the seed so a replay reproduces the whole run.
    const StudentResult r = train_student(scene.i1, scene.i2, teacher, bundle, variant, cfg.pipeline,
                                          bundle.seed, options);

    KeyValues report;
    report.set("variant", std::string(to_string(variant)));
    report.set("final_loss", r.report.final_loss);
    report.set("hallucinated_fwd", r.report.hallucinated_f);
    report.set("hallucinated_bwd", r.report.hallucinated_b);
    report.set("confident_fwd", r.report.confident_f);
    report.set("confident_bwd", r.report.confident_b);
    report.set("occlusion_refreshes", r.report.occlusion_refreshes);
    report.set("teacher", teacher.provenance);

    OutputSet out(c.out);
    write_prediction(out, ".", stored_prediction(r.w_f, r.w_b, cfg, "student " + std::string(to_string(variant))));
    out.write("frame1.png", [&](const fs::path& p) { write_image(p, r.pair.i1); });
    out.write("frame2.png", [&](const fs::path& p) { write_image(p, r.pair.i2); });
    out.write("noise_mask.pgm", [&](const fs::path& p) { write_mask_pgm(p, r.pair.noise_mask); });
    out.write_text("bundle.txt", bundle.to_record().str());
    out.write_text("report.txt", report.str());
    out.write_text("trace.csv", trace_csv(r.report.trace));
    out.write_text("config.txt", cfg.to_key_values().str());
    out.commit();
    return 0;
}

MaskMap label_mask(int h, int w, double density, std::uint64_t seed) {
    MaskMap v(h, w, 1.0);
    if (density >= 1.0) return v;
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution keep(density);
    for (double& x : v.data()) x = keep(rng) ? 1.0 : 0.0;
    return v;
}

int cmd_finetune(const Common& c, const std::vector<std::string>& pairs, const std::vector<std::string>& inits,
                 bool semi, const std::vector<std::string>& self_pairs, const std::vector<std::string>& self_labels) {
    const RunConfig cfg = load_config(c);
    if (pairs.empty()) throw ConfigError("finetune: --pair is required");
    if (!inits.empty() && inits.size() != pairs.size()) throw ConfigError("finetune: one --init per --pair");
    if (!semi && !self_pairs.empty()) throw ConfigError("finetune: --self requires --semi");
    if (self_pairs.size() != self_labels.size()) throw ConfigError("finetune: one --self-labels per --self");

    struct Unit {
        SceneFiles scene;
        FlowField labels;
        MaskMap validity;
        FlowField w_f, w_b;
    };
    std::vector<Unit> labeled, self;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        Unit u{read_scene(pairs[i]), {}, {}, {}, {}};
        if (!u.scene.has_ground_truth()) throw IoError("finetune: " + pairs[i] + " has no ground truth");
        const int h = u.scene.i1.height(), w = u.scene.i1.width();
        u.labels = u.scene.flow_f;
        u.validity = label_mask(h, w, cfg.label_density, run_seed(cfg) + i);
        if (inits.empty()) {
            u.w_f = FlowField(h, w);
            u.w_b = FlowField(h, w);
        } else {
            const TeacherPrediction p = read_prediction(inits[i], cfg);
            u.w_f = p.w_f;
            u.w_b = p.w_b;
        }
        labeled.push_back(std::move(u));
    }
    for (std::size_t j = 0; j < self_pairs.size(); ++j) {
        const TeacherPrediction p = read_prediction(self_labels[j], cfg);
        self.push_back({read_scene(self_pairs[j]), p.w_f, p.conf_f, p.w_f, p.w_b});
    }

    const SemiSchedule schedule = semi ? build_semi_schedule(static_cast<int>(labeled.size()),
                                                             static_cast<int>(self.size()))
                                       : SemiSchedule{static_cast<int>(labeled.size()), 0, 1};
    const std::vector<Presentation> epoch = epoch_presentations(schedule);
    std::uint64_t step = 0;
    for (const Presentation& p : epoch) {
        Unit& u = p.labeled ? labeled[p.index] : self[p.index];
        auto [w_f, w_b] = finetune_supervised(u.scene.i1, u.scene.i2, u.labels, u.validity, u.w_f, u.w_b,
                                              cfg.pipeline, run_seed(cfg) + step++);
        u.w_f = std::move(w_f);
        u.w_b = std::move(w_b);
    }

    KeyValues sched;
    sched.set("n_labeled", schedule.n_labeled);
    sched.set("n_self_annotated", schedule.n_self_annotated);
    sched.set("repeat_factor", schedule.repeat_factor);
    sched.set("presentations", static_cast<int>(epoch.size()));

    OutputSet out(c.out);
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        write_prediction(out, "labeled" + std::to_string(i),
                         stored_prediction(labeled[i].w_f, labeled[i].w_b, cfg, "finetune " + pairs[i]));
    }
    for (std::size_t j = 0; j < self.size(); ++j) {
        write_prediction(out, "self" + std::to_string(j),
                         stored_prediction(self[j].w_f, self[j].w_b, cfg, "finetune " + self_pairs[j]));
    }
    out.write_text("schedule.txt", sched.str());
    out.write_text("config.txt", cfg.to_key_values().str());
    out.commit();
    return 0;
}

int cmd_eval(const Common& c, const std::string& flow_dir, const std::string& gt_dir, const std::string& replay,
             bool stereo) {
    const RunConfig cfg = load_config(c);
    const TeacherPrediction pred = read_prediction(flow_dir, cfg);
    const SceneFiles scene = read_scene(gt_dir);
    if (!scene.has_ground_truth()) throw IoError("eval: " + gt_dir + " has no ground truth");
    MaskMap gt_occ = scene.has_occlusion() ? scene.occ_f
                                           : occlusion_from_consistency(scene.flow_f, scene.flow_b,
                                                                        cfg.pipeline.loss.alpha1,
                                                                        cfg.pipeline.loss.alpha2);
    FlowField gt = scene.flow_f;
    RegionSplit regions = RegionSplit::from_occlusion(gt_occ);
    MaskMap hallucinated;
    if (!replay.empty()) {
        TransformBundle bundle = TransformBundle::from_record(KeyValues::load(replay));
        const TransformedPair pair = apply_bundle(bundle, scene.i1, scene.i2);
        StudentFrameTruth t = student_frame_truth(scene.flow_f, scene.flow_b, gt_occ, bundle, pair.noise_mask);
        gt = std::move(t.flow);
        gt_occ = std::move(t.occluded);
        regions = RegionSplit::from_occlusion(gt_occ, t.valid);
        hallucinated = std::move(t.hallucinated);
    }
    if (!pred.w_f.same_extent(gt)) throw ShapeError("eval: prediction and ground truth differ in size");

    std::vector<MetricRow> rows = flow_metrics(pred.w_f, gt, regions);
    if (regions.all.sum() > 0.0) {
        rows.push_back({"occ_f_measure", "all", occlusion_f_measure(pred.occ_f, gt_occ, regions.all),
                        regions.all.sum()});
    }
    if (!hallucinated.empty() && hallucinated.sum() > 0.0) {
        rows.push_back({"epe", "hallucinated", epe(pred.w_f, gt, hallucinated), hallucinated.sum()});
    }
    if (stereo && regions.noc.sum() > 0.0) {
        const DisparityMap d = flow_to_disparity(pred.w_f);
        const DisparityMap g = flow_to_disparity(gt);
        rows.push_back({"d1", "noc", d1_rate(d.values, g.values, regions.noc), regions.noc.sum()});
    }

    std::ostringstream csv;
    write_metric_csv(csv, rows);
    if (c.out.empty() || c.out == "-") {
        std::cout << csv.str();
        return 0;
    }
    const fs::path target(c.out);
    OutputSet out(target.parent_path().empty() ? fs::path(".") : target.parent_path());
    out.write_text(target.filename(), csv.str());
    out.commit();
    return 0;
}

Image side_by_side(const std::vector<Image>& panels) {
    int width = 0;
    for (const Image& p : panels) width += p.width();
    Image out(panels.front().height(), width, 3);
    int x0 = 0;
    for (const Image& p : panels) {
        for (int y = 0; y < p.height(); ++y) {
            for (int x = 0; x < p.width(); ++x) {
                for (int ch = 0; ch < 3; ++ch) out(y, x0 + x, ch) = p(y, x, ch);
            }
        }
        x0 += p.width();
    }
    return out;
}

int cmd_viz(const Common& c, const std::string& flow_path, const std::string& gt_dir, double max_error) {
    const fs::path fp(flow_path);
    const FlowField flow = fs::is_directory(fp) ? read_flo(fp / "flow_fwd.flo") : read_flo(fp);
    OutputSet out(c.out);
    if (gt_dir.empty()) {
        const Image color = flow_to_color(flow);
        out.write("flow.png", [&](const fs::path& p) { write_image(p, color); });
    } else {
        const SceneFiles scene = read_scene(gt_dir);
        if (!scene.has_ground_truth()) throw IoError("viz: " + gt_dir + " has no ground truth");
        if (!flow.same_extent(scene.flow_f)) throw ShapeError("viz: flow and ground truth differ in size");
        double max_mag = 0.0;
        for (int y = 0; y < flow.height(); ++y) {
            for (int x = 0; x < flow.width(); ++x) {
                max_mag = std::max(max_mag, std::hypot(scene.flow_f.u(y, x), scene.flow_f.v(y, x)));
            }
        }
        const std::optional<double> scale = max_mag > 0.0 ? std::optional<double>(max_mag) : std::nullopt;
        const Image color = flow_to_color(flow, scale);
        const Image gt_color = flow_to_color(scene.flow_f, scale);
        const Image err = error_to_color(endpoint_error_map(flow, scene.flow_f), max_error);
        out.write("flow.png", [&](const fs::path& p) { write_image(p, color); });
        out.write("gt.png", [&](const fs::path& p) { write_image(p, gt_color); });
        out.write("error.png", [&](const fs::path& p) { write_image(p, err); });
        const Image panel = side_by_side({color, gt_color, err});
        out.write("side_by_side.png", [&](const fs::path& p) { write_image(p, panel); });
    }
    out.commit();
    return 0;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const DegenerateMask*>(&e)) return 2;
    if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return 3;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distillflow: per-pixel optical flow optimization with teacher/student distillation"};
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub, bool out_required) {
        sub->add_option("--config", common.config_path, "key=value config file")->check(CLI::ExistingFile);
        sub->add_option("--set", common.overrides, "override a config key (KEY=VALUE)");
        auto* out = sub->add_option("--out", common.out, "output directory (file for eval)");
        if (out_required) out->required();
    };

    auto* synth = app.add_subcommand("synth", "write synthetic scenes with exact ground truth");
    add_common(synth, true);
    synth->add_option("--seed", common.seed, "base scene seed");

    std::string pair;
    std::vector<std::uint64_t> teacher_seeds;
    bool checkpoints = false;
    auto* teacher = app.add_subcommand("teacher", "stage-1 optimization, one run per seed");
    add_common(teacher, true);
    teacher->add_option("--pair", pair, "scene directory")->required();
    teacher->add_option("--seed", teacher_seeds, "run seeds (default: teacher.seeds)")->delimiter(',');
    teacher->add_flag("--checkpoints", checkpoints, "also write the last iterates");

    std::vector<std::string> members;
    auto* ens = app.add_subcommand("ensemble", "average predictions");
    add_common(ens, true);
    ens->add_option("--members", members, "prediction directories")->delimiter(',')->required();

    std::string teacher_dir, variant = "v2", replay;
    auto* student = app.add_subcommand("student", "stage-2 distillation on a transformed pair");
    add_common(student, true);
    student->add_option("--seed", common.seed, "bundle and optimizer seed");
    student->add_option("--pair", pair, "scene directory")->required();
    student->add_option("--teacher", teacher_dir, "teacher prediction directory")->required();
    student->add_option("--variant", variant, "v1 or v2")->check(CLI::IsMember({"v1", "v2"}));
    student->add_option("--replay", replay, "recorded bundle.txt")->check(CLI::ExistingFile);

    std::vector<std::string> pairs, inits, self_pairs, self_labels;
    bool semi = false;
    auto* finetune = app.add_subcommand("finetune", "supervised fine-tuning on labeled scenes");
    add_common(finetune, true);
    finetune->add_option("--seed", common.seed, "optimizer seed");
    finetune->add_option("--pair", pairs, "labeled scene directories")->delimiter(',')->required();
    finetune->add_option("--init", inits, "initial predictions, one per pair")->delimiter(',');
    finetune->add_flag("--semi", semi, "mix in self-annotated pairs with the repeat rule");
    finetune->add_option("--self", self_pairs, "self-annotated scene directories")->delimiter(',');
    finetune->add_option("--self-labels", self_labels, "pseudo-label predictions, one per --self")->delimiter(',');

    std::string flow_dir, gt_dir;
    bool stereo = false;
    auto* eval = app.add_subcommand("eval", "metric CSV from a prediction and ground truth");
    add_common(eval, false);
    eval->add_option("--flow", flow_dir, "prediction directory")->required();
    eval->add_option("--gt", gt_dir, "scene directory")->required();
    eval->add_option("--replay", replay, "evaluate in the student frame of this bundle")->check(CLI::ExistingFile);
    eval->add_flag("--stereo", stereo, "also report D1 on the horizontal component");

    double max_error = 3.0;
    auto* viz = app.add_subcommand("viz", "flow color and error images");
    add_common(viz, true);
    viz->add_option("--flow", flow_dir, "prediction directory or .flo file")->required();
    viz->add_option("--gt", gt_dir, "scene directory for error maps");
    viz->add_option("--max-error", max_error, "error mapped to white");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) return cmd_synth(common);
        if (teacher->parsed()) return cmd_teacher(common, pair, teacher_seeds, checkpoints);
        if (ens->parsed()) return cmd_ensemble(common, members);
        if (student->parsed()) return cmd_student(common, pair, teacher_dir, variant, replay);
        if (finetune->parsed()) return cmd_finetune(common, pairs, inits, semi, self_pairs, self_labels);
        if (eval->parsed()) return cmd_eval(common, flow_dir, gt_dir, replay, stereo);
        if (viz->parsed()) return cmd_viz(common, flow_dir, gt_dir, max_error);
    } catch (const std::exception& e) {
        std::cerr << "distillflow: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return 1;
}

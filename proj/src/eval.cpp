#include "distillflow/eval.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace distillflow {

namespace {

double checked_mass(const MaskMap& mask, const char* what) {
    const double mass = mask.sum();
    if (!(mass > 0.0)) throw DegenerateMask(std::string(what) + ": empty evaluation mask");
    return mass;
}

bool is_outlier(double error, double reference_magnitude) {
    return error > kOutlierAbsolute && error > kOutlierRelative * reference_magnitude;
}

}  // namespace

double epe(const FlowField& flow, const FlowField& gt, const MaskMap& mask) {
    if (!flow.same_extent(gt) || !flow.same_extent(mask)) throw ShapeError("epe: extents differ");
    const double mass = checked_mass(mask, "epe");
    double total = 0.0;
    for (int y = 0; y < flow.height(); ++y) {
        for (int x = 0; x < flow.width(); ++x) {
            if (mask(y, x) == 0.0) continue;
            total += mask(y, x) * std::hypot(flow.u(y, x) - gt.u(y, x), flow.v(y, x) - gt.v(y, x));
        }
    }
    return total / mass;
}

double fl_rate(const FlowField& flow, const FlowField& gt, const MaskMap& mask) {
    if (!flow.same_extent(gt) || !flow.same_extent(mask)) throw ShapeError("fl_rate: extents differ");
    const double mass = checked_mass(mask, "fl_rate");
    double bad = 0.0;
    for (int y = 0; y < flow.height(); ++y) {
        for (int x = 0; x < flow.width(); ++x) {
            if (mask(y, x) == 0.0) continue;
            const double err = std::hypot(flow.u(y, x) - gt.u(y, x), flow.v(y, x) - gt.v(y, x));
            if (is_outlier(err, std::hypot(gt.u(y, x), gt.v(y, x)))) bad += mask(y, x);
        }
    }
    return bad / mass;
}

double occlusion_f_measure(const MaskMap& pred, const MaskMap& gt, const MaskMap& eval_mask) {
    if (!pred.same_extent(gt) || !pred.same_extent(eval_mask)) {
        throw ShapeError("occlusion_f_measure: extents differ");
    }
    checked_mass(eval_mask, "occlusion_f_measure");
    double tp = 0.0;
    double fp = 0.0;
    double fn = 0.0;
    for (int y = 0; y < pred.height(); ++y) {
        for (int x = 0; x < pred.width(); ++x) {
            if (eval_mask(y, x) == 0.0) continue;
            const bool p = pred(y, x) >= 0.5;
            const bool g = gt(y, x) >= 0.5;
            if (p && g) tp += 1.0;
            else if (p) fp += 1.0;
            else if (g) fn += 1.0;
        }
    }
    const double precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

double d1_rate(const ScalarMap& disparity, const ScalarMap& gt, const MaskMap& mask) {
    if (!disparity.same_extent(gt) || !disparity.same_extent(mask)) throw ShapeError("d1_rate: extents differ");
    const double mass = checked_mass(mask, "d1_rate");
    double bad = 0.0;
    for (int y = 0; y < gt.height(); ++y) {
        for (int x = 0; x < gt.width(); ++x) {
            if (mask(y, x) == 0.0) continue;
            if (is_outlier(std::abs(disparity(y, x) - gt(y, x)), std::abs(gt(y, x)))) bad += mask(y, x);
        }
    }
    return bad / mass;
}

RegionSplit RegionSplit::from_occlusion(const MaskMap& gt_occlusion) {
    return from_occlusion(gt_occlusion, MaskMap(gt_occlusion.height(), gt_occlusion.width(), 1.0));
}

RegionSplit RegionSplit::from_occlusion(const MaskMap& gt_occlusion, const MaskMap& valid) {
    if (!gt_occlusion.same_extent(valid)) throw ShapeError("RegionSplit: extents differ");
    RegionSplit r{valid, MaskMap(valid.height(), valid.width()), MaskMap(valid.height(), valid.width())};
    for (int y = 0; y < valid.height(); ++y) {
        for (int x = 0; x < valid.width(); ++x) {
            if (valid(y, x) < 0.5) continue;
            if (gt_occlusion(y, x) >= 0.5) r.occ(y, x) = 1.0;
            else r.noc(y, x) = 1.0;
        }
    }
    return r;
}

std::vector<MetricRow> flow_metrics(const FlowField& flow, const FlowField& gt, const RegionSplit& regions) {
    std::vector<MetricRow> rows;
    const std::pair<const char*, const MaskMap*> named[] = {
        {"all", &regions.all}, {"noc", &regions.noc}, {"occ", &regions.occ}};
    for (const auto& [name, mask] : named) {
        const double count = mask->sum();
        if (count <= 0.0) continue;
        rows.push_back({"epe", name, epe(flow, gt, *mask), count});
        rows.push_back({"fl", name, fl_rate(flow, gt, *mask), count});
    }
    return rows;
}

void write_metric_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
    out << "metric,region,value,pixel_count\n";
    for (const MetricRow& r : rows) {
        out << r.metric << ',' << r.region << ',' << std::setprecision(9) << r.value << ','
            << static_cast<long long>(std::llround(r.pixel_count)) << '\n';
    }
}

}  // namespace distillflow

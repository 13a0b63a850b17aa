#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "distillflow/flow.hpp"

namespace distillflow {

// Outlier thresholds shared by Fl and D1: an error counts when it exceeds
// both the absolute and the relative bound.
inline constexpr double kOutlierAbsolute = 3.0;
inline constexpr double kOutlierRelative = 0.05;

// Average endpoint error over pixels with mask > 0, weighted by mask.
double epe(const FlowField& flow, const FlowField& gt, const MaskMap& mask);

// Fraction of masked pixels with endpoint error > 3 px and > 5% of |gt|.
double fl_rate(const FlowField& flow, const FlowField& gt, const MaskMap& mask);

// F-measure of predicted occlusion (positive class = 1) against ground
// truth inside eval_mask; 0 when precision + recall == 0.
double occlusion_f_measure(const MaskMap& pred, const MaskMap& gt, const MaskMap& eval_mask);

// Disparity outlier rate with the Fl thresholds.
double d1_rate(const ScalarMap& disparity, const ScalarMap& gt, const MaskMap& mask);

// Evaluation masks. noc and occ are disjoint and together cover `all`.
struct RegionSplit {
    MaskMap all;
    MaskMap noc;
    MaskMap occ;

    static RegionSplit from_occlusion(const MaskMap& gt_occlusion);
    static RegionSplit from_occlusion(const MaskMap& gt_occlusion, const MaskMap& valid);
};

struct MetricRow {
    std::string metric;
    std::string region;
    double value;
    double pixel_count;
};

// EPE and Fl over all/noc/occ; regions with no pixels are skipped.
std::vector<MetricRow> flow_metrics(const FlowField& flow, const FlowField& gt, const RegionSplit& regions);

// CSV with header "metric,region,value,pixel_count".
void write_metric_csv(std::ostream& out, const std::vector<MetricRow>& rows);

}  // namespace distillflow

#pragma once

#include <optional>

#include "distillflow/flow.hpp"

namespace distillflow {

// Middlebury color-wheel rendering. Hue follows the flow angle, saturation
// grows with min(|flow| / max_magnitude, 1); zero flow is white. Without
// max_magnitude the 99th percentile of |flow| is used.
Image flow_to_color(const FlowField& flow, std::optional<double> max_magnitude = std::nullopt);

// Position of a flow direction on the 55-entry wheel, in [0, 55).
double color_wheel_position(double u, double v);

// Endpoint-error heat map (black = 0, white >= max_error), 3 channels.
Image error_to_color(const ScalarMap& error, double max_error = 3.0);

}  // namespace distillflow

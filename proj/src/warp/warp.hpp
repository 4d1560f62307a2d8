#pragma once

#include "core/node.hpp"

namespace flint {

// Differentiable backward warp: out(p) = interpolate(source, p + flow(p))
// with bilinear (2D) / trilinear (3D) weights and clamp-to-edge sampling.
// source is (C, spatial), flow is (rank, spatial); every source channel is
// resampled by the same flow. Gradients reach both source values and flow
// components. At exactly-integer sample positions the weight derivative is
// taken from the left cell.
ag::NodePtr backward_warp(const ag::NodePtr& source, const ag::NodePtr& flow);

// Convex blend warped_s * mask + warped_u * (1 - mask). Mask values must
// already be in [0,1]; anything else is a contract violation.
ag::NodePtr fuse(const ag::NodePtr& warped_s, const ag::NodePtr& warped_u,
                 const ag::NodePtr& mask);

}  // namespace flint

#pragma once

#include <vector>

#include "core/node.hpp"

namespace flint::ag {

// Cross-correlation (deep-learning convention, no kernel flip).
// input (Ci, S...), kernel (Co, Ci, K...), bias (Co) -> (Co, O...)
// with O = floor((S + 2*pad - K) / stride) + 1 per spatial axis.
NodePtr conv(const NodePtr& input, const NodePtr& kernel, const NodePtr& bias,
             std::vector<int> stride, std::vector<int> pad);

// Transposed convolution, the adjoint of conv's forward map.
// input (Ci, S...), kernel (Ci, Co, K...), bias (Co) -> (Co, O...)
// with O = (S - 1)*stride - 2*pad + K per spatial axis.
NodePtr deconv(const NodePtr& input, const NodePtr& kernel, const NodePtr& bias,
               std::vector<int> stride, std::vector<int> pad);

// weight (Out, In) * input (In) + bias (Out)
NodePtr linear(const NodePtr& input, const NodePtr& weight, const NodePtr& bias);

// x > 0 ? x : a*x, slope shape (1) shared or (C) per channel.
NodePtr prelu(const NodePtr& input, const NodePtr& slope);

// Channel-axis concatenation; all spatial dims must match.
NodePtr concat(const std::vector<NodePtr>& inputs);

// Channel range view [c0, c1) as a copy with scatter backward.
NodePtr slice_channels(const NodePtr& x, int c0, int c1);

// Same data, new shape (numel preserved).
NodePtr reshape(const NodePtr& x, Shape s);

// Window [offset, offset + numel(s)) of a rank-1 node, reshaped to s.
NodePtr slice_flat(const NodePtr& x, std::size_t offset, Shape s);

NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr mul(const NodePtr& a, const NodePtr& b);
NodePtr scale(const NodePtr& a, double c);
NodePtr add_const(const NodePtr& a, double c);
NodePtr abs(const NodePtr& a);      // subgradient 0 at 0
NodePtr sigmoid(const NodePtr& a);
NodePtr exp(const NodePtr& a);
NodePtr sqrt(const NodePtr& a);     // subgradient 0 at 0
NodePtr sum(const NodePtr& a);      // scalar
NodePtr mean(const NodePtr& a);     // scalar
NodePtr sum_channels(const NodePtr& a);  // (C, S...) -> (1, S...)

// Value copy with gradient flow cut.
NodePtr detach(const NodePtr& a);

}  // namespace flint::ag

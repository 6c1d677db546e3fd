// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlo/nn/tape.hpp"

#include <span>
#include <vector>

namespace dlo::nn {

/// Contiguous run of rows [offset, offset + count) treated as one set, e.g.
/// the incoming-edge tokens of one receiver node.
struct Segment {
  Eigen::Index offset = 0;
  Eigen::Index count = 0;
};

// Dense algebra.
Var matmul(Var a, Var b);
/// x W + b with b broadcast over rows.
Var linear(Var x, Var w, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// a * mask, mask a constant of a's shape.
Var mul_const(Var a, const Matrix& mask);
Var add_const(Var a, const Matrix& c);
/// 1 - a
Var one_minus(Var a);
/// Adds a (1, c) row to every row of a.
Var add_row(Var a, Var row);

// Pointwise nonlinearities.
Var relu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
/// Exact (erf) GELU.
Var gelu(Var a);

/// Row-wise layer normalization with gain and bias rows, eps 1e-5.
Var layer_norm(Var x, Var gain, Var bias);

// Structural.
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, Eigen::Index first, Eigen::Index count);
Var slice_rows(Var a, Eigen::Index first, Eigen::Index count);
Var gather_rows(Var a, std::span<const Eigen::Index> rows);
/// Reinterprets the row-major payload with a new (rows, cols).
Var reshape(Var a, Eigen::Index rows, Eigen::Index cols);
/// Mean of each segment's rows; empty segments yield zero rows.
Var segment_mean(Var a, std::span<const Segment> segments);

/// Multi-head scaled dot-product attention restricted to each segment:
/// tokens attend only to tokens of their own segment. q, k, v are (T, dim);
/// dim must be divisible by heads.
Var segment_attention(Var q, Var k, Var v, std::span<const Segment> segments, int heads);
/// Attention probabilities of one head for one segment (count x count),
/// evaluated directly from values.
Matrix attention_probabilities(const Matrix& q, const Matrix& k, Segment segment, int heads,
                               int head);

/// Rigid planar motion of rows of x (N, 2) about the pose of their sample:
/// out_n = r + dr*dt + R(dtheta*dt)(x_n - r) where mask_n = 1, x_n otherwise.
/// poses (B, >=2) supply r = pose[:2]; actions (B, 3) supply (dr, dtheta).
Var rigid_motion(Var x, Var poses, Var actions, std::span<const Eigen::Index> row_sample,
                 std::span<const double> mask, double dt);

// Reductions to (1, 1).
Var sum(Var a);
Var mean(Var a);
Var sum_squares(Var a);
/// Mean of squared differences against a constant target.
Var mse(Var a, const Matrix& target);

}  // namespace dlo::nn

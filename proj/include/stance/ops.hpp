#pragma once

#include <cstdint>
#include <span>

#include "stance/tensor.hpp"

// Differentiable primitives. Binary elementwise ops take operands of equal
// shape, or one operand with a single element which is broadcast.
namespace stance {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// Throws DomainError when a denominator is zero.
Tensor div(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& a, Real s);
Tensor mul_scalar(const Tensor& a, Real s);
Tensor neg(const Tensor& a);

Tensor exp(const Tensor& a);
// Throws DomainError on nonpositive input.
Tensor log(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
// NaN inputs pass through unchanged.
Tensor relu(const Tensor& a);
// max(a, lo); the gradient is zero where the floor is active.
Tensor clamp_min(const Tensor& a, Real lo);

// Full reductions to a single element.
Tensor sum(const Tensor& a);
// Backward routes to the first argmax in row-major order.
Tensor max(const Tensor& a);

// Row reductions of a matrix: [m x n] -> [m x 1].
Tensor sum_rows(const Tensor& a);
Tensor logsumexp_rows(const Tensor& a);

Tensor reshape(const Tensor& a, Shape shape);
// Block [row0, row0+rows) x [col0, col0+cols) of a matrix.
Tensor slice(const Tensor& a, std::size_t row0, std::size_t rows,
             std::size_t col0, std::size_t cols);
// Embeds a matrix in the top-left corner of a zero [rows x cols] matrix.
Tensor pad(const Tensor& a, std::size_t rows, std::size_t cols);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor concat_rows(std::span<const Tensor> parts);
// Row lookup: result row i is table row ids[i].
Tensor gather_rows(const Tensor& table, std::span<const std::uint32_t> ids);

// Same-padded cross-correlation: input [c_in x h x w], filters
// [c_out x c_in x f x f] with f odd, bias [c_out] -> [c_out x h x w].
Tensor conv2d(const Tensor& input, const Tensor& filters, const Tensor& bias);
// 2x2 max pooling with stride 2; odd edges see only the cells present.
// Ties go to the smallest flat index.
Tensor maxpool2d(const Tensor& input);

}  // namespace stance

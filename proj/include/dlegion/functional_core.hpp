#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "dlegion/arch_config.hpp"

namespace dlegion {

/// Dense row-major signed integer matrix whose elements all fit a declared
/// two's-complement width.
class IntMatrix {
public:
    IntMatrix() = default;
    IntMatrix(std::size_t rows, std::size_t cols, unsigned bit_width);
    IntMatrix(std::size_t rows, std::size_t cols, unsigned bit_width, std::vector<std::int64_t> values);

    static IntMatrix identity(std::size_t n, unsigned bit_width = 8);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    unsigned bit_width() const noexcept { return bits_; }

    std::int64_t operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    /// Checked write: throws std::out_of_range if `v` does not fit the width.
    void set(std::size_t r, std::size_t c, std::int64_t v);

    std::span<const std::int64_t> values() const noexcept { return data_; }
    bool fits(std::int64_t v) const noexcept;

    friend bool operator==(const IntMatrix&, const IntMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    unsigned bits_ = 8;
    std::vector<std::int64_t> data_;
};

inline constexpr unsigned kAccumulatorBits = 32;

/// One reconfigurable PE: sixteen 2-bit multipliers in four groups of four,
/// each group with its own accumulator, combined by shared shifters.
///
/// The activation is split into four 2-bit digits (top digit signed). In
/// Dense8x8 every group takes one 2-bit slice of the 8-bit weight. In Proj8x4
/// groups pair up on two 4-bit weights; in Proj8x2 each group multiplies the
/// activation by its own 2-bit weight. Returns one product per interleaved
/// weight (R of them; the rest are zero).
class ReconfigurablePe {
public:
    static std::array<std::int64_t, 4> multiply(std::int64_t activation, std::span<const std::int64_t> weights,
                                                PrecisionMode mode);

    /// Running count of 2-bit multiplier events on this thread.
    static std::uint64_t multiplier_ops() noexcept;
};

/// Column j rotated downward by j: out[r][j] = W[(r - j) mod D][j].
IntMatrix permute_weights(const IntMatrix& W, std::size_t D);
/// Inverse of permute_weights.
IntMatrix unpermute_weights(const IntMatrix& Wp, std::size_t D);

struct CoreOptions {
    /// Reject the 2-bit code -2 in Proj8x2 (ternary weights only).
    bool ternary_strict = false;
};

/// One ADiP core pass: A (M x D, 8-bit) against R interleaved D x D weight
/// tiles. Weights are permuted, activations enter diagonally and shift one
/// column per PE row; each column reduces its psums top to bottom. Rows of A
/// beyond a multiple of D are handled by zero padding.
std::vector<IntMatrix> core_matmul(const IntMatrix& A, std::span<const IntMatrix> weight_tiles,
                                   PrecisionMode mode, const CoreOptions& opts = {});

/// D * (ceil(M/D) + 1) + P + D: weight load, stream, pipeline and drain of
/// one single-tile pass. Independent of the precision mode.
Cycles core_cycle_count(Count M, PrecisionMode mode, const ArchConfig& arch);

/// Naive triple-loop product in 64-bit arithmetic.
IntMatrix reference_matmul(const IntMatrix& A, const IntMatrix& B);

}  // namespace dlegion

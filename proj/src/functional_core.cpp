#include "dlegion/functional_core.hpp"

#include <stdexcept>
#include <string>

namespace dlegion {

namespace {

thread_local std::uint64_t g_multiplier_ops = 0;

std::int64_t min_of(unsigned bits) { return -(std::int64_t{1} << (bits - 1)); }
std::int64_t max_of(unsigned bits) { return (std::int64_t{1} << (bits - 1)) - 1; }

void check_width(unsigned bits) {
    if (bits != 2 && bits != 4 && bits != 8 && bits != 32)
        throw std::invalid_argument("IntMatrix: unsupported bit width " + std::to_string(bits));
}

// Raw 2-bit code of digit `i` of a two's-complement value.
unsigned digit_code(std::int64_t v, unsigned i) {
    return static_cast<unsigned>((static_cast<std::uint64_t>(v) >> (2 * i)) & 0x3U);
}

// 2b x 2b multiplier. A signed operand decodes 0b10 as -2 and 0b11 as -1.
std::int64_t mul2(unsigned a_code, bool a_signed, unsigned w_code, bool w_signed) {
    ++g_multiplier_ops;
    const std::int64_t a = (a_signed && (a_code & 0x2U)) ? std::int64_t(a_code) - 4 : std::int64_t(a_code);
    const std::int64_t w = (w_signed && (w_code & 0x2U)) ? std::int64_t(w_code) - 4 : std::int64_t(w_code);
    return a * w;
}

// One group of four multipliers: 8-bit activation times one 2-bit weight
// digit, with the group accumulator shifting each partial product by its
// activation digit position.
std::int64_t group_mac(std::int64_t activation, unsigned w_code, bool w_signed) {
    std::int64_t acc = 0;
    for (unsigned j = 0; j < 4; ++j)
        acc += mul2(digit_code(activation, j), j == 3, w_code, w_signed) << (2 * j);
    return acc;
}

}  // namespace

IntMatrix::IntMatrix(std::size_t rows, std::size_t cols, unsigned bit_width)
    : rows_(rows), cols_(cols), bits_(bit_width), data_(rows * cols, 0) {
    check_width(bit_width);
}

IntMatrix::IntMatrix(std::size_t rows, std::size_t cols, unsigned bit_width, std::vector<std::int64_t> values)
    : rows_(rows), cols_(cols), bits_(bit_width), data_(std::move(values)) {
    check_width(bit_width);
    if (data_.size() != rows * cols) throw std::invalid_argument("IntMatrix: value count does not match shape");
    for (auto v : data_)
        if (!fits(v))
            throw std::out_of_range("IntMatrix: " + std::to_string(v) + " does not fit " +
                                    std::to_string(bit_width) + " bits");
}

IntMatrix IntMatrix::identity(std::size_t n, unsigned bit_width) {
    IntMatrix m(n, n, bit_width);
    for (std::size_t i = 0; i < n; ++i) m.set(i, i, 1);
    return m;
}

bool IntMatrix::fits(std::int64_t v) const noexcept { return v >= min_of(bits_) && v <= max_of(bits_); }

void IntMatrix::set(std::size_t r, std::size_t c, std::int64_t v) {
    if (!fits(v))
        throw std::out_of_range("IntMatrix: " + std::to_string(v) + " does not fit " + std::to_string(bits_) + " bits");
    data_[r * cols_ + c] = v;
}

std::array<std::int64_t, 4> ReconfigurablePe::multiply(std::int64_t activation, std::span<const std::int64_t> weights,
                                                       PrecisionMode mode) {
    std::array<std::int64_t, 4> out{};
    switch (mode) {
        case PrecisionMode::Dense8x8: {
            // Shared shifter: group i holds weight slice i (top slice signed).
            for (unsigned i = 0; i < 4; ++i)
                out[0] += group_mac(activation, digit_code(weights[0], i), i == 3) << (2 * i);
            break;
        }
        case PrecisionMode::Proj8x4: {
            for (unsigned t = 0; t < 2; ++t)
                for (unsigned i = 0; i < 2; ++i)
                    out[t] += group_mac(activation, digit_code(weights[t], i), i == 1) << (2 * i);
            break;
        }
        case PrecisionMode::Proj8x2: {
            for (unsigned t = 0; t < 4; ++t) out[t] = group_mac(activation, digit_code(weights[t], 0), true);
            break;
        }
    }
    return out;
}

std::uint64_t ReconfigurablePe::multiplier_ops() noexcept { return g_multiplier_ops; }

IntMatrix permute_weights(const IntMatrix& W, std::size_t D) {
    if (W.rows() != D || W.cols() != D)
        throw std::invalid_argument("permute_weights: expected a " + std::to_string(D) + "x" + std::to_string(D) +
                                    " tile, got " + std::to_string(W.rows()) + "x" + std::to_string(W.cols()));
    IntMatrix out(D, D, W.bit_width());
    for (std::size_t r = 0; r < D; ++r)
        for (std::size_t j = 0; j < D; ++j) out.set(r, j, W((r + D - j % D) % D, j));
    return out;
}

IntMatrix unpermute_weights(const IntMatrix& Wp, std::size_t D) {
    if (Wp.rows() != D || Wp.cols() != D)
        throw std::invalid_argument("unpermute_weights: expected a " + std::to_string(D) + "x" + std::to_string(D) +
                                    " tile");
    IntMatrix out(D, D, Wp.bit_width());
    for (std::size_t r = 0; r < D; ++r)
        for (std::size_t j = 0; j < D; ++j) out.set(r, j, Wp((r + j) % D, j));
    return out;
}

std::vector<IntMatrix> core_matmul(const IntMatrix& A, std::span<const IntMatrix> weight_tiles, PrecisionMode mode,
                                   const CoreOptions& opts) {
    const std::size_t R = acceleration_ratio(mode);
    if (weight_tiles.size() != R)
        throw std::invalid_argument("core_matmul: " + std::string(to_string(mode)) + " needs " + std::to_string(R) +
                                    " weight tiles, got " + std::to_string(weight_tiles.size()));
    const std::size_t D = A.cols();
    if (D == 0) throw std::invalid_argument("core_matmul: empty activation tile");
    if (A.bit_width() > 8)
        throw std::invalid_argument("core_matmul: activations must be at most 8-bit");

    const unsigned ww = weight_width(mode);
    const std::int64_t wmin = min_of(ww);
    const std::int64_t wmax = max_of(ww);
    std::vector<IntMatrix> permuted;
    permuted.reserve(R);
    for (const auto& W : weight_tiles) {
        if (W.rows() != D || W.cols() != D)
            throw std::invalid_argument("core_matmul: weight tile must be " + std::to_string(D) + "x" +
                                        std::to_string(D));
        for (auto v : W.values()) {
            if (v < wmin || v > wmax)
                throw std::out_of_range("core_matmul: weight " + std::to_string(v) + " exceeds " +
                                        std::to_string(ww) + "-bit range of " + std::string(to_string(mode)));
            if (opts.ternary_strict && mode == PrecisionMode::Proj8x2 && v == -2)
                throw std::out_of_range("core_matmul: weight -2 rejected in ternary-strict mode");
        }
        permuted.push_back(permute_weights(W, D));
    }

    const std::size_t M = A.rows();
    const std::size_t padded = (M + D - 1) / D * D;
    std::vector<std::vector<std::int64_t>> acc(R, std::vector<std::int64_t>(padded * D, 0));
    std::vector<std::int64_t> x(D), next(D);
    std::array<std::int64_t, 4> w{};

    for (std::size_t m = 0; m < padded; ++m) {
        // Diagonal injection: PE(0, c) sees a[(-c) mod D]; padded rows are zero.
        for (std::size_t c = 0; c < D; ++c) x[c] = m < M ? A(m, (D - c) % D) : 0;
        for (std::size_t r = 0; r < D; ++r) {
            for (std::size_t c = 0; c < D; ++c) {
                for (std::size_t t = 0; t < R; ++t) w[t] = permuted[t](r, c);
                const auto p = ReconfigurablePe::multiply(x[c], std::span<const std::int64_t>(w.data(), R), mode);
                for (std::size_t t = 0; t < R; ++t) acc[t][m * D + c] += p[t];
            }
            // Activations move one PE down and one PE right, wrapping around.
            for (std::size_t c = 0; c < D; ++c) next[(c + 1) % D] = x[c];
            std::swap(x, next);
        }
    }

    std::vector<IntMatrix> out;
    out.reserve(R);
    for (std::size_t t = 0; t < R; ++t) {
        acc[t].resize(M * D);
        out.emplace_back(M, D, kAccumulatorBits, std::move(acc[t]));
    }
    return out;
}

Cycles core_cycle_count(Count M, PrecisionMode, const ArchConfig& arch) {
    const Count D = arch.core_dim;
    return D * ((M + D - 1) / D + 1) + arch.pipeline_stages + D;
}

IntMatrix reference_matmul(const IntMatrix& A, const IntMatrix& B) {
    if (A.cols() != B.rows()) throw std::invalid_argument("reference_matmul: inner dimensions differ");
    std::vector<std::int64_t> out(A.rows() * B.cols(), 0);
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t k = 0; k < A.cols(); ++k) {
            const auto a = A(i, k);
            for (std::size_t j = 0; j < B.cols(); ++j) out[i * B.cols() + j] += a * B(k, j);
        }
    return IntMatrix(A.rows(), B.cols(), kAccumulatorBits, std::move(out));
}

}  // namespace dlegion

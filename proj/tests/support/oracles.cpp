#include "oracles.hpp"

namespace oracle {

Mat naive_gemm(const Mat& A, const Mat& B) {
    const std::size_t M = A.size(), K = B.size(), N = K ? B[0].size() : 0;
    Mat C(M, std::vector<std::int64_t>(N, 0));
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            std::int64_t s = 0;
            for (std::size_t k = 0; k < K; ++k) s += A[i][k] * B[k][j];
            C[i][j] = s;
        }
    return C;
}

Mat to_mat(const dlegion::IntMatrix& m) {
    Mat out(m.rows(), std::vector<std::int64_t>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
    return out;
}

dlegion::IntMatrix from_mat(const Mat& m, unsigned bits) {
    dlegion::IntMatrix out(m.size(), m.empty() ? 0 : m[0].size(), bits);
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m[i].size(); ++j) out.set(i, j, m[i][j]);
    return out;
}

Mat random_mat(std::size_t rows, std::size_t cols, unsigned bits, std::mt19937_64& rng) {
    const std::int64_t hi = (std::int64_t{1} << (bits - 1)) - 1;
    std::uniform_int_distribution<std::int64_t> d(-hi - 1, hi);
    Mat m(rows, std::vector<std::int64_t>(cols));
    for (auto& row : m)
        for (auto& v : row) v = d(rng);
    return m;
}

Mat apply_book(Mat W, const dlegion::ZeroTileBook& book, std::size_t D, std::size_t R) {
    for (std::size_t k = 0; k < W.size(); ++k)
        for (std::size_t n = 0; n < W[k].size(); ++n)
            if (book.is_zero_tile(n / (R * D), k / D)) W[k][n] = 0;
    return W;
}

std::uint64_t up(std::uint64_t a, std::uint64_t b) { return a / b + (a % b != 0); }

std::uint64_t latency(std::uint64_t M, std::uint64_t K, std::uint64_t N, std::uint64_t D, std::uint64_t C,
                      std::uint64_t P, std::uint64_t R) {
    const auto MT = up(M, D), KT = up(K, C * D), NT = up(N, R * D);
    return KT * NT * (D * (MT + 1) + P) + D;
}

std::uint64_t psum_traffic(std::uint64_t M, std::uint64_t N, std::uint64_t K, std::uint64_t k_tile,
                           std::uint64_t bytes) {
    return M * N * bytes * (2 * up(K, k_tile) - 1);
}

}  // namespace oracle

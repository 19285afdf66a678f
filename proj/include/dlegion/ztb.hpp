#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dlegion/arch_config.hpp"

namespace dlegion {

/// Bitmask of structurally-zero weight tiles for one weight matrix.
///
/// A tile is D rows of K by R*D columns of N (the R interleaved D x D tiles a
/// core holds). Tiles are grouped into windows of C consecutive k-tiles, one
/// per core. Bits are stored core-major within a window, windows in schedule
/// order (n outer, k-chunk inner):
///
///     bit(n, chunk, core) = (n * k_chunks + chunk) * C + core
///
/// The last window of a column may extend past k_tiles_raw; those padding
/// positions hold no data and are ignored when classifying the window.
class ZeroTileBook {
public:
    static constexpr std::uint32_t kVersion = 1;

    ZeroTileBook() = default;
    ZeroTileBook(Count k_tiles_raw, Count n_tiles, Count cores);

    /// All-dense book for `K x N` weights at the given tiling.
    static ZeroTileBook dense(Count K, Count N, Count core_dim, Count cores, unsigned ratio);
    /// Each window is made fully sparse with probability `rate` (all of its
    /// present tiles marked zero); the rest stay dense. Deterministic in `seed`.
    static ZeroTileBook random_windows(Count k_tiles_raw, Count n_tiles, Count cores, double rate,
                                       std::uint64_t seed);

    Count k_tiles_raw() const noexcept { return k_tiles_raw_; }
    Count n_tiles() const noexcept { return n_tiles_; }
    Count cores() const noexcept { return cores_; }
    Count k_chunks() const noexcept { return cores_ ? (k_tiles_raw_ + cores_ - 1) / cores_ : 0; }
    Count bit_count() const noexcept { return n_tiles_ * k_chunks() * cores_; }
    Count window_count() const noexcept { return n_tiles_ * k_chunks(); }

    bool present(Count chunk, Count core) const noexcept { return chunk * cores_ + core < k_tiles_raw_; }
    bool is_zero(Count n, Count chunk, Count core) const;
    void set_zero(Count n, Count chunk, Count core, bool zero = true);
    /// Marks the raw k-tile `k` of column `n`.
    void set_zero_tile(Count n, Count k, bool zero = true) { set_zero(n, k / cores_, k % cores_, zero); }
    bool is_zero_tile(Count n, Count k) const { return is_zero(n, k / cores_, k % cores_); }

    /// Every present tile of the window is zero.
    bool window_fully_sparse(Count n, Count chunk) const;
    /// Some but not all present tiles are zero.
    bool window_partially_sparse(Count n, Count chunk) const;
    /// Bit c set when core c holds a zero (or absent) tile.
    std::uint64_t zero_core_mask(Count n, Count chunk) const;
    Count fully_sparse_windows() const;

    /// Columns [first, first + count) of this book, for one Legion's N slice.
    ZeroTileBook slice_columns(Count first, Count count) const;

    /// Little-endian: "ZTB\0", u32 version, u32 k_tiles_raw, u32 n_tiles,
    /// u32 cores, then ceil(bits/8) bytes, bit i at byte i/8, position i%8.
    std::vector<std::uint8_t> serialize() const;
    static ZeroTileBook deserialize(const std::vector<std::uint8_t>& bytes);
    void save(const std::string& path) const;
    static ZeroTileBook load(const std::string& path);

    friend bool operator==(const ZeroTileBook&, const ZeroTileBook&) = default;

private:
    Count index(Count n, Count chunk, Count core) const;

    Count k_tiles_raw_ = 0;
    Count n_tiles_ = 0;
    Count cores_ = 0;
    std::vector<bool> bits_;
};

}  // namespace dlegion

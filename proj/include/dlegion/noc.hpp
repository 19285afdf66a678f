#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>

#include "dlegion/arch_config.hpp"

namespace dlegion {

enum class LinkId : std::uint8_t { Weights = 0, Activations = 1, Psums = 2 };

inline constexpr std::size_t kLinkCount = 3;

/// Routing prefix [LEGION_ID:6 | CORE_ID:3 | LINK_ID:2], plus an optional
/// multicast Legion bitmask.
struct NocAddress {
    std::uint32_t legion_id = 0;
    std::uint32_t core_id = 0;
    LinkId link = LinkId::Weights;
    bool multicast = false;
    std::uint64_t legion_mask = 0;

    /// Throws std::out_of_range if an id exceeds its field or the arch.
    void validate(const ArchConfig& arch) const;

    std::uint16_t prefix() const noexcept {
        return static_cast<std::uint16_t>((legion_id << 5) | (core_id << 2) | static_cast<unsigned>(link));
    }
    static NocAddress from_prefix(std::uint16_t prefix) noexcept;

    friend bool operator==(const NocAddress&, const NocAddress&) = default;
};

/// Identity of a tile fetch. Two Legions asking for the same key share one
/// off-chip access; `epoch` separates repeated streaming of the same tile.
struct TileKey {
    std::uint64_t matrix = 0;
    std::uint32_t row_tile = 0;
    std::uint32_t col_tile = 0;
    std::uint64_t epoch = 0;

    friend bool operator==(const TileKey&, const TileKey&) = default;
};

struct TileKeyHash {
    std::size_t operator()(const TileKey& k) const noexcept {
        std::uint64_t h = k.matrix * 0x9E3779B97F4A7C15ULL;
        h ^= (std::uint64_t{k.row_tile} << 32 | k.col_tile) + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
        h ^= k.epoch * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

struct LinkTraffic {
    std::array<std::uint64_t, kLinkCount> off_chip{};
    std::array<std::uint64_t, kLinkCount> delivered{};

    std::uint64_t off_chip_total() const noexcept { return off_chip[0] + off_chip[1] + off_chip[2]; }
    std::uint64_t delivered_total() const noexcept { return delivered[0] + delivered[1] + delivered[2]; }
    LinkTraffic& operator+=(const LinkTraffic& o) noexcept;
    friend bool operator==(const LinkTraffic&, const LinkTraffic&) = default;
};

/// Per-link byte accounting with multicast: the first request for a key is
/// an off-chip fetch; every request is one on-chip delivery.
class NocLedger {
public:
    void deliver(const TileKey& key, LinkId link, std::uint64_t bytes, std::uint32_t legion);

    const LinkTraffic& traffic() const noexcept { return traffic_; }

    /// Destination Legions that have received `key` so far.
    std::uint64_t destinations(const TileKey& key) const;
    std::size_t live_keys() const noexcept { return keys_.size(); }

    /// Sum over live keys of bytes x fan-out; equals the delivered bytes
    /// recorded since the last flush.
    std::uint64_t fanout_weighted_bytes() const noexcept;
    std::uint64_t delivered_since_flush() const noexcept { return delivered_since_flush_; }

    /// Forgets key identities (keeps totals). Called at stage barriers, after
    /// which no tile can be shared.
    void flush();

private:
    struct Entry {
        std::uint64_t bytes = 0;
        std::uint64_t deliveries = 0;
        std::uint64_t legions = 0;
        LinkId link = LinkId::Weights;
    };
    std::unordered_map<TileKey, Entry, TileKeyHash> keys_;
    LinkTraffic traffic_;
    std::uint64_t delivered_since_flush_ = 0;
};

}  // namespace dlegion

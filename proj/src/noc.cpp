#include "dlegion/noc.hpp"

#include <stdexcept>
#include <string>

namespace dlegion {

void NocAddress::validate(const ArchConfig& arch) const {
    if (legion_id >= 64 || legion_id >= arch.legions)
        throw std::out_of_range("NocAddress: legion_id " + std::to_string(legion_id) + " out of range");
    if (core_id >= 8 || core_id >= arch.cores_per_legion)
        throw std::out_of_range("NocAddress: core_id " + std::to_string(core_id) + " out of range");
    if (static_cast<unsigned>(link) >= kLinkCount) throw std::out_of_range("NocAddress: link_id out of range");
    if (multicast) {
        const std::uint64_t allowed = arch.legions >= 64 ? ~0ULL : ((1ULL << arch.legions) - 1);
        if (legion_mask == 0 || (legion_mask & ~allowed))
            throw std::out_of_range("NocAddress: multicast mask names inactive Legions");
    }
}

NocAddress NocAddress::from_prefix(std::uint16_t prefix) noexcept {
    NocAddress a;
    a.legion_id = (prefix >> 5) & 0x3FU;
    a.core_id = (prefix >> 2) & 0x7U;
    a.link = static_cast<LinkId>(prefix & 0x3U);
    return a;
}

LinkTraffic& LinkTraffic::operator+=(const LinkTraffic& o) noexcept {
    for (std::size_t i = 0; i < kLinkCount; ++i) {
        off_chip[i] += o.off_chip[i];
        delivered[i] += o.delivered[i];
    }
    return *this;
}

void NocLedger::deliver(const TileKey& key, LinkId link, std::uint64_t bytes, std::uint32_t legion) {
    auto [it, fresh] = keys_.try_emplace(key);
    Entry& e = it->second;
    const auto li = static_cast<std::size_t>(link);
    if (fresh) {
        e.bytes = bytes;
        e.link = link;
        traffic_.off_chip[li] += bytes;
    } else if (e.bytes != bytes || e.link != link) {
        throw std::logic_error("NocLedger: tile key reused with a different size or link");
    }
    ++e.deliveries;
    e.legions |= std::uint64_t{1} << (legion & 63U);
    traffic_.delivered[li] += bytes;
    delivered_since_flush_ += bytes;
}

std::uint64_t NocLedger::destinations(const TileKey& key) const {
    auto it = keys_.find(key);
    return it == keys_.end() ? 0 : it->second.legions;
}

std::uint64_t NocLedger::fanout_weighted_bytes() const noexcept {
    std::uint64_t sum = 0;
    for (const auto& [key, e] : keys_) sum += e.bytes * e.deliveries;
    return sum;
}

void NocLedger::flush() {
    keys_.clear();
    delivered_since_flush_ = 0;
}

}  // namespace dlegion

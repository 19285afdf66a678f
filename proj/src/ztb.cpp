#include "dlegion/ztb.hpp"

#include <fstream>
#include <iterator>
#include <random>
#include <stdexcept>

namespace dlegion {

ZeroTileBook::ZeroTileBook(Count k_tiles_raw, Count n_tiles, Count cores)
    : k_tiles_raw_(k_tiles_raw), n_tiles_(n_tiles), cores_(cores) {
    if (k_tiles_raw == 0 || n_tiles == 0 || cores == 0 || cores > 64)
        throw std::invalid_argument("ZeroTileBook: dimensions must be positive and cores ≤ 64");
    bits_.assign(bit_count(), false);
}

ZeroTileBook ZeroTileBook::dense(Count K, Count N, Count core_dim, Count cores, unsigned ratio) {
    return ZeroTileBook((K + core_dim - 1) / core_dim, (N + ratio * core_dim - 1) / (ratio * core_dim), cores);
}

ZeroTileBook ZeroTileBook::random_windows(Count k_tiles_raw, Count n_tiles, Count cores, double rate,
                                          std::uint64_t seed) {
    ZeroTileBook book(k_tiles_raw, n_tiles, cores);
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution sparse(rate);
    for (Count n = 0; n < n_tiles; ++n)
        for (Count chunk = 0; chunk < book.k_chunks(); ++chunk)
            if (sparse(rng))
                for (Count c = 0; c < cores; ++c)
                    if (book.present(chunk, c)) book.set_zero(n, chunk, c);
    return book;
}

Count ZeroTileBook::index(Count n, Count chunk, Count core) const {
    if (n >= n_tiles_ || chunk >= k_chunks() || core >= cores_)
        throw std::out_of_range("ZeroTileBook: tile index out of range");
    return (n * k_chunks() + chunk) * cores_ + core;
}

bool ZeroTileBook::is_zero(Count n, Count chunk, Count core) const { return bits_[index(n, chunk, core)]; }

void ZeroTileBook::set_zero(Count n, Count chunk, Count core, bool zero) { bits_[index(n, chunk, core)] = zero; }

bool ZeroTileBook::window_fully_sparse(Count n, Count chunk) const {
    for (Count c = 0; c < cores_; ++c)
        if (present(chunk, c) && !is_zero(n, chunk, c)) return false;
    return true;
}

bool ZeroTileBook::window_partially_sparse(Count n, Count chunk) const {
    bool any = false;
    for (Count c = 0; c < cores_; ++c)
        if (present(chunk, c) && is_zero(n, chunk, c)) any = true;
    return any && !window_fully_sparse(n, chunk);
}

std::uint64_t ZeroTileBook::zero_core_mask(Count n, Count chunk) const {
    std::uint64_t mask = 0;
    for (Count c = 0; c < cores_; ++c)
        if (!present(chunk, c) || is_zero(n, chunk, c)) mask |= std::uint64_t{1} << c;
    return mask;
}

Count ZeroTileBook::fully_sparse_windows() const {
    Count count = 0;
    for (Count n = 0; n < n_tiles_; ++n)
        for (Count chunk = 0; chunk < k_chunks(); ++chunk) count += window_fully_sparse(n, chunk);
    return count;
}

ZeroTileBook ZeroTileBook::slice_columns(Count first, Count count) const {
    if (count == 0 || first + count > n_tiles_) throw std::out_of_range("ZeroTileBook: column slice out of range");
    ZeroTileBook out(k_tiles_raw_, count, cores_);
    for (Count n = 0; n < count; ++n)
        for (Count chunk = 0; chunk < k_chunks(); ++chunk)
            for (Count c = 0; c < cores_; ++c) out.set_zero(n, chunk, c, is_zero(first + n, chunk, c));
    return out;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{in[at + i]} << (8 * i);
    return v;
}

constexpr std::size_t kHeaderBytes = 20;

}  // namespace

std::vector<std::uint8_t> ZeroTileBook::serialize() const {
    std::vector<std::uint8_t> out = {'Z', 'T', 'B', 0};
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(k_tiles_raw_));
    put_u32(out, static_cast<std::uint32_t>(n_tiles_));
    put_u32(out, static_cast<std::uint32_t>(cores_));
    std::vector<std::uint8_t> packed((bits_.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) packed[i / 8] |= static_cast<std::uint8_t>(1U << (i % 8));
    out.insert(out.end(), packed.begin(), packed.end());
    return out;
}

ZeroTileBook ZeroTileBook::deserialize(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kHeaderBytes || bytes[0] != 'Z' || bytes[1] != 'T' || bytes[2] != 'B' || bytes[3] != 0)
        throw std::runtime_error("zero-tile book: bad magic");
    if (get_u32(bytes, 4) != kVersion)
        throw std::runtime_error("zero-tile book: unsupported version " + std::to_string(get_u32(bytes, 4)));
    ZeroTileBook book(get_u32(bytes, 8), get_u32(bytes, 12), get_u32(bytes, 16));
    const std::size_t payload = (book.bits_.size() + 7) / 8;
    if (bytes.size() != kHeaderBytes + payload)
        throw std::runtime_error("zero-tile book: expected " + std::to_string(payload) + " payload bytes, found " +
                                 std::to_string(bytes.size() - kHeaderBytes));
    for (std::size_t i = 0; i < book.bits_.size(); ++i)
        book.bits_[i] = (bytes[kHeaderBytes + i / 8] >> (i % 8)) & 1U;
    return book;
}

void ZeroTileBook::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    const auto bytes = serialize();
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ZeroTileBook ZeroTileBook::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace dlegion

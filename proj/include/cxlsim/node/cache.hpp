#pragma once

#include "cxlsim/memnet/request.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace cxlsim::node
{
    struct CacheGeometry
    {
        std::uint64_t size = 32 * 1024;
        std::uint32_t associativity = 8;
        std::uint32_t hit_latency = 4; // cycles

        void validate(const char *name) const;
        std::uint64_t sets() const noexcept { return size / (std::uint64_t{associativity} * kLineBytes); }
        bool operator==(const CacheGeometry &) const = default;
    };

    /// Set-associative, write-back, write-allocate cache with true LRU replacement. Tracks tags
    /// only; data lives in the backing stores.
    class Cache
    {
    public:
        explicit Cache(const CacheGeometry &geometry);

        struct Victim
        {
            std::uint64_t line;
            bool dirty;
        };
        struct Result
        {
            bool hit;
            std::optional<Victim> victim;
        };

        /// Demand access: a hit moves the line to MRU, a miss installs it at MRU evicting the LRU
        /// way. Writes mark the line dirty.
        Result access(std::uint64_t addr, AccessKind kind);

        bool probe(std::uint64_t addr) const;
        /// Touches a present line (MRU, optional dirty). Returns whether it was tagged prefetched,
        /// and clears that tag.
        bool touch(std::uint64_t addr, bool write);
        /// Fills a line without counting a demand access. No-op (except dirty/MRU) if present.
        std::optional<Victim> install(std::uint64_t addr, bool dirty, bool prefetched = false);
        /// Drops the line; returns its dirty bit if it was present.
        std::optional<bool> invalidate(std::uint64_t addr);
        /// Drops every line, appending dirty ones to `dirty` when given.
        void flush(std::vector<std::uint64_t> *dirty = nullptr);

        const CacheGeometry &geometry() const noexcept { return geo_; }
        std::uint64_t hits() const noexcept { return hits_; }
        std::uint64_t misses() const noexcept { return misses_; }

    private:
        struct Way
        {
            std::uint64_t line = 0;
            std::uint64_t stamp = 0;
            bool valid = false;
            bool dirty = false;
            bool prefetched = false;
        };

        std::size_t set_of(std::uint64_t line) const noexcept { return static_cast<std::size_t>(line & set_mask_); }
        Way *find(std::uint64_t line);
        const Way *find(std::uint64_t line) const;
        Way &victim_way(std::uint64_t line);

        CacheGeometry geo_;
        std::uint64_t set_mask_;
        std::vector<Way> ways_;
        std::uint64_t clock_ = 0;
        std::uint64_t hits_ = 0;
        std::uint64_t misses_ = 0;
    };

} // namespace cxlsim::node

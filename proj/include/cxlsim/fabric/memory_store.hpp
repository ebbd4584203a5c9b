#pragma once

#include "cxlsim/memnet/request.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

namespace cxlsim::fabric
{
    /// Sparse byte-addressable backing store organised in 4 KiB pages.
    ///
    /// Pages come into existence only through `materialize`, which happens during setup and the
    /// functional phase. During timing simulation the page table is never modified, so
    /// partitions may access disjoint bytes concurrently.
    class MemoryStore
    {
    public:
        using Page = std::array<std::byte, kPageBytes>;

        /// Creates the page holding `addr` if absent. With `zero`, an existing page is cleared.
        void materialize(std::uint64_t addr, bool zero = false);
        bool has_page(std::uint64_t addr) const { return pages_.contains(addr / kPageBytes); }

        void read(std::uint64_t addr, std::span<std::byte> out) const;
        void write(std::uint64_t addr, std::span<const std::byte> in);

        template <class T>
        T load(std::uint64_t addr) const
        {
            T v;
            read(addr, std::as_writable_bytes(std::span<T, 1>(&v, 1)));
            return v;
        }
        template <class T>
        void store(std::uint64_t addr, const T &v)
        {
            write(addr, std::as_bytes(std::span<const T, 1>(&v, 1)));
        }

        std::size_t page_count() const noexcept { return pages_.size(); }
        /// Page indices in ascending order.
        std::vector<std::uint64_t> page_indices() const;
        const Page &page(std::uint64_t index) const;
        Page &page(std::uint64_t index);

        /// CRC-32 over the bytes of [start, end); absent pages read as zero.
        std::uint32_t checksum(std::uint64_t start, std::uint64_t end) const;

        void clear() { pages_.clear(); }

    private:
        std::unordered_map<std::uint64_t, std::unique_ptr<Page>> pages_;
    };

} // namespace cxlsim::fabric

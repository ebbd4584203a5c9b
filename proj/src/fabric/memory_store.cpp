#include "cxlsim/fabric/memory_store.hpp"

#include "cxlsim/errors.hpp"

#include <algorithm>
#include <zlib.h>

namespace cxlsim::fabric
{
    void MemoryStore::materialize(std::uint64_t addr, bool zero)
    {
        auto &slot = pages_[addr / kPageBytes];
        if (!slot)
            slot = std::make_unique<Page>(Page{});
        else if (zero)
            slot->fill(std::byte{0});
    }

    void MemoryStore::read(std::uint64_t addr, std::span<std::byte> out) const
    {
        while (!out.empty())
        {
            const std::uint64_t offset = addr % kPageBytes;
            const std::size_t chunk = std::min<std::size_t>(out.size(), kPageBytes - offset);
            auto it = pages_.find(addr / kPageBytes);
            if (it == pages_.end())
                throw UnmappedAddress("backing store has no page at physical address " + std::to_string(addr));
            std::memcpy(out.data(), it->second->data() + offset, chunk);
            out = out.subspan(chunk);
            addr += chunk;
        }
    }

    void MemoryStore::write(std::uint64_t addr, std::span<const std::byte> in)
    {
        while (!in.empty())
        {
            const std::uint64_t offset = addr % kPageBytes;
            const std::size_t chunk = std::min<std::size_t>(in.size(), kPageBytes - offset);
            auto it = pages_.find(addr / kPageBytes);
            if (it == pages_.end())
                throw UnmappedAddress("backing store has no page at physical address " + std::to_string(addr));
            std::memcpy(it->second->data() + offset, in.data(), chunk);
            in = in.subspan(chunk);
            addr += chunk;
        }
    }

    std::vector<std::uint64_t> MemoryStore::page_indices() const
    {
        std::vector<std::uint64_t> out;
        out.reserve(pages_.size());
        for (const auto &[idx, _] : pages_)
            out.push_back(idx);
        std::sort(out.begin(), out.end());
        return out;
    }

    const MemoryStore::Page &MemoryStore::page(std::uint64_t index) const
    {
        auto it = pages_.find(index);
        if (it == pages_.end())
            throw UnmappedAddress("no page with index " + std::to_string(index));
        return *it->second;
    }

    MemoryStore::Page &MemoryStore::page(std::uint64_t index)
    {
        auto it = pages_.find(index);
        if (it == pages_.end())
            throw UnmappedAddress("no page with index " + std::to_string(index));
        return *it->second;
    }

    std::uint32_t MemoryStore::checksum(std::uint64_t start, std::uint64_t end) const
    {
        static const Page zeros{};
        uLong crc = crc32(0L, Z_NULL, 0);
        for (std::uint64_t addr = start; addr < end;)
        {
            const std::uint64_t offset = addr % kPageBytes;
            const std::uint64_t chunk = std::min<std::uint64_t>(end - addr, kPageBytes - offset);
            auto it = pages_.find(addr / kPageBytes);
            const Page &p = it == pages_.end() ? zeros : *it->second;
            crc = crc32(crc, reinterpret_cast<const Bytef *>(p.data() + offset), static_cast<uInt>(chunk));
            addr += chunk;
        }
        return static_cast<std::uint32_t>(crc);
    }

} // namespace cxlsim::fabric

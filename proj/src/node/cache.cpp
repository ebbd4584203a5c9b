#include "cxlsim/node/cache.hpp"

#include "cxlsim/errors.hpp"

#include <bit>

namespace cxlsim::node
{
    void CacheGeometry::validate(const char *name) const
    {
        const std::string n(name);
        if (associativity == 0)
            throw InvalidArgument(n + ".associativity must be >= 1");
        if (!std::has_single_bit(size))
            throw InvalidArgument(n + ".size must be a power of two");
        if (size < std::uint64_t{associativity} * kLineBytes || !std::has_single_bit(sets()))
            throw InvalidArgument(n + ": size / (associativity x 64) must be a power of two >= 1");
    }

    Cache::Cache(const CacheGeometry &geometry)
        : geo_(geometry), set_mask_(geometry.sets() - 1), ways_(geometry.sets() * geometry.associativity)
    {
        geo_.validate("cache");
    }

    Cache::Way *Cache::find(std::uint64_t line)
    {
        Way *set = &ways_[set_of(line) * geo_.associativity];
        for (std::uint32_t w = 0; w < geo_.associativity; ++w)
        {
            if (set[w].valid && set[w].line == line)
                return &set[w];
        }
        return nullptr;
    }

    const Cache::Way *Cache::find(std::uint64_t line) const { return const_cast<Cache *>(this)->find(line); }

    Cache::Way &Cache::victim_way(std::uint64_t line)
    {
        Way *set = &ways_[set_of(line) * geo_.associativity];
        Way *best = &set[0];
        for (std::uint32_t w = 0; w < geo_.associativity; ++w)
        {
            if (!set[w].valid)
                return set[w];
            if (set[w].stamp < best->stamp)
                best = &set[w];
        }
        return *best;
    }

    Cache::Result Cache::access(std::uint64_t addr, AccessKind kind)
    {
        const std::uint64_t line = addr / kLineBytes;
        if (Way *w = find(line))
        {
            ++hits_;
            w->stamp = ++clock_;
            w->dirty = w->dirty || kind == AccessKind::Write;
            w->prefetched = false;
            return Result{true, std::nullopt};
        }
        ++misses_;
        return Result{false, install(addr, kind == AccessKind::Write)};
    }

    bool Cache::probe(std::uint64_t addr) const { return find(addr / kLineBytes) != nullptr; }

    bool Cache::touch(std::uint64_t addr, bool write)
    {
        Way *w = find(addr / kLineBytes);
        if (w == nullptr)
            return false;
        w->stamp = ++clock_;
        w->dirty = w->dirty || write;
        const bool was_prefetched = w->prefetched;
        w->prefetched = false;
        return was_prefetched;
    }

    std::optional<Cache::Victim> Cache::install(std::uint64_t addr, bool dirty, bool prefetched)
    {
        const std::uint64_t line = addr / kLineBytes;
        if (Way *w = find(line))
        {
            w->stamp = ++clock_;
            w->dirty = w->dirty || dirty;
            return std::nullopt;
        }
        Way &w = victim_way(line);
        std::optional<Victim> out;
        if (w.valid)
            out = Victim{w.line * kLineBytes, w.dirty};
        w = Way{line, ++clock_, true, dirty, prefetched};
        return out;
    }

    std::optional<bool> Cache::invalidate(std::uint64_t addr)
    {
        Way *w = find(addr / kLineBytes);
        if (w == nullptr)
            return std::nullopt;
        const bool dirty = w->dirty;
        *w = Way{};
        return dirty;
    }

    void Cache::flush(std::vector<std::uint64_t> *dirty)
    {
        for (auto &w : ways_)
        {
            if (w.valid && w.dirty && dirty != nullptr)
                dirty->push_back(w.line * kLineBytes);
            w = Way{};
        }
    }

} // namespace cxlsim::node

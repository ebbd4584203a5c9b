#pragma once

#include "cxlsim/fabric/fabric.hpp"
#include "cxlsim/fabric/memory_store.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace cxlsim::fabric
{
    enum class Region : std::uint8_t
    {
        Local,
        Remote,
    };

    std::string to_string(Region r);

    enum class PolicyKind : std::uint8_t
    {
        MemBindLocal,
        MemBindRemote,
        Interleave,
        PreferredLocal,
    };

    std::string to_string(PolicyKind k);

    struct PagePolicy
    {
        PolicyKind kind = PolicyKind::MemBindLocal;
        std::vector<Region> interleave_set{};
        // PreferredLocal only: probability that a page spills remotely while local frames remain.
        double early_spill_probability = 0.0;

        static PagePolicy bind_local() { return {PolicyKind::MemBindLocal, {}, 0.0}; }
        static PagePolicy bind_remote() { return {PolicyKind::MemBindRemote, {}, 0.0}; }
        static PagePolicy interleave(std::vector<Region> set = {Region::Local, Region::Remote})
        {
            return {PolicyKind::Interleave, std::move(set), 0.0};
        }
        static PagePolicy preferred_local(double early_spill = 0.0)
        {
            return {PolicyKind::PreferredLocal, {}, early_spill};
        }

        /// Throws InvalidArgument when the policy is malformed.
        void validate() const;
        bool operator==(const PagePolicy &) const = default;
    };

    struct PageEntry
    {
        Region region = Region::Local;
        std::uint64_t phys = 0; // page-aligned physical address
        Access access = Access::ReadWrite;
        bool operator==(const PageEntry &) const = default;
    };

    struct Translation
    {
        Region region;
        std::uint64_t paddr;
        Access access;
    };

    struct Placement
    {
        Region region;
        std::uint64_t phys;
        bool operator==(const Placement &) const = default;
    };

    struct Allocation
    {
        std::uint64_t vbase = 0;
        std::vector<Placement> pages;
    };

    /// Per-host virtual-to-physical page table plus the host's physical frame pools: local DRAM
    /// frames in [0, local_capacity) and remote frames inside the host's pooled bindings.
    class PageMap
    {
    public:
        static constexpr std::uint64_t kVirtualBase = std::uint64_t{1} << 36;

        PageMap(HostId host, std::uint64_t local_capacity);

        HostId host() const noexcept { return host_; }
        std::uint64_t local_capacity() const noexcept { return local_capacity_; }

        /// Makes a pooled ReadWrite binding of this host allocatable as remote frames.
        void add_remote_slice(const Binding &binding);
        bool has_remote_slice() const noexcept { return !slices_.empty(); }

        std::uint64_t local_free_pages() const noexcept;
        std::uint64_t remote_free_pages() const noexcept;
        std::uint64_t mapped_bytes(Region r) const noexcept;

        std::optional<std::uint64_t> take_frame(Region r);
        std::uint64_t reserve_virtual(std::uint64_t npages);

        void map(std::uint64_t vpage, const PageEntry &entry);
        /// Maps the binding's device range at `vbase` with the binding's access mode.
        void map_binding(std::uint64_t vbase, const Binding &binding);

        Translation translate(std::uint64_t vaddr) const;
        const PageEntry *find(std::uint64_t vaddr) const;

        /// Entries sorted by virtual page index.
        std::vector<std::pair<std::uint64_t, PageEntry>> entries() const;

        struct FrameCursor
        {
            AddrRange slice;
            std::uint64_t next;
        };
        struct State
        {
            std::vector<std::pair<std::uint64_t, PageEntry>> entries;
            std::uint64_t local_next = 0;
            std::uint64_t virtual_next = kVirtualBase;
            std::vector<FrameCursor> slices;
        };
        State state() const;
        void restore(const State &s);

    private:
        HostId host_;
        std::uint64_t local_capacity_;
        std::uint64_t local_next_ = 0;
        std::uint64_t virtual_next_ = kVirtualBase;
        std::vector<FrameCursor> slices_;
        std::unordered_map<std::uint64_t, PageEntry> entries_;
        std::unordered_set<std::uint64_t> used_frames_[2];
        std::uint64_t mapped_pages_[2] = {0, 0};
    };

    /// Allocates `npages` fresh virtual pages and places each on a physical frame per `policy`.
    /// Nothing is mapped if the request cannot be satisfied.
    Allocation allocate_pages(PageMap &map, const PagePolicy &policy, std::uint64_t npages,
                              std::mt19937_64 *rng = nullptr);

    /// Functional view of one host's memory: translation plus data access to the host's local
    /// store and the shared device store.
    class HostMemory
    {
    public:
        HostMemory(PageMap &map, MemoryStore &local, MemoryStore &device)
            : map_(&map), local_(&local), device_(&device)
        {
        }

        /// Allocates and zero-fills (`bytes` rounded up to whole pages).
        Allocation allocate(std::uint64_t bytes, const PagePolicy &policy, std::mt19937_64 *rng = nullptr);

        Translation translate(std::uint64_t vaddr) const { return map_->translate(vaddr); }

        template <class T>
        T load(std::uint64_t vaddr) const
        {
            const Translation t = map_->translate(vaddr);
            return store_for(t.region).template load<T>(t.paddr);
        }

        template <class T>
        void store(std::uint64_t vaddr, const T &value)
        {
            const Translation t = map_->translate(vaddr);
            if (t.access == Access::ReadOnly)
                throw_read_only(vaddr);
            store_for(t.region).store(t.paddr, value);
        }

        PageMap &page_map() noexcept { return *map_; }
        const PageMap &page_map() const noexcept { return *map_; }
        MemoryStore &store_for(Region r) const { return r == Region::Local ? *local_ : *device_; }

    private:
        [[noreturn]] void throw_read_only(std::uint64_t vaddr) const;

        PageMap *map_;
        MemoryStore *local_;
        MemoryStore *device_;
    };

} // namespace cxlsim::fabric

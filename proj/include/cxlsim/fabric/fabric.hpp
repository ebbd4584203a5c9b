#pragma once

#include "cxlsim/memnet/request.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cxlsim::fabric
{
    /// Half-open, page-aligned byte range.
    struct AddrRange
    {
        std::uint64_t start = 0;
        std::uint64_t end = 0;

        /// Validating constructor: start < end, both page aligned.
        static AddrRange make(std::uint64_t start, std::uint64_t end);

        std::uint64_t size() const noexcept { return end - start; }
        bool contains(std::uint64_t addr) const noexcept { return addr >= start && addr < end; }
        bool overlaps(const AddrRange &o) const noexcept { return start < o.end && o.start < end; }
        bool within(const AddrRange &o) const noexcept { return start >= o.start && end <= o.end; }
        bool operator==(const AddrRange &) const = default;
    };

    enum class BindMode : std::uint8_t
    {
        Pooled,
        Shared,
    };

    enum class Access : std::uint8_t
    {
        ReadWrite,
        ReadOnly,
    };

    struct Binding
    {
        std::uint32_t id = 0;
        HostId host = 0;
        AddrRange hpa;
        AddrRange dpa;
        BindMode mode = BindMode::Pooled;
        Access access = Access::ReadWrite;

        bool operator==(const Binding &) const = default;
    };

    std::string to_string(BindMode m);
    std::string to_string(Access a);

    /// Fabric manager for one memory device. Host physical ranges map onto device ranges by
    /// identity, so hpa == dpa for every binding.
    class FabricManager
    {
    public:
        FabricManager(std::uint64_t device_base, std::uint64_t capacity);

        /// First-fit exclusive slice of `size` bytes.
        Binding bind_pooled(HostId host, std::uint64_t size);
        /// Exclusive slice at an explicit device range.
        Binding bind_pooled(HostId host, AddrRange range);

        /// One ReadWrite binding for `writer` followed by ReadOnly bindings for `readers`, all
        /// aliasing `segment`.
        std::vector<Binding> bind_shared(AddrRange segment, HostId writer, std::span<const HostId> readers);
        /// Adds a ReadOnly mapping of an existing shared segment.
        Binding add_shared_reader(AddrRange segment, HostId reader);

        void unbind(std::uint32_t binding_id);

        std::uint64_t capacity() const noexcept { return capacity_; }
        std::uint64_t free_bytes() const;
        AddrRange device_range() const noexcept { return AddrRange{base_, base_ + capacity_}; }

        const std::vector<Binding> &bindings() const noexcept { return bindings_; }
        std::vector<Binding> bindings_for(HostId host) const;
        std::optional<Binding> find(std::uint32_t id) const;

        /// Restores a binding table verbatim (checkpoint restore). Re-validates invariants.
        void restore(std::vector<Binding> bindings, std::uint32_t next_id);
        std::uint32_t next_id() const noexcept { return next_id_; }

    private:
        void check_in_device(const AddrRange &r) const;
        std::vector<AddrRange> occupied() const;
        void check_invariants() const;

        std::uint64_t base_;
        std::uint64_t capacity_;
        std::vector<Binding> bindings_;
        std::uint32_t next_id_ = 1;
    };

} // namespace cxlsim::fabric

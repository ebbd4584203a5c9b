#include "cxlsim/fabric/fabric.hpp"

#include "cxlsim/errors.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace cxlsim::fabric
{
    namespace
    {
        std::string hex(std::uint64_t v)
        {
            std::ostringstream os;
            os << "0x" << std::hex << v;
            return os.str();
        }

        std::string describe(const AddrRange &r) { return "[" + hex(r.start) + ", " + hex(r.end) + ")"; }
    } // namespace

    AddrRange AddrRange::make(std::uint64_t start, std::uint64_t end)
    {
        if (start >= end)
            throw InvalidArgument("address range " + describe({start, end}) + " is empty");
        if (start % kPageBytes != 0 || end % kPageBytes != 0)
            throw InvalidArgument("address range " + describe({start, end}) + " is not page aligned");
        return AddrRange{start, end};
    }

    std::string to_string(BindMode m) { return m == BindMode::Pooled ? "pooled" : "shared"; }
    std::string to_string(Access a) { return a == Access::ReadWrite ? "rw" : "ro"; }

    FabricManager::FabricManager(std::uint64_t device_base, std::uint64_t capacity)
        : base_(device_base), capacity_(capacity)
    {
        if (capacity == 0 || capacity % kPageBytes != 0 || device_base % kPageBytes != 0)
            throw InvalidArgument("device base and capacity must be non-zero multiples of the page size");
    }

    void FabricManager::check_in_device(const AddrRange &r) const
    {
        if (!r.within(device_range()))
            throw CapacityExceeded("range " + describe(r) + " lies outside device " + describe(device_range()));
    }

    std::vector<AddrRange> FabricManager::occupied() const
    {
        std::vector<AddrRange> out;
        for (const auto &b : bindings_)
        {
            if (b.mode == BindMode::Pooled || b.access == Access::ReadWrite)
                out.push_back(b.dpa);
        }
        // Shared segments may have lost their writer through unbind; readers still pin them.
        for (const auto &b : bindings_)
        {
            if (b.mode == BindMode::Shared && b.access == Access::ReadOnly &&
                std::none_of(out.begin(), out.end(), [&](const AddrRange &r) { return r == b.dpa; }))
            {
                out.push_back(b.dpa);
            }
        }
        std::sort(out.begin(), out.end(), [](const AddrRange &a, const AddrRange &b) { return a.start < b.start; });
        return out;
    }

    std::uint64_t FabricManager::free_bytes() const
    {
        std::uint64_t used = 0;
        for (const auto &r : occupied())
            used += r.size();
        return capacity_ - used;
    }

    Binding FabricManager::bind_pooled(HostId host, std::uint64_t size)
    {
        if (size == 0 || size % kPageBytes != 0)
            throw InvalidArgument("pooled size " + std::to_string(size) + " is not a positive multiple of the page size");
        std::uint64_t cursor = base_;
        for (const auto &r : occupied())
        {
            if (r.start >= cursor && r.start - cursor >= size)
                break;
            cursor = std::max(cursor, r.end);
        }
        if (cursor + size > base_ + capacity_ || cursor + size < cursor)
        {
            throw CapacityExceeded("device cannot fit a pooled slice of " + std::to_string(size) + " bytes (" +
                                   std::to_string(free_bytes()) + " bytes free)");
        }
        return bind_pooled(host, AddrRange{cursor, cursor + size});
    }

    Binding FabricManager::bind_pooled(HostId host, AddrRange range)
    {
        range = AddrRange::make(range.start, range.end);
        check_in_device(range);
        for (const auto &b : bindings_)
        {
            if (b.dpa.overlaps(range))
            {
                throw OverlapWithExistingBinding("pooled range " + describe(range) + " overlaps binding " +
                                                 std::to_string(b.id) + " " + describe(b.dpa));
            }
        }
        Binding b{next_id_++, host, range, range, BindMode::Pooled, Access::ReadWrite};
        bindings_.push_back(b);
        return b;
    }

    std::vector<Binding> FabricManager::bind_shared(AddrRange segment, HostId writer, std::span<const HostId> readers)
    {
        segment = AddrRange::make(segment.start, segment.end);
        check_in_device(segment);
        if (std::find(readers.begin(), readers.end(), writer) != readers.end())
            throw InvalidArgument("shared writer " + std::to_string(writer) + " also listed as a reader");
        for (const auto &b : bindings_)
        {
            if (!b.dpa.overlaps(segment))
                continue;
            if (b.mode == BindMode::Pooled)
            {
                throw OverlapWithPooled("shared segment " + describe(segment) + " intersects pooled slice " +
                                        describe(b.dpa) + " of host " + std::to_string(b.host));
            }
            if (b.dpa != segment)
            {
                throw OverlapWithExistingBinding("shared segment " + describe(segment) +
                                                 " partially overlaps shared segment " + describe(b.dpa));
            }
            if (b.access == Access::ReadWrite)
            {
                throw SecondWriterRejected("shared segment " + describe(segment) + " already has writer host " +
                                           std::to_string(b.host));
            }
        }
        std::vector<Binding> out;
        out.push_back(Binding{next_id_++, writer, segment, segment, BindMode::Shared, Access::ReadWrite});
        for (HostId r : readers)
            out.push_back(Binding{next_id_++, r, segment, segment, BindMode::Shared, Access::ReadOnly});
        bindings_.insert(bindings_.end(), out.begin(), out.end());
        return out;
    }

    Binding FabricManager::add_shared_reader(AddrRange segment, HostId reader)
    {
        bool exists = false;
        for (const auto &b : bindings_)
        {
            if (b.dpa.overlaps(segment) && b.mode == BindMode::Pooled)
                throw OverlapWithPooled("segment " + describe(segment) + " intersects a pooled slice");
            if (b.mode == BindMode::Shared && b.dpa == segment)
            {
                exists = true;
                if (b.host == reader)
                    throw InvalidArgument("host " + std::to_string(reader) + " already maps segment " + describe(segment));
            }
        }
        if (!exists)
            throw InvalidArgument("no shared segment " + describe(segment));
        Binding b{next_id_++, reader, segment, segment, BindMode::Shared, Access::ReadOnly};
        bindings_.push_back(b);
        return b;
    }

    void FabricManager::unbind(std::uint32_t binding_id)
    {
        auto it = std::find_if(bindings_.begin(), bindings_.end(), [&](const Binding &b) { return b.id == binding_id; });
        if (it == bindings_.end())
            throw InvalidArgument("no binding with id " + std::to_string(binding_id));
        bindings_.erase(it);
    }

    std::vector<Binding> FabricManager::bindings_for(HostId host) const
    {
        std::vector<Binding> out;
        for (const auto &b : bindings_)
        {
            if (b.host == host)
                out.push_back(b);
        }
        return out;
    }

    std::optional<Binding> FabricManager::find(std::uint32_t id) const
    {
        for (const auto &b : bindings_)
        {
            if (b.id == id)
                return b;
        }
        return std::nullopt;
    }

    void FabricManager::restore(std::vector<Binding> bindings, std::uint32_t next_id)
    {
        bindings_ = std::move(bindings);
        next_id_ = next_id;
        check_invariants();
    }

    void FabricManager::check_invariants() const
    {
        std::map<std::pair<std::uint64_t, std::uint64_t>, int> writers;
        for (std::size_t i = 0; i < bindings_.size(); ++i)
        {
            const auto &a = bindings_[i];
            if (a.hpa != a.dpa)
                throw CorruptCheckpoint("binding " + std::to_string(a.id) + " is not identity mapped");
            check_in_device(a.dpa);
            if (a.mode == BindMode::Shared && a.access == Access::ReadWrite &&
                ++writers[{a.dpa.start, a.dpa.end}] > 1)
            {
                throw SecondWriterRejected("segment " + describe(a.dpa) + " has more than one writer");
            }
            for (std::size_t j = i + 1; j < bindings_.size(); ++j)
            {
                const auto &b = bindings_[j];
                const bool both_shared_same = a.mode == BindMode::Shared && b.mode == BindMode::Shared && a.dpa == b.dpa;
                if (a.dpa.overlaps(b.dpa) && !both_shared_same)
                    throw OverlapWithExistingBinding("bindings " + std::to_string(a.id) + " and " + std::to_string(b.id) + " overlap");
            }
        }
    }

} // namespace cxlsim::fabric

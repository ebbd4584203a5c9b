#include "cxlsim/fabric/page_map.hpp"

#include "cxlsim/errors.hpp"

#include <algorithm>

namespace cxlsim::fabric
{
    std::string to_string(Region r) { return r == Region::Local ? "local" : "remote"; }

    std::string to_string(PolicyKind k)
    {
        switch (k)
        {
        case PolicyKind::MemBindLocal:
            return "membind-local";
        case PolicyKind::MemBindRemote:
            return "membind-remote";
        case PolicyKind::Interleave:
            return "interleave";
        case PolicyKind::PreferredLocal:
            return "preferred-local";
        }
        return "?";
    }

    void PagePolicy::validate() const
    {
        if (kind == PolicyKind::Interleave && interleave_set.size() < 2)
            throw InvalidArgument("interleave requires >= 2 regions");
        if (kind != PolicyKind::Interleave && !interleave_set.empty())
            throw InvalidArgument("interleave set given for a non-interleave policy");
        if (!(early_spill_probability >= 0.0 && early_spill_probability <= 1.0))
            throw InvalidArgument("early spill probability must lie in [0, 1]");
        if (kind != PolicyKind::PreferredLocal && early_spill_probability != 0.0)
            throw InvalidArgument("early spill applies only to preferred-local");
    }

    PageMap::PageMap(HostId host, std::uint64_t local_capacity) : host_(host), local_capacity_(local_capacity)
    {
        if (local_capacity % kPageBytes != 0)
            throw InvalidArgument("local capacity must be a multiple of the page size");
    }

    void PageMap::add_remote_slice(const Binding &binding)
    {
        if (binding.host != host_)
            throw InvalidArgument("binding " + std::to_string(binding.id) + " belongs to host " + std::to_string(binding.host));
        if (binding.mode != BindMode::Pooled || binding.access != Access::ReadWrite)
            throw InvalidArgument("only pooled read-write bindings provide allocatable remote frames");
        slices_.push_back(FrameCursor{binding.dpa, binding.dpa.start});
    }

    std::uint64_t PageMap::local_free_pages() const noexcept { return (local_capacity_ - local_next_) / kPageBytes; }

    std::uint64_t PageMap::remote_free_pages() const noexcept
    {
        std::uint64_t n = 0;
        for (const auto &s : slices_)
            n += (s.slice.end - s.next) / kPageBytes;
        return n;
    }

    std::uint64_t PageMap::mapped_bytes(Region r) const noexcept
    {
        return mapped_pages_[static_cast<int>(r)] * kPageBytes;
    }

    std::optional<std::uint64_t> PageMap::take_frame(Region r)
    {
        if (r == Region::Local)
        {
            if (local_next_ + kPageBytes > local_capacity_)
                return std::nullopt;
            const std::uint64_t f = local_next_;
            local_next_ += kPageBytes;
            return f;
        }
        for (auto &s : slices_)
        {
            if (s.next < s.slice.end)
            {
                const std::uint64_t f = s.next;
                s.next += kPageBytes;
                return f;
            }
        }
        return std::nullopt;
    }

    std::uint64_t PageMap::reserve_virtual(std::uint64_t npages)
    {
        const std::uint64_t base = virtual_next_;
        virtual_next_ += npages * kPageBytes;
        return base;
    }

    void PageMap::map(std::uint64_t vpage, const PageEntry &entry)
    {
        if (entry.phys % kPageBytes != 0)
            throw InvalidArgument("physical page address not aligned");
        if (entries_.contains(vpage))
            throw InvalidArgument("virtual page " + std::to_string(vpage) + " already mapped");
        auto &used = used_frames_[static_cast<int>(entry.region)];
        if (!used.insert(entry.phys).second)
            throw InvalidArgument("physical frame " + std::to_string(entry.phys) + " already mapped in region " +
                                  to_string(entry.region));
        entries_.emplace(vpage, entry);
        ++mapped_pages_[static_cast<int>(entry.region)];
    }

    void PageMap::map_binding(std::uint64_t vbase, const Binding &binding)
    {
        if (binding.host != host_)
            throw InvalidArgument("binding belongs to another host");
        if (vbase % kPageBytes != 0)
            throw InvalidArgument("virtual base not aligned");
        const std::uint64_t pages = binding.dpa.size() / kPageBytes;
        for (std::uint64_t i = 0; i < pages; ++i)
            map(vbase / kPageBytes + i, PageEntry{Region::Remote, binding.hpa.start + i * kPageBytes, binding.access});
    }

    const PageEntry *PageMap::find(std::uint64_t vaddr) const
    {
        auto it = entries_.find(vaddr / kPageBytes);
        return it == entries_.end() ? nullptr : &it->second;
    }

    Translation PageMap::translate(std::uint64_t vaddr) const
    {
        const PageEntry *e = find(vaddr);
        if (e == nullptr)
            throw UnmappedAddress("host " + std::to_string(host_) + ": virtual address " + std::to_string(vaddr) + " is not mapped");
        return Translation{e->region, e->phys + vaddr % kPageBytes, e->access};
    }

    std::vector<std::pair<std::uint64_t, PageEntry>> PageMap::entries() const
    {
        std::vector<std::pair<std::uint64_t, PageEntry>> out(entries_.begin(), entries_.end());
        std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
        return out;
    }

    PageMap::State PageMap::state() const { return State{entries(), local_next_, virtual_next_, slices_}; }

    void PageMap::restore(const State &s)
    {
        entries_.clear();
        used_frames_[0].clear();
        used_frames_[1].clear();
        mapped_pages_[0] = mapped_pages_[1] = 0;
        for (const auto &[vpage, e] : s.entries)
            map(vpage, e);
        local_next_ = s.local_next;
        virtual_next_ = s.virtual_next;
        slices_ = s.slices;
    }

    Allocation allocate_pages(PageMap &map, const PagePolicy &policy, std::uint64_t npages, std::mt19937_64 *rng)
    {
        policy.validate();
        if (npages == 0)
            throw InvalidArgument("allocation of zero pages");
        const std::uint64_t local_free = map.local_free_pages();
        const std::uint64_t remote_free = map.remote_free_pages();
        auto need_remote = [&](std::uint64_t n) {
            if (n == 0)
                return;
            if (!map.has_remote_slice())
                throw RemoteUnbound("host " + std::to_string(map.host()) + " has no remote binding for remote placement");
            if (n > remote_free)
                throw CapacityExceeded("host " + std::to_string(map.host()) + ": remote region needs " + std::to_string(n) +
                                       " pages, " + std::to_string(remote_free) + " free");
        };
        auto need_local = [&](std::uint64_t n) {
            if (n > local_free)
                throw CapacityExceeded("host " + std::to_string(map.host()) + ": local region needs " + std::to_string(n) +
                                       " pages, " + std::to_string(local_free) + " free");
        };

        std::vector<Region> plan;
        plan.reserve(npages);
        switch (policy.kind)
        {
        case PolicyKind::MemBindLocal:
            need_local(npages);
            plan.assign(npages, Region::Local);
            break;
        case PolicyKind::MemBindRemote:
            need_remote(npages);
            plan.assign(npages, Region::Remote);
            break;
        case PolicyKind::Interleave:
        {
            std::uint64_t counts[2] = {0, 0};
            for (std::uint64_t i = 0; i < npages; ++i)
            {
                const Region r = policy.interleave_set[i % policy.interleave_set.size()];
                plan.push_back(r);
                ++counts[static_cast<int>(r)];
            }
            need_local(counts[0]);
            need_remote(counts[1]);
            break;
        }
        case PolicyKind::PreferredLocal:
        {
            std::uint64_t local_left = local_free;
            std::uint64_t remote_left = map.has_remote_slice() ? remote_free : 0;
            std::bernoulli_distribution early(policy.early_spill_probability);
            for (std::uint64_t i = 0; i < npages; ++i)
            {
                bool local = local_left > 0;
                if (local && policy.early_spill_probability > 0.0 && remote_left > 0)
                {
                    if (rng == nullptr)
                        throw InvalidArgument("soft preferred-local placement needs a seeded generator");
                    local = !early(*rng);
                }
                plan.push_back(local ? Region::Local : Region::Remote);
                if (local)
                    --local_left;
                else if (remote_left > 0)
                    --remote_left;
            }
            const auto remote_count = static_cast<std::uint64_t>(std::count(plan.begin(), plan.end(), Region::Remote));
            need_remote(remote_count);
            break;
        }
        }

        Allocation out;
        out.vbase = map.reserve_virtual(npages);
        out.pages.reserve(npages);
        for (std::uint64_t i = 0; i < npages; ++i)
        {
            const auto frame = map.take_frame(plan[i]);
            if (!frame)
                throw CapacityExceeded("frame pool exhausted");
            map.map(out.vbase / kPageBytes + i, PageEntry{plan[i], *frame, Access::ReadWrite});
            out.pages.push_back(Placement{plan[i], *frame});
        }
        return out;
    }

    Allocation HostMemory::allocate(std::uint64_t bytes, const PagePolicy &policy, std::mt19937_64 *rng)
    {
        const std::uint64_t npages = (bytes + kPageBytes - 1) / kPageBytes;
        Allocation a = allocate_pages(*map_, policy, npages, rng);
        for (const auto &p : a.pages)
            store_for(p.region).materialize(p.phys, true);
        return a;
    }

    void HostMemory::throw_read_only(std::uint64_t vaddr) const
    {
        throw ReadOnlyViolation("host " + std::to_string(map_->host()) + ": store to read-only address " + std::to_string(vaddr));
    }

} // namespace cxlsim::fabric

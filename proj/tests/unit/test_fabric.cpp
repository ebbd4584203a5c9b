#include "cxlsim/errors.hpp"
#include "cxlsim/fabric/fabric.hpp"
#include "cxlsim/fabric/memory_store.hpp"
#include "cxlsim/fabric/page_map.hpp"

#include <doctest.h>

#include <vector>

using namespace cxlsim;
using namespace cxlsim::fabric;

namespace
{
    constexpr std::uint64_t GiB = std::uint64_t{1} << 30;
    constexpr std::uint64_t MiB = std::uint64_t{1} << 20;

    std::vector<Region> regions(const Allocation &a)
    {
        std::vector<Region> out;
        for (const auto &p : a.pages)
            out.push_back(p.region);
        return out;
    }

    PageMap map_with_pool(std::uint64_t local_pages, std::uint64_t remote_pages, FabricManager &fm)
    {
        PageMap m(0, local_pages * kPageBytes);
        m.add_remote_slice(fm.bind_pooled(0, remote_pages * kPageBytes));
        return m;
    }
} // namespace

TEST_CASE("pooled bindings from one device are disjoint and reduce free capacity")
{
    FabricManager fm(4 * GiB, 128 * GiB);
    const Binding a = fm.bind_pooled(0, 2 * GiB);
    const Binding b = fm.bind_pooled(1, 2 * GiB);
    CHECK_FALSE(a.dpa.overlaps(b.dpa));
    CHECK(a.hpa == a.dpa);
    CHECK(b.hpa == b.dpa);
    CHECK(fm.free_bytes() == 124 * GiB);
    CHECK(a.access == Access::ReadWrite);
}

TEST_CASE("an explicit pooled range overlapping an existing binding is rejected")
{
    FabricManager fm(4 * GiB, 16 * GiB);
    fm.bind_pooled(0, AddrRange::make(4 * GiB, 6 * GiB));
    CHECK_THROWS_AS(fm.bind_pooled(1, AddrRange::make(5 * GiB, 7 * GiB)), OverlapWithExistingBinding);
    CHECK_THROWS_AS(fm.bind_pooled(1, AddrRange::make(19 * GiB, 21 * GiB)), CapacityExceeded);
    CHECK_THROWS_AS(fm.bind_pooled(1, 15 * GiB), CapacityExceeded);
}

TEST_CASE("a 160 GiB pool splits into seven disjoint host slices")
{
    FabricManager fm(4 * GiB, 160 * GiB);
    const std::uint64_t slice = 160 * GiB / 7 / kPageBytes * kPageBytes;
    std::vector<Binding> bs;
    for (HostId h = 0; h < 7; ++h)
        bs.push_back(fm.bind_pooled(h, slice));
    for (std::size_t i = 0; i < bs.size(); ++i)
        for (std::size_t j = i + 1; j < bs.size(); ++j)
            CHECK_FALSE(bs[i].dpa.overlaps(bs[j].dpa));
    CHECK(fm.free_bytes() == 160 * GiB - 7 * slice);
}

TEST_CASE("shared segments: one writer, read-only readers, no second writer, no pooled overlap")
{
    FabricManager fm(4 * GiB, 16 * GiB);
    const AddrRange seg = AddrRange::make(4 * GiB, 4 * GiB + 64 * MiB);
    const std::vector<HostId> readers{1, 2, 3, 4, 5};
    const auto bs = fm.bind_shared(seg, 0, readers);
    REQUIRE(bs.size() == 6);
    CHECK(bs[0].access == Access::ReadWrite);
    for (std::size_t i = 0; i < bs.size(); ++i)
    {
        CHECK(bs[i].dpa == seg);
        CHECK(bs[i].mode == BindMode::Shared);
        if (i > 0)
            CHECK(bs[i].access == Access::ReadOnly);
    }
    const std::vector<HostId> none;
    CHECK_THROWS_AS(fm.bind_shared(seg, 6, none), SecondWriterRejected);

    fm.bind_pooled(7, AddrRange::make(8 * GiB, 9 * GiB));
    CHECK_THROWS_AS(fm.bind_shared(AddrRange::make(8 * GiB + 4096 * 4, 10 * GiB), 8, none), OverlapWithPooled);
}

TEST_CASE("interleave places pages round-robin over its set")
{
    FabricManager fm(4 * GiB, 1 * GiB);
    PageMap m = map_with_pool(16, 16, fm);
    const auto a = allocate_pages(m, PagePolicy::interleave(), 6);
    using enum Region;
    CHECK(regions(a) == std::vector<Region>{Local, Remote, Local, Remote, Local, Remote});
}

TEST_CASE("preferred-local fills local frames and then spills remote")
{
    FabricManager fm(4 * GiB, 1 * GiB);
    PageMap m = map_with_pool(3, 16, fm);
    const auto a = allocate_pages(m, PagePolicy::preferred_local(), 5);
    using enum Region;
    CHECK(regions(a) == std::vector<Region>{Local, Local, Local, Remote, Remote});

    FabricManager fm2(4 * GiB, 1 * GiB);
    PageMap mg = map_with_pool(8, 64, fm2);
    const auto big = allocate_pages(mg, PagePolicy::preferred_local(), 27);
    std::size_t remote = 0;
    for (auto r : regions(big))
        remote += r == Remote ? 1 : 0;
    CHECK(remote == 19);
}

TEST_CASE("bind policies are exclusive and fail atomically when a region is full")
{
    FabricManager fm(4 * GiB, 1 * GiB);
    PageMap m = map_with_pool(4, 4, fm);
    for (auto r : regions(allocate_pages(m, PagePolicy::bind_local(), 3)))
        CHECK(r == Region::Local);
    for (auto r : regions(allocate_pages(m, PagePolicy::bind_remote(), 3)))
        CHECK(r == Region::Remote);
    const auto before = m.entries().size();
    CHECK_THROWS_AS(allocate_pages(m, PagePolicy::bind_local(), 2), CapacityExceeded);
    CHECK(m.entries().size() == before);

    PageMap lonely(1, 8 * kPageBytes);
    CHECK_THROWS_AS(allocate_pages(lonely, PagePolicy::bind_remote(), 1), RemoteUnbound);
}

TEST_CASE("interleave with a single region is invalid")
{
    CHECK_THROWS_AS(PagePolicy::interleave({Region::Local}).validate(), InvalidArgument);
    CHECK_NOTHROW(PagePolicy::interleave().validate());
}

TEST_CASE("translation adds the page offset and keeps identity addresses for remote pages")
{
    PageMap m(0, 64 * kPageBytes);
    const std::uint64_t vpage = PageMap::kVirtualBase / kPageBytes;
    m.map(vpage, PageEntry{Region::Local, 0x1000, Access::ReadWrite});
    const Translation t = m.translate(vpage * kPageBytes + 0x10);
    CHECK(t.region == Region::Local);
    CHECK(t.paddr == 0x1010);
    CHECK_THROWS_AS(m.translate((vpage + 1) * kPageBytes), UnmappedAddress);

    FabricManager fm(4 * GiB, 2 * GiB);
    const Binding b = fm.bind_pooled(0, AddrRange::make(4294967296ULL, 6442450944ULL));
    const std::uint64_t vbase = std::uint64_t{1} << 40;
    m.map_binding(vbase, b);
    const Translation r = m.translate(vbase + 5 * kPageBytes + 8);
    CHECK(r.region == Region::Remote);
    CHECK(r.paddr == 4294967296ULL + 5 * kPageBytes + 8);
}

TEST_CASE("stores through a read-only mapping raise ReadOnlyViolation")
{
    FabricManager fm(4 * GiB, 1 * GiB);
    const AddrRange seg = AddrRange::make(4 * GiB, 4 * GiB + 4 * kPageBytes);
    const std::vector<HostId> readers{1};
    const auto bs = fm.bind_shared(seg, 0, readers);
    MemoryStore device, local0, local1;
    for (std::uint64_t a = seg.start; a < seg.end; a += kPageBytes)
        device.materialize(a, true);
    PageMap m0(0, 4 * kPageBytes), m1(1, 4 * kPageBytes);
    const std::uint64_t vb = std::uint64_t{1} << 44;
    m0.map_binding(vb, bs[0]);
    m1.map_binding(vb, bs[1]);
    HostMemory w(m0, local0, device), r(m1, local1, device);
    w.store<std::uint64_t>(vb + 8, 42);
    CHECK(r.load<std::uint64_t>(vb + 8) == 42);
    CHECK_THROWS_AS(r.store<std::uint64_t>(vb + 8, 7), ReadOnlyViolation);
    CHECK(r.load<std::uint64_t>(vb + 8) == 42);
}

TEST_CASE("page map state round-trips through restore")
{
    FabricManager fm(4 * GiB, 1 * GiB);
    PageMap m = map_with_pool(4, 8, fm);
    allocate_pages(m, PagePolicy::interleave(), 5);
    PageMap copy(0, 4 * kPageBytes);
    copy.restore(m.state());
    CHECK(copy.entries() == m.entries());
    CHECK(copy.local_free_pages() == m.local_free_pages());
    CHECK(copy.remote_free_pages() == m.remote_free_pages());
    const auto next_a = allocate_pages(m, PagePolicy::interleave(), 2);
    const auto next_b = allocate_pages(copy, PagePolicy::interleave(), 2);
    CHECK(next_a.vbase == next_b.vbase);
    CHECK(next_a.pages == next_b.pages);
}

TEST_CASE("memory store checksum treats absent pages as zero")
{
    MemoryStore s;
    CHECK(s.checksum(0, 2 * kPageBytes) == [] {
        MemoryStore z;
        z.materialize(0, true);
        z.materialize(kPageBytes, true);
        return z.checksum(0, 2 * kPageBytes);
    }());
    s.materialize(0);
    s.store<std::uint32_t>(12, 0xdeadbeef);
    CHECK(s.load<std::uint32_t>(12) == 0xdeadbeef);
    CHECK_THROWS_AS(s.load<std::uint32_t>(kPageBytes), UnmappedAddress);
}

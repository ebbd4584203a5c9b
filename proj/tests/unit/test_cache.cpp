#include "cxlsim/errors.hpp"
#include "cxlsim/node/cache.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace cxlsim;
using namespace cxlsim::node;

TEST_CASE("2-way LRU: A, B, A then C evicts B")
{
    Cache c(CacheGeometry{2 * 64, 2, 1});
    const std::uint64_t A = 0, B = 64, C = 128;
    CHECK_FALSE(c.access(A, AccessKind::Read).hit);
    CHECK_FALSE(c.access(B, AccessKind::Read).hit);
    CHECK(c.access(A, AccessKind::Read).hit);
    const auto r = c.access(C, AccessKind::Read);
    CHECK_FALSE(r.hit);
    REQUIRE(r.victim);
    CHECK(r.victim->line == B);
    CHECK(c.probe(A));
    CHECK_FALSE(c.probe(B));
}

TEST_CASE("repeated access to one line hits after the first miss")
{
    Cache c(CacheGeometry{32 * 1024, 8, 4});
    CHECK_FALSE(c.access(4096, AccessKind::Read).hit);
    for (int i = 0; i < 100; ++i)
        CHECK(c.access(4096 + (i % 8) * 8, AccessKind::Read).hit);
    CHECK(c.hits() == 100);
    CHECK(c.misses() == 1);
}

TEST_CASE("write-back: dirty victims are reported dirty")
{
    Cache c(CacheGeometry{64, 1, 1});
    c.access(0, AccessKind::Write);
    const auto r = c.access(64, AccessKind::Read);
    REQUIRE(r.victim);
    CHECK(r.victim->dirty);
    const auto r2 = c.access(128, AccessKind::Read);
    REQUIRE(r2.victim);
    CHECK_FALSE(r2.victim->dirty);
}

TEST_CASE("random 10k trace on a 4-way 32 KiB cache matches the reference LRU")
{
    Cache c(CacheGeometry{32 * 1024, 4, 4});
    oracle::RefLru ref(32 * 1024, 4);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10000; ++i)
    {
        const std::uint64_t addr = (rng() % 4096) * 64;
        const bool write = (rng() & 3) == 0;
        std::uint64_t evicted = ~0ULL;
        const bool expect = ref.access(addr, &evicted);
        const auto got = c.access(addr, write ? AccessKind::Write : AccessKind::Read);
        REQUIRE(got.hit == expect);
        if (!expect && evicted != ~0ULL)
        {
            REQUIRE(got.victim);
            CHECK(got.victim->line == evicted);
        }
    }
}

TEST_CASE("invalid geometries are rejected")
{
    CHECK_THROWS_AS(CacheGeometry({3 * 64 * 8, 8, 1}).validate("l1d"), InvalidArgument);
    CHECK_THROWS_AS(CacheGeometry({32 * 1024, 0, 1}).validate("l1d"), InvalidArgument);
    CHECK_NOTHROW(CacheGeometry({32 * 1024, 8, 4}).validate("l1d"));
}

TEST_CASE("flush empties the cache and returns dirty lines")
{
    Cache c(CacheGeometry{1024, 2, 1});
    c.access(0, AccessKind::Write);
    c.access(64, AccessKind::Read);
    std::vector<std::uint64_t> dirty;
    c.flush(&dirty);
    CHECK(dirty == std::vector<std::uint64_t>{0});
    CHECK_FALSE(c.probe(64));
}

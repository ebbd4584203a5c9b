#include "cxlsim/errors.hpp"
#include "cxlsim/memnet/calibrate.hpp"
#include "cxlsim/memnet/dram.hpp"
#include "cxlsim/memnet/link.hpp"
#include "cxlsim/memnet/remote_memory.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <set>
#include <vector>

using namespace cxlsim;
using namespace cxlsim::memnet;

namespace
{
    constexpr std::uint64_t kBase = std::uint64_t{4} << 30;
    constexpr std::uint64_t kSize = std::uint64_t{1} << 30;

    SimTime ns(double v) { return SimTime::from_ns(v); }
} // namespace

TEST_CASE("peak bandwidth follows channels x bus width x transfer rate")
{
    const DramTiming t;
    CHECK(peak_bandwidth(t, 4) == doctest::Approx(76.8).epsilon(1e-12));
    CHECK(peak_bandwidth(t, 1) == doctest::Approx(19.2).epsilon(1e-12));
}

TEST_CASE("idle-channel service times for hit, empty and conflict")
{
    const DramTiming t;
    const SimTime now = ns(1000);
    const DramCoord at{0, 3, 7};

    ChannelState hit(t);
    hit.banks[3].open_row = 7;
    const auto h = dram_service(hit, t, at, now);
    CHECK(h.outcome == RowOutcome::Hit);
    CHECK(std::llabs(static_cast<long long>((h.completion - now).ps()) - 17333) <= 1);

    ChannelState conflict(t);
    conflict.banks[3].open_row = 8;
    const auto c = dram_service(conflict, t, at, now);
    CHECK(c.outcome == RowOutcome::Conflict);
    CHECK(std::llabs(static_cast<long long>((c.completion - now).ps()) - 45333) <= 1);

    ChannelState empty(t);
    const auto e = dram_service(empty, t, at, now);
    CHECK(e.outcome == RowOutcome::Empty);
    CHECK(std::llabs(static_cast<long long>((e.completion - now).ps()) - 31333) <= 1);
}

TEST_CASE("back-to-back row hits are separated by at least one burst on the bus")
{
    const DramTiming t;
    ChannelState ch(t);
    ch.banks[0].open_row = 0;
    const auto a = dram_service(ch, t, DramCoord{0, 0, 0}, ns(10));
    const auto b = dram_service(ch, t, DramCoord{0, 0, 0}, ns(10));
    CHECK(b.completion >= a.completion + t.tBURST());
}

TEST_CASE("dram_service is monotone in the request time")
{
    const DramTiming t;
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial)
    {
        ChannelState ch(t);
        SimTime now{};
        for (int i = 0; i < 40; ++i)
        {
            now = now + SimTime{rng() % 20000};
            dram_service(ch, t, DramCoord{0, static_cast<std::uint32_t>(rng() % 16), rng() % 4}, now);
        }
        const DramCoord probe{0, static_cast<std::uint32_t>(rng() % 16), rng() % 4};
        ChannelState early = ch, late = ch;
        const SimTime delay{rng() % 50000};
        const auto a = dram_service(early, t, probe, now);
        const auto b = dram_service(late, t, probe, now + delay);
        CHECK(b.completion >= a.completion);
    }
}

TEST_CASE("decode interleaves consecutive lines across channels")
{
    const DramTiming t;
    CHECK(decode_address(kBase + 0, 4, t, kBase, kSize).channel == 0);
    CHECK(decode_address(kBase + 192, 4, t, kBase, kSize).channel == 3);
    for (std::uint64_t line = 0; line < 64; ++line)
        CHECK(decode_address(kBase + line * 64, 4, t, kBase, kSize).channel == line % 4);
    CHECK_THROWS_AS(decode_address(kBase + 3, 4, t, kBase, kSize), OutOfRange);
    CHECK_THROWS_AS(decode_address(kBase + kSize, 4, t, kBase, kSize), OutOfRange);

    std::set<std::pair<std::uint32_t, std::uint64_t>> seen;
    for (std::uint64_t line = 0; line < 4 * 16 * t.lines_per_row(); ++line)
    {
        const auto c = decode_address(kBase + line * 64, 4, t, kBase, kSize);
        seen.insert({c.channel * 16 + c.bank, c.row});
    }
    CHECK(seen.size() == 64);
}

TEST_CASE("link arrival is departure plus latency plus serialization")
{
    const LinkConfig slow{250.0, 64.0, 128};
    CHECK(link_transmit(slow, ns(100)) == ns(100) + ns(251));
    const LinkConfig zero{0.0, 64.0, 128};
    CHECK(link_transmit(zero, ns(100)) == ns(101));

    LinkTx tx(zero);
    const SimTime a = tx.transmit(ns(0));
    const SimTime b = tx.transmit(ns(0));
    CHECK(b == a + ns(1));
}

TEST_CASE("a host with 4 credits holds its fifth request until a response returns a credit")
{
    struct Host final : Component
    {
        explicit Host(const LinkConfig &cfg) : ep(cfg, 1) {}
        void handle(const Event &ev, Context &ctx) override
        {
            if (ev.payload.kind == msg::kResponseArrival)
            {
                responses.push_back(ctx.now());
                ep.on_response(ctx);
                return;
            }
            for (std::uint64_t i = 0; i < 5; ++i)
            {
                MemRequest r;
                r.id = i;
                ep.send(ctx, r);
            }
        }
        LinkEndpoint ep;
        std::vector<SimTime> responses;
    };
    struct Device final : Component
    {
        void handle(const Event &ev, Context &ctx) override
        {
            arrivals.push_back(ctx.now());
            ctx.schedule_in(0, SimTime::from_ns(100), Message{msg::kResponseArrival, 0, ev.payload.req});
        }
        std::vector<SimTime> arrivals;
    };
    const LinkConfig cfg{10.0, 64.0, 4};
    Engine e;
    const auto p0 = e.add_partition();
    const auto p1 = e.add_partition();
    Host host(cfg);
    Device dev;
    e.add_component(p0, host);
    e.add_component(p1, dev);
    e.register_channel(p0, p1, cfg.min_delay());
    e.register_channel(p1, p0, SimTime::from_ns(100));
    e.schedule(0, SimTime{}, Message{});
    e.run_epochs(SyncConfig{cfg.min_delay(), 2});
    REQUIRE(dev.arrivals.size() == 5);
    REQUIRE(host.responses.size() == 5);
    CHECK(dev.arrivals[3] < host.responses[0]);
    CHECK(dev.arrivals[4] >= host.responses[0] + cfg.min_delay());
    CHECK(host.ep.in_flight() == 0);
    CHECK(host.ep.meters().at(0).credit_stalls == 1);
}

TEST_CASE("controller queues pick row hits ahead of older conflicts within the window")
{
    const DramTiming t;
    DramController ctl(t, 1, kBase, kSize, 8);
    const std::uint64_t row_stride = 16 * t.row_bytes;
    auto req = [&](std::uint64_t id, std::uint64_t addr) {
        MemRequest r;
        r.id = id;
        r.addr = addr;
        return r;
    };
    CHECK(ctl.enqueue(req(0, kBase)));
    std::optional<SimTime> next;
    auto first = ctl.kick(0, SimTime{}, next);
    REQUIRE(first);
    CHECK(first->req.id == 0);
    CHECK_FALSE(next);
    CHECK(ctl.enqueue(req(1, kBase + row_stride)));
    CHECK_FALSE(ctl.enqueue(req(2, kBase + 64 * 16)));
    auto second = ctl.kick(0, first->result.completion, next);
    REQUIRE(second);
    CHECK(second->req.id == 2);
    CHECK(second->result.outcome == RowOutcome::Hit);
}

TEST_CASE("calibration: single-channel ratio within two points of the four-channel ratio")
{
    DeviceConfig four;
    DeviceConfig one;
    one.channels = 1;
    const auto r4 = calibrate(four, SimTime::from_ns(20000));
    const auto r1 = calibrate(one, SimTime::from_ns(20000));
    CHECK(r4.peak_gbps == doctest::Approx(76.8));
    CHECK(r1.peak_gbps == doctest::Approx(19.2));
    CHECK(r4.ratio >= 0.70);
    CHECK(r4.ratio <= 0.85);
    CHECK(std::fabs(r4.ratio - r1.ratio) <= 0.02);
    CHECK(r4.sustained_gbps <= r4.peak_gbps);
    CHECK(r4.bytes == r4.meter.bytes());
}

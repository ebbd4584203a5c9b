#include "cxlsim/errors.hpp"
#include "cxlsim/sim/engine.hpp"

#include <doctest.h>

#include <cstdint>
#include <memory>
#include <vector>

using namespace cxlsim;

namespace
{
    struct Delivery
    {
        std::uint64_t ps;
        std::uint32_t kind;
        std::uint32_t index;
        bool operator==(const Delivery &) const = default;
    };

    /// Records deliveries; kind 1 asks it to schedule a self-event `index` ps later, kind 2 to
    /// schedule at the absolute time `index`.
    class Recorder final : public Component
    {
    public:
        void handle(const Event &ev, Context &ctx) override
        {
            log.push_back({ev.time.ps(), ev.payload.kind, ev.payload.index});
            if (ev.payload.kind == 1)
                ctx.schedule_in(ctx.self(), SimTime{ev.payload.index}, Message{9, 0, {}});
            if (ev.payload.kind == 2)
                ctx.schedule_at(ctx.self(), SimTime{ev.payload.index}, Message{9, 0, {}});
        }
        std::vector<Delivery> log;
    };

    /// Passes a token around a ring of partitions with pseudo-random local work in between.
    class RingNode final : public Component
    {
    public:
        RingNode(ComponentId next, std::uint64_t lookahead_ps, std::uint64_t salt)
            : next_(next), lookahead_(lookahead_ps), state_(salt)
        {
        }
        void handle(const Event &ev, Context &ctx) override
        {
            state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL + ev.payload.index;
            sum += ev.time.ps() ^ ev.payload.index;
            if (ev.payload.kind == 0 && ev.payload.index < 400)
            {
                const std::uint64_t local = (state_ >> 33) % 700;
                ctx.schedule_in(ctx.self(), SimTime{local}, Message{1, ev.payload.index, {}});
                ctx.schedule_in(next_, SimTime{lookahead_ + (state_ >> 40) % 300},
                                Message{0, ev.payload.index + 1, {}});
            }
        }
        std::uint64_t sum = 0;

    private:
        ComponentId next_;
        std::uint64_t lookahead_;
        std::uint64_t state_;
    };

    std::vector<std::vector<std::pair<SimTime, std::uint64_t>>> run_ring(unsigned threads)
    {
        constexpr std::size_t kParts = 5;
        constexpr std::uint64_t kLook = 1000;
        Engine e;
        e.enable_trace(true);
        for (std::size_t p = 0; p < kParts; ++p)
            e.add_partition();
        for (std::size_t p = 0; p < kParts; ++p)
        {
            const auto next = static_cast<ComponentId>((p + 1) % kParts);
            e.add_component(static_cast<PartitionId>(p), std::make_unique<RingNode>(next, kLook, p * 7 + 3));
            e.register_channel(static_cast<PartitionId>(p), static_cast<PartitionId>(next), SimTime{kLook});
        }
        for (ComponentId c = 0; c < kParts; ++c)
            e.schedule(c, SimTime{c * 17}, Message{0, c * 50, {}});
        e.run_epochs(SyncConfig{SimTime{kLook}, threads});
        std::vector<std::vector<std::pair<SimTime, std::uint64_t>>> traces;
        for (ComponentId c = 0; c < kParts; ++c)
            traces.push_back(e.trace(c));
        return traces;
    }
} // namespace

TEST_CASE("zero-delay self event is delivered at the same time")
{
    Engine e;
    const auto p = e.add_partition();
    auto rec = std::make_unique<Recorder>();
    auto *r = rec.get();
    const auto c = e.add_component(p, std::move(rec));
    e.schedule(c, SimTime{100}, Message{1, 0, {}});
    CHECK(e.run_epochs(SyncConfig{}) == SimTime{100});
    REQUIRE(r->log.size() == 2);
    CHECK(r->log[1] == Delivery{100, 9, 0});
}

TEST_CASE("events at the same time and target are delivered in issue order")
{
    Engine e;
    const auto p = e.add_partition();
    auto rec = std::make_unique<Recorder>();
    auto *r = rec.get();
    const auto c = e.add_component(p, std::move(rec));
    for (std::uint32_t i = 0; i < 6; ++i)
        e.schedule(c, SimTime{50}, Message{7, i, {}});
    e.run_epochs(SyncConfig{});
    REQUIRE(r->log.size() == 6);
    for (std::uint32_t i = 0; i < 6; ++i)
        CHECK(r->log[i].index == i);
}

TEST_CASE("scheduling into the past raises SchedulingInPast")
{
    Engine e;
    const auto p = e.add_partition();
    const auto c = e.add_component(p, std::make_unique<Recorder>());
    e.schedule(c, SimTime{100}, Message{2, 50, {}});
    CHECK_THROWS_AS(e.run_epochs(SyncConfig{}), SchedulingInPast);
}

TEST_CASE("run_epochs returns the last delivery time on quiescence and the horizon otherwise")
{
    {
        Engine e;
        const auto p = e.add_partition();
        const auto c = e.add_component(p, std::make_unique<Recorder>());
        for (std::uint64_t t : {1, 2, 3})
            e.schedule(c, SimTime{t}, Message{7, 0, {}});
        CHECK(e.run_epochs(SyncConfig{}, SimTime{10}) == SimTime{3});
        CHECK(e.idle());
    }
    {
        Engine e;
        const auto p = e.add_partition();
        auto rec = std::make_unique<Recorder>();
        auto *r = rec.get();
        const auto c = e.add_component(p, std::move(rec));
        for (std::uint64_t t : {1, 2, 3})
            e.schedule(c, SimTime{t}, Message{7, 0, {}});
        CHECK(e.run_epochs(SyncConfig{}, SimTime{2}) == SimTime{2});
        CHECK(r->log.size() == 2);
        CHECK_FALSE(e.idle());
    }
}

TEST_CASE("multi-partition runs require a positive lookahead that every channel honours")
{
    {
        Engine e;
        const auto a = e.add_partition();
        const auto b = e.add_partition();
        const auto c = e.add_component(a, std::make_unique<Recorder>());
        e.add_component(b, std::make_unique<Recorder>());
        e.schedule(c, SimTime{1}, Message{7, 0, {}});
        CHECK_THROWS_AS(e.run_epochs(SyncConfig{SimTime{}, 1}), LookaheadViolation);
    }
    {
        Engine e;
        const auto a = e.add_partition();
        const auto b = e.add_partition();
        e.add_component(a, std::make_unique<Recorder>());
        e.add_component(b, std::make_unique<Recorder>());
        e.register_channel(a, b, SimTime{10});
        CHECK_THROWS_AS(e.run_epochs(SyncConfig{SimTime{100}, 1}), LookaheadViolation);
    }
}

TEST_CASE("a message crossing partitions faster than the lookahead is rejected")
{
    class Sender final : public Component
    {
    public:
        explicit Sender(ComponentId to) : to_(to) {}
        void handle(const Event &, Context &ctx) override { ctx.schedule_in(to_, SimTime{5}, Message{}); }

    private:
        ComponentId to_;
    };
    Engine e;
    const auto a = e.add_partition();
    const auto b = e.add_partition();
    const auto s = e.add_component(a, std::make_unique<Sender>(1));
    e.add_component(b, std::make_unique<Recorder>());
    e.register_channel(a, b, SimTime{100});
    e.schedule(s, SimTime{0}, Message{});
    CHECK_THROWS_AS(e.run_epochs(SyncConfig{SimTime{100}, 2}), LookaheadViolation);
}

TEST_CASE("delivery traces are identical for 1, 2 and 8 threads")
{
    const auto serial = run_ring(1);
    std::size_t total = 0;
    for (const auto &t : serial)
        total += t.size();
    CHECK(total > 2000);
    CHECK(run_ring(2) == serial);
    CHECK(run_ring(8) == serial);
}

TEST_CASE("SimTime converts from nanoseconds by rounding up and detects overflow")
{
    CHECK(SimTime::from_ns(3.3333333).ps() == 3334);
    CHECK(SimTime::from_ns(14.0).ps() == 14000);
    CHECK(SimTime::from_ns(0.0).ps() == 0);
    CHECK_THROWS_AS(SimTime::from_ns(-1.0), InvalidArgument);
    CHECK_THROWS_AS(SimTime::max() + SimTime{1}, SimTimeOverflow);
    CHECK((SimTime{5} - SimTime{9}) == SimTime::zero());
}

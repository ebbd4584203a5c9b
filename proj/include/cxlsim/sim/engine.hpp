#pragma once

#include "cxlsim/memnet/request.hpp"
#include "cxlsim/sim/time.hpp"

#include <atomic>
#include <cstdint>
#include <exception>
#include <memory>
#include <queue>
#include <thread>
#include <vector>

namespace cxlsim
{
    using ComponentId = std::uint32_t;
    using PartitionId = std::uint32_t;

    /// Payload carried by every event. `kind` is interpreted by the receiving component.
    struct Message
    {
        std::uint32_t kind = 0;
        std::uint32_t index = 0;
        MemRequest req{};
    };

    struct Event
    {
        SimTime time{};
        ComponentId target = 0;
        // Upper 24 bits: issuing component (or the controller); lower 40 bits: that issuer's
        // running counter. Independent of thread interleaving.
        std::uint64_t seq = 0;
        Message payload{};

        friend bool operator<(const Event &a, const Event &b) noexcept
        {
            if (a.time != b.time)
                return a.time < b.time;
            if (a.target != b.target)
                return a.target < b.target;
            return a.seq < b.seq;
        }
        friend bool operator>(const Event &a, const Event &b) noexcept { return b < a; }
    };

    struct SyncConfig
    {
        SimTime lookahead{};
        unsigned threads = 1;
    };

    class Engine;

    /// Handle given to a component while it processes an event.
    class Context
    {
    public:
        SimTime now() const noexcept { return now_; }
        ComponentId self() const noexcept { return self_; }

        void schedule_at(ComponentId target, SimTime time, const Message &msg);
        void schedule_in(ComponentId target, SimTime delay, const Message &msg)
        {
            schedule_at(target, now_ + delay, msg);
        }

    private:
        friend class Engine;
        Context(Engine &engine, PartitionId partition) : engine_(&engine), partition_(partition) {}

        Engine *engine_;
        PartitionId partition_;
        SimTime now_{};
        ComponentId self_ = 0;
    };

    class Component
    {
    public:
        virtual ~Component() = default;
        virtual void handle(const Event &ev, Context &ctx) = 0;
    };

    /// Conservative parallel discrete-event engine.
    ///
    /// Components are grouped into partitions. Time advances in epochs of length `lookahead`
    /// starting at the globally earliest pending event; within an epoch each partition drains
    /// its own queue independently, and cross-partition messages (which must carry a delay of at
    /// least `lookahead`) are handed over at the epoch barrier. Delivery order within a
    /// partition is (time, target, seq), so the result does not depend on the thread count.
    class Engine
    {
    public:
        static constexpr ComponentId kController = (1u << 24) - 1;

        Engine();
        ~Engine();
        Engine(const Engine &) = delete;
        Engine &operator=(const Engine &) = delete;

        PartitionId add_partition();
        ComponentId add_component(PartitionId partition, std::unique_ptr<Component> component);
        ComponentId add_component(PartitionId partition, Component &component);

        /// Declares that `from` sends to `to` with at least `min_delay`. Checked against the
        /// lookahead when a run starts.
        void register_channel(PartitionId from, PartitionId to, SimTime min_delay);

        /// Schedules from outside any component (setup, controller). `time` must not precede
        /// the engine's current time.
        void schedule(ComponentId target, SimTime time, const Message &msg);

        /// Runs until quiescence or until every event at or before `horizon` is delivered.
        /// Returns the time of the last delivered event on quiescence, otherwise `horizon`.
        SimTime run_epochs(const SyncConfig &sync, SimTime horizon = SimTime::max());

        SimTime now() const noexcept { return now_; }
        std::size_t partition_count() const noexcept { return partitions_.size(); }
        std::size_t component_count() const noexcept { return components_.size(); }
        PartitionId partition_of(ComponentId c) const { return components_.at(c).partition; }
        std::uint64_t delivered_events() const noexcept;
        std::uint64_t epochs() const noexcept { return epochs_; }
        bool idle() const noexcept;

        /// When enabled, every delivery is recorded per target component as (time, seq).
        void enable_trace(bool on) { trace_ = on; }
        std::vector<std::pair<SimTime, std::uint64_t>> trace(ComponentId c) const;

    private:
        friend class Context;

        struct ComponentSlot
        {
            Component *ptr = nullptr;
            std::unique_ptr<Component> owned;
            PartitionId partition = 0;
            std::uint64_t counter = 0;
            std::vector<std::pair<SimTime, std::uint64_t>> trace;
        };

        struct Partition
        {
            std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
            std::vector<Event> outbox;
            SimTime now{};
            SimTime last_delivered{};
            bool delivered_any = false;
            std::uint64_t delivered = 0;
            std::exception_ptr error;
        };

        struct Channel
        {
            PartitionId from;
            PartitionId to;
            SimTime min_delay;
        };

        std::uint64_t next_seq(ComponentId issuer);
        void enqueue(PartitionId from, SimTime now, const Event &ev);
        void drain(PartitionId p, SimTime epoch_end);
        void exchange();

        std::vector<ComponentSlot> components_;
        std::vector<Partition> partitions_;
        std::vector<Channel> channels_;
        std::uint64_t controller_counter_ = 0;
        SimTime now_{};
        SimTime lookahead_{};
        std::uint64_t epochs_ = 0;
        bool trace_ = false;
    };

} // namespace cxlsim

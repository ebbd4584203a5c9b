#include "cxlsim/sim/engine.hpp"

#include <algorithm>
#include <string>

namespace cxlsim
{
    namespace
    {
        constexpr std::uint64_t kCounterBits = 40;
        constexpr std::uint64_t kCounterLimit = std::uint64_t{1} << kCounterBits;

        SimTime saturating_add(SimTime a, SimTime b) noexcept
        {
            return a > SimTime::max() - b ? SimTime::max() : SimTime{a.ps() + b.ps()};
        }
    } // namespace

    void Context::schedule_at(ComponentId target, SimTime time, const Message &msg)
    {
        if (time < now_)
        {
            throw SchedulingInPast("component " + std::to_string(self_) + " scheduled at " +
                                   std::to_string(time.ps()) + " ps, current time " + std::to_string(now_.ps()) + " ps");
        }
        if (target >= engine_->components_.size())
            throw InvalidArgument("unknown target component " + std::to_string(target));
        Event ev{time, target, engine_->next_seq(self_), msg};
        engine_->enqueue(partition_, now_, ev);
    }

    Engine::Engine() = default;
    Engine::~Engine() = default;

    PartitionId Engine::add_partition()
    {
        partitions_.emplace_back();
        return static_cast<PartitionId>(partitions_.size() - 1);
    }

    ComponentId Engine::add_component(PartitionId partition, std::unique_ptr<Component> component)
    {
        Component &ref = *component;
        const ComponentId id = add_component(partition, ref);
        components_[id].owned = std::move(component);
        return id;
    }

    ComponentId Engine::add_component(PartitionId partition, Component &component)
    {
        if (partition >= partitions_.size())
            throw InvalidArgument("unknown partition " + std::to_string(partition));
        if (components_.size() >= kController)
            throw InvalidArgument("too many components");
        ComponentSlot slot;
        slot.ptr = &component;
        slot.partition = partition;
        components_.push_back(std::move(slot));
        return static_cast<ComponentId>(components_.size() - 1);
    }

    void Engine::register_channel(PartitionId from, PartitionId to, SimTime min_delay)
    {
        channels_.push_back(Channel{from, to, min_delay});
    }

    void Engine::schedule(ComponentId target, SimTime time, const Message &msg)
    {
        if (time < now_)
            throw SchedulingInPast("controller scheduled at " + std::to_string(time.ps()) + " ps, engine time " +
                                   std::to_string(now_.ps()) + " ps");
        if (target >= components_.size())
            throw InvalidArgument("unknown target component " + std::to_string(target));
        if (controller_counter_ >= kCounterLimit)
            throw SimTimeOverflow("event sequence space exhausted");
        Event ev{time, target, (std::uint64_t{kController} << kCounterBits) | controller_counter_++, msg};
        partitions_[components_[target].partition].queue.push(ev);
    }

    std::uint64_t Engine::next_seq(ComponentId issuer)
    {
        auto &slot = components_[issuer];
        if (slot.counter >= kCounterLimit)
            throw SimTimeOverflow("event sequence space exhausted for component " + std::to_string(issuer));
        return (std::uint64_t{issuer} << kCounterBits) | slot.counter++;
    }

    void Engine::enqueue(PartitionId from, SimTime now, const Event &ev)
    {
        const PartitionId to = components_[ev.target].partition;
        if (to == from)
        {
            partitions_[to].queue.push(ev);
            return;
        }
        if (ev.time - now < lookahead_)
        {
            throw LookaheadViolation("cross-partition message from partition " + std::to_string(from) + " to " +
                                     std::to_string(to) + " with delay " + std::to_string((ev.time - now).ps()) +
                                     " ps < lookahead " + std::to_string(lookahead_.ps()) + " ps");
        }
        partitions_[from].outbox.push_back(ev);
    }

    void Engine::drain(PartitionId p, SimTime epoch_end)
    {
        Partition &part = partitions_[p];
        Context ctx(*this, p);
        try
        {
            while (!part.queue.empty() && part.queue.top().time < epoch_end)
            {
                const Event ev = part.queue.top();
                part.queue.pop();
                part.now = ev.time;
                part.last_delivered = ev.time;
                part.delivered_any = true;
                ++part.delivered;
                ctx.now_ = ev.time;
                ctx.self_ = ev.target;
                ComponentSlot &slot = components_[ev.target];
                if (trace_)
                    slot.trace.emplace_back(ev.time, ev.seq);
                slot.ptr->handle(ev, ctx);
            }
        }
        catch (...)
        {
            part.error = std::current_exception();
        }
    }

    void Engine::exchange()
    {
        for (auto &part : partitions_)
        {
            for (const Event &ev : part.outbox)
                partitions_[components_[ev.target].partition].queue.push(ev);
            part.outbox.clear();
        }
    }

    SimTime Engine::run_epochs(const SyncConfig &sync, SimTime horizon)
    {
        const std::size_t np = partitions_.size();
        if (np == 0)
            return now_;
        if (np > 1 && sync.lookahead == SimTime::zero())
            throw LookaheadViolation("lookahead must be positive when the model has more than one partition");
        for (const auto &ch : channels_)
        {
            if (ch.from != ch.to && ch.min_delay < sync.lookahead)
            {
                throw LookaheadViolation("channel " + std::to_string(ch.from) + "->" + std::to_string(ch.to) +
                                         " has minimum delay " + std::to_string(ch.min_delay.ps()) +
                                         " ps below lookahead " + std::to_string(sync.lookahead.ps()) + " ps");
            }
        }
        lookahead_ = sync.lookahead;
        const unsigned threads = static_cast<unsigned>(std::clamp<std::size_t>(sync.threads == 0 ? 1 : sync.threads, 1, np));
        const SimTime stop_at = saturating_add(horizon, SimTime{1});

        // Worker pool. Worker w drains active partitions w, w + threads, ...
        std::atomic<std::uint64_t> generation{0};
        std::atomic<unsigned> pending{0};
        bool stop = false;
        SimTime epoch_end{};
        std::vector<PartitionId> active;
        std::vector<std::jthread> workers;
        auto drain_share = [&](unsigned w) {
            for (std::size_t i = w; i < active.size(); i += threads)
                drain(active[i], epoch_end);
        };
        for (unsigned w = 1; w < threads; ++w)
        {
            workers.emplace_back([&, w] {
                std::uint64_t seen = 0;
                for (;;)
                {
                    generation.wait(seen);
                    seen = generation.load();
                    if (stop)
                        return;
                    drain_share(w);
                    if (pending.fetch_sub(1) == 1)
                        pending.notify_one();
                }
            });
        }
        auto shutdown = [&] {
            stop = true;
            generation.fetch_add(1);
            generation.notify_all();
            workers.clear();
        };

        bool reached_horizon = false;
        for (;;)
        {
            SimTime tmin = SimTime::max();
            bool any = false;
            for (const auto &part : partitions_)
            {
                if (!part.queue.empty())
                {
                    tmin = any ? min(tmin, part.queue.top().time) : part.queue.top().time;
                    any = true;
                }
            }
            if (!any)
                break;
            if (tmin > horizon)
            {
                reached_horizon = true;
                break;
            }
            now_ = tmin;
            epoch_end = np == 1 ? stop_at : min(saturating_add(tmin, lookahead_), stop_at);
            active.clear();
            for (PartitionId p = 0; p < np; ++p)
            {
                const auto &q = partitions_[p].queue;
                if (!q.empty() && q.top().time < epoch_end)
                    active.push_back(p);
            }
            ++epochs_;
            if (threads == 1 || active.size() <= 1)
            {
                for (PartitionId p : active)
                    drain(p, epoch_end);
            }
            else
            {
                pending.store(threads - 1);
                generation.fetch_add(1);
                generation.notify_all();
                drain_share(0);
                for (unsigned v = pending.load(); v != 0; v = pending.load())
                    pending.wait(v);
            }
            for (auto &part : partitions_)
            {
                if (part.error)
                {
                    auto err = part.error;
                    part.error = nullptr;
                    shutdown();
                    std::rethrow_exception(err);
                }
            }
            exchange();
        }
        shutdown();

        if (reached_horizon)
        {
            now_ = max(now_, horizon);
            return horizon;
        }
        SimTime last = now_;
        for (const auto &part : partitions_)
        {
            if (part.delivered_any)
                last = max(last, part.last_delivered);
        }
        now_ = last;
        return last;
    }

    std::uint64_t Engine::delivered_events() const noexcept
    {
        std::uint64_t n = 0;
        for (const auto &part : partitions_)
            n += part.delivered;
        return n;
    }

    bool Engine::idle() const noexcept
    {
        return std::all_of(partitions_.begin(), partitions_.end(),
                           [](const Partition &p) { return p.queue.empty() && p.outbox.empty(); });
    }

    std::vector<std::pair<SimTime, std::uint64_t>> Engine::trace(ComponentId c) const
    {
        return components_.at(c).trace;
    }

} // namespace cxlsim

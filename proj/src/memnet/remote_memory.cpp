#include "cxlsim/memnet/remote_memory.hpp"

#include "cxlsim/errors.hpp"

#include <algorithm>

namespace cxlsim::memnet
{
    void DeviceConfig::validate() const
    {
        dram.validate();
        if (channels == 0)
            throw InvalidArgument("device.channels must be >= 1");
        if (capacity == 0 || capacity % kPageBytes != 0 || base % kPageBytes != 0)
            throw InvalidArgument("device.capacity and device.base must be page multiples, capacity > 0");
        if (!(crossbar_cycle_ns > 0.0))
            throw InvalidArgument("device.crossbar_cycle_ns must be > 0");
        if (queue_window == 0)
            throw InvalidArgument("device.queue_window must be >= 1");
    }

    RemoteMemory::RemoteMemory(const DeviceConfig &device, const LinkConfig &link, std::vector<ComponentId> host_endpoints)
        : device_(device),
          cycle_(device.crossbar_cycle()),
          controller_(device.dram, device.channels, device.base, device.capacity, device.queue_window),
          endpoints_(std::move(host_endpoints)),
          inputs_(endpoints_.size()),
          granted_(device.channels, 0)
    {
        response_tx_.reserve(endpoints_.size());
        for (std::size_t i = 0; i < endpoints_.size(); ++i)
            response_tx_.emplace_back(link);
    }

    void RemoteMemory::handle(const Event &ev, Context &ctx)
    {
        const Message &m = ev.payload;
        switch (m.kind)
        {
        case msg::kRequestArrival:
            arrive(m.req, ctx);
            break;
        case kXbarTick:
            tick(ctx);
            break;
        case kChannelEnqueue:
            if (controller_.enqueue(m.req))
                ctx.schedule_at(ctx.self(), ctx.now(), Message{kChannelKick, m.index, {}});
            break;
        case kChannelKick:
        {
            std::optional<SimTime> next;
            if (auto issued = controller_.kick(m.index, ctx.now(), next))
            {
                const std::uint32_t tag = m.index | (static_cast<std::uint32_t>(issued->result.outcome) << 24);
                MemRequest req = issued->req;
                req.complete_time = issued->result.completion;
                ctx.schedule_at(ctx.self(), issued->result.completion, Message{kChannelDone, tag, req});
            }
            if (next)
                ctx.schedule_at(ctx.self(), *next, Message{kChannelKick, m.index, {}});
            break;
        }
        case kChannelDone:
        {
            const std::uint32_t ch = m.index & 0xFFFFFF;
            const auto outcome = static_cast<RowOutcome>(m.index >> 24);
            controller_.complete(ch, m.req, ServiceResult{m.req.complete_time, m.req.complete_time, outcome});
            const HostId host = m.req.host;
            egress_[{host, m.req.roi}] += kLineBytes;
            const SimTime arrival = response_tx_.at(host).transmit(ctx.now());
            ctx.schedule_at(endpoints_.at(host), arrival, Message{msg::kResponseArrival, 0, m.req});
            break;
        }
        default:
            throw InvalidArgument("remote memory: unknown message kind " + std::to_string(m.kind));
        }
    }

    void RemoteMemory::arrive(const MemRequest &req, Context &ctx)
    {
        if (req.host >= inputs_.size())
            throw InvalidArgument("request from unknown host " + std::to_string(req.host));
        // Validates the address before it reaches the crossbar.
        (void)controller_.channel_of(req.addr);
        ingress_[{req.host, req.roi}] += kLineBytes;
        auto &q = inputs_[req.host];
        q.push_back(req);
        max_input_occupancy_ = std::max(max_input_occupancy_, q.size());
        if (!tick_armed_)
        {
            tick_armed_ = true;
            const std::uint64_t c = cycle_.ps();
            const SimTime edge{(ctx.now().ps() + c - 1) / c * c};
            ctx.schedule_at(ctx.self(), edge, Message{kXbarTick, 0, {}});
        }
    }

    void RemoteMemory::tick(Context &ctx)
    {
        std::fill(granted_.begin(), granted_.end(), 0);
        const std::size_t hosts = inputs_.size();
        bool pending = false;
        for (std::size_t k = 0; k < hosts; ++k)
        {
            auto &q = inputs_[(rr_ + k) % hosts];
            if (q.empty())
                continue;
            const std::uint32_t ch = controller_.channel_of(q.front().addr);
            if (!granted_[ch])
            {
                granted_[ch] = 1;
                ctx.schedule_at(ctx.self(), ctx.now() + cycle_, Message{kChannelEnqueue, ch, q.front()});
                q.pop_front();
            }
            pending = pending || !q.empty();
        }
        rr_ = (rr_ + 1) % std::max<std::size_t>(hosts, 1);
        if (pending)
            ctx.schedule_at(ctx.self(), ctx.now() + cycle_, Message{kXbarTick, 0, {}});
        else
            tick_armed_ = false;
    }

} // namespace cxlsim::memnet

#include "cxlsim/memnet/link.hpp"

#include "cxlsim/errors.hpp"

namespace cxlsim::memnet
{
    void LinkConfig::validate() const
    {
        if (!(latency_ns >= 0.0))
            throw InvalidArgument("link.latency_ns must be >= 0");
        if (!(bandwidth_gbps > 0.0))
            throw InvalidArgument("link.bandwidth_gbps must be > 0");
        if (credits < 1)
            throw InvalidArgument("link.credits must be >= 1");
    }

    void LinkEndpoint::send(Context &ctx, const MemRequest &req)
    {
        if (credits_ == 0 || !waiting_.empty())
        {
            ++meters_[req.roi].credit_stalls;
            waiting_.push_back(req);
            return;
        }
        transmit(ctx, req);
    }

    void LinkEndpoint::on_response(Context &ctx)
    {
        if (credits_ >= cfg_.credits)
            throw InvalidArgument("credit returned with no request in flight");
        ++credits_;
        while (credits_ > 0 && !waiting_.empty())
        {
            const MemRequest req = waiting_.front();
            waiting_.pop_front();
            transmit(ctx, req);
        }
    }

    void LinkEndpoint::transmit(Context &ctx, const MemRequest &req)
    {
        auto &m = meters_[req.roi];
        ++m.in_flight[in_flight()];
        --credits_;
        m.bytes += kLineBytes;
        ++m.messages;
        const SimTime arrival = tx_.transmit(ctx.now());
        ctx.schedule_at(remote_, arrival, Message{msg::kRequestArrival, 0, req});
    }

} // namespace cxlsim::memnet

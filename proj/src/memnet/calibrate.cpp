#include "cxlsim/memnet/calibrate.hpp"

#include "cxlsim/errors.hpp"

namespace cxlsim::memnet
{
    LinearReadGenerator::LinearReadGenerator(const GeneratorSpec &spec, HostId host, std::uint64_t base, ComponentId remote)
        : spec_(spec), host_(host), base_(base), interval_(SimTime::from_ns(spec.issue_interval_ns)), endpoint_(spec.link, remote)
    {
        if (spec.outstanding == 0 || spec.span < kLineBytes)
            throw InvalidArgument("generator needs >= 1 outstanding request and a span of at least one line");
    }

    void LinearReadGenerator::handle(const Event &ev, Context &ctx)
    {
        switch (ev.payload.kind)
        {
        case kIssue:
        {
            if (in_flight_ >= spec_.outstanding)
            {
                stalled_ = true;
                return;
            }
            MemRequest req;
            req.id = issued_++;
            req.addr = base_ + next_offset_;
            req.host = host_;
            req.kind = AccessKind::Read;
            req.source = RequestSource::Generator;
            req.issue_time = ctx.now();
            req.roi = 1;
            next_offset_ = (next_offset_ + kLineBytes) % (spec_.span / kLineBytes * kLineBytes);
            ++in_flight_;
            endpoint_.send(ctx, req);
            next_allowed_ = ctx.now() + interval_;
            ctx.schedule_at(ctx.self(), next_allowed_, Message{kIssue, 0, {}});
            break;
        }
        case msg::kResponseArrival:
            endpoint_.on_response(ctx);
            --in_flight_;
            ++completed_;
            if (stalled_)
            {
                stalled_ = false;
                ctx.schedule_at(ctx.self(), max(ctx.now(), next_allowed_), Message{kIssue, 0, {}});
            }
            break;
        default:
            throw InvalidArgument("generator: unknown message kind " + std::to_string(ev.payload.kind));
        }
    }

    CalibrationResult calibrate(const DeviceConfig &device, SimTime duration, const GeneratorSpec &gen, unsigned threads)
    {
        device.validate();
        gen.link.validate();
        if (duration == SimTime::zero())
            throw InvalidArgument("calibration duration must be > 0");

        Engine engine;
        const PartitionId host_part = engine.add_partition();
        const PartitionId remote_part = engine.add_partition();
        // Component ids are assigned in order: generator 0, remote 1.
        const ComponentId remote_id = 1;
        auto generator = std::make_unique<LinearReadGenerator>(gen, 0, device.base, remote_id);
        auto &gen_ref = *generator;
        const ComponentId gen_id = engine.add_component(host_part, std::move(generator));
        auto remote = std::make_unique<RemoteMemory>(device, gen.link, std::vector<ComponentId>{gen_id});
        auto &remote_ref = *remote;
        if (engine.add_component(remote_part, std::move(remote)) != remote_id)
            throw InvalidArgument("unexpected component numbering");
        engine.register_channel(host_part, remote_part, gen.link.min_delay());
        engine.register_channel(remote_part, host_part, gen.link.min_delay());

        engine.schedule(gen_id, SimTime::zero(), Message{LinearReadGenerator::kIssue, 0, {}});
        engine.run_epochs(SyncConfig{gen.link.min_delay(), threads}, duration);
        (void)gen_ref;

        CalibrationResult r;
        r.channels = device.channels;
        r.peak_gbps = peak_bandwidth(device.dram, device.channels);
        r.meter = remote_ref.controller().total();
        r.bytes = r.meter.bytes();
        r.duration = duration;
        r.sustained_gbps = static_cast<double>(r.bytes) / duration.seconds() / 1e9;
        r.ratio = r.sustained_gbps / r.peak_gbps;
        return r;
    }

} // namespace cxlsim::memnet

#include "cxlsim/stats/snapshot.hpp"

#include "cxlsim/errors.hpp"

#include <limits>

namespace cxlsim::stats
{
    std::uint64_t RoiSnapshot::retired_ops() const noexcept
    {
        std::uint64_t s = 0;
        for (auto r : core_retired)
            s += r;
        return s;
    }

    ControllerMeter StatSnapshot::remote_total() const
    {
        ControllerMeter t;
        for (const auto &c : remote_channels)
            t.merge(c);
        return t;
    }

    double bandwidth(std::uint64_t bytes, SimTime duration)
    {
        if (duration == SimTime::zero())
            throw EmptyRoi("bandwidth over a zero-length ROI");
        return static_cast<double>(bytes) / duration.seconds() / 1e9;
    }

    double bandwidth(const RoiSnapshot &roi, Where where)
    {
        std::uint64_t bytes = 0;
        switch (where)
        {
        case Where::LocalController:
            bytes = roi.local_controller.bytes();
            break;
        case Where::RemoteController:
            bytes = roi.remote_controller.bytes();
            break;
        case Where::Link:
            bytes = roi.link.bytes;
            break;
        case Where::Reported:
            bytes = roi.reported_bytes;
            break;
        }
        if (roi.end <= roi.begin)
            throw EmptyRoi("ROI '" + roi.label + "' has zero duration");
        return bandwidth(bytes, roi.duration());
    }

    double remote_split(std::uint64_t local_ops, std::uint64_t remote_ops)
    {
        const std::uint64_t total = local_ops + remote_ops;
        if (total == 0)
            throw NoMemoryOps("no retired memory operations");
        return static_cast<double>(remote_ops) / static_cast<double>(total);
    }

    double remote_split(const RoiSnapshot &roi) { return remote_split(roi.local_ops, roi.remote_ops); }

    double ipc_proxy(const RoiSnapshot &roi)
    {
        const std::uint64_t cycles = roi.cycles();
        if (cycles == 0)
            throw EmptyRoi("ROI '" + roi.label + "' spans zero cycles");
        return static_cast<double>(roi.retired_ops()) / static_cast<double>(cycles);
    }

    double parallel_efficiency(const PeInputs &in)
    {
        if (!(in.num_processes > 0) || !(in.time_serial_baseline > 0) || !(in.time_parallel > 0))
            throw InvalidArgument("parallel efficiency inputs must all be positive");
        return (1.0 / in.num_processes) * (in.time_serial_baseline / in.time_parallel);
    }

    double littles_law_bound_gbps(std::uint64_t outstanding, SimTime round_trip)
    {
        if (round_trip == SimTime::zero())
            return std::numeric_limits<double>::infinity();
        return static_cast<double>(outstanding * kLineBytes) / round_trip.seconds() / 1e9;
    }

} // namespace cxlsim::stats

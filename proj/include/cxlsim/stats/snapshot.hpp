#pragma once

#include "cxlsim/stats/meters.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cxlsim::stats
{
    struct CacheCounters
    {
        std::uint64_t hits = 0;
        std::uint64_t misses = 0;
        double hit_rate() const noexcept
        {
            const auto total = hits + misses;
            return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
        }
        bool operator==(const CacheCounters &) const = default;
    };

    /// Sealed statistics of one node over one ROI.
    struct RoiSnapshot
    {
        std::string label;
        std::uint32_t tag = 0;
        SimTime begin{};
        SimTime end{};
        SimTime cycle{};                     // core clock period
        std::vector<std::uint64_t> core_retired;
        std::uint64_t local_ops = 0;         // retired memory ops served by local pages
        std::uint64_t remote_ops = 0;        // retired memory ops served by remote pages
        ControllerMeter local_controller;    // this node's local controller, this ROI
        ControllerMeter remote_controller;   // remote controller bytes issued by this node in this ROI
        LinkMeter link;                      // this node's link (request direction)
        std::uint64_t xbar_ingress = 0;      // remote crossbar bytes from this node in this ROI
        std::uint64_t link_egress = 0;       // device-to-node response bytes
        std::array<CacheCounters, 3> caches{}; // L1D, L2, L3
        std::uint64_t prefetches = 0;
        LatencyHistogram miss_latency;
        std::uint64_t reported_bytes = 0;    // workload's own counting convention (STREAM)

        SimTime duration() const noexcept { return end - begin; }
        std::uint64_t cycles() const noexcept { return cycle.ps() == 0 ? 0 : duration().ps() / cycle.ps(); }
        std::uint64_t retired_ops() const noexcept;
        std::uint64_t memory_ops() const noexcept { return local_ops + remote_ops; }
        bool operator==(const RoiSnapshot &) const = default;
    };

    struct NodeSnapshot
    {
        HostId host = 0;
        std::string arch_profile;
        std::string workload;
        std::uint32_t max_outstanding = 0;
        std::vector<RoiSnapshot> rois;
        std::map<std::string, std::string> results;
        bool operator==(const NodeSnapshot &) const = default;
    };

    /// Statistics of one run. Everything except `wallclock_s`, `threads` and `events` is a
    /// deterministic function of (checkpoint, timing config).
    struct StatSnapshot
    {
        std::string run_id;
        std::vector<NodeSnapshot> nodes;
        std::vector<ControllerMeter> remote_channels; // whole-run totals per device channel
        std::uint64_t xbar_ingress = 0;               // whole run, all hosts
        std::uint64_t link_bytes = 0;                 // whole run, all hosts, request direction
        SimTime start{};
        SimTime end{};
        bool completed = true;                        // false when stopped by the horizon
        std::uint64_t events = 0;
        unsigned threads = 1;
        double wallclock_s = 0.0;

        ControllerMeter remote_total() const;
    };

    enum class Where : std::uint8_t
    {
        LocalController,
        RemoteController,
        Link,
        Reported,
    };

    /// (bytes_read + bytes_written) / ROI duration in GB/s (1e9 B/s). Throws EmptyRoi for a
    /// zero-length ROI.
    double bandwidth(const RoiSnapshot &roi, Where where);
    double bandwidth(std::uint64_t bytes, SimTime duration);

    /// Remote-region retired memory ops / all retired memory ops. Throws NoMemoryOps.
    double remote_split(const RoiSnapshot &roi);
    double remote_split(std::uint64_t local_ops, std::uint64_t remote_ops);

    /// Retired ops per core cycle over the ROI, summed over the node's cores.
    double ipc_proxy(const RoiSnapshot &roi);

    struct PeInputs
    {
        double num_processes = 1;
        double time_serial_baseline = 1;
        double time_parallel = 1;
    };
    /// (1 / num_processes) x (time_serial_baseline / time_parallel). Throws InvalidArgument
    /// unless all inputs are positive.
    double parallel_efficiency(const PeInputs &in);

    /// Little's-law ceiling on a node's remote bandwidth: `outstanding` lines in flight, each
    /// taking at least `round_trip`.
    double littles_law_bound_gbps(std::uint64_t outstanding, SimTime round_trip);

} // namespace cxlsim::stats

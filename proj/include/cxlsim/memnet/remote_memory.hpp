#pragma once

#include "cxlsim/memnet/dram.hpp"
#include "cxlsim/memnet/link.hpp"
#include "cxlsim/sim/engine.hpp"
#include "cxlsim/stats/meters.hpp"

#include <deque>
#include <map>
#include <vector>

namespace cxlsim::memnet
{
    struct DeviceConfig
    {
        std::uint64_t base = std::uint64_t{4} << 30;
        std::uint64_t capacity = std::uint64_t{128} << 30;
        std::uint32_t channels = 4;
        DramTiming dram{};
        std::uint32_t queue_window = 8;
        double crossbar_cycle_ns = 0.5;

        void validate() const;
        SimTime crossbar_cycle() const { return SimTime::from_ns(crossbar_cycle_ns); }
        bool operator==(const DeviceConfig &) const = default;
    };

    /// The remote memory node: per-host crossbar input queues with round-robin single-cycle
    /// arbitration, a multi-channel DRAM controller, and the device-to-host half of every link.
    class RemoteMemory final : public Component
    {
    public:
        RemoteMemory(const DeviceConfig &device, const LinkConfig &link, std::vector<ComponentId> host_endpoints);

        void handle(const Event &ev, Context &ctx) override;

        const DramController &controller() const noexcept { return controller_; }
        /// Bytes entering the crossbar, by (host, roi).
        const std::map<stats::Attribution, std::uint64_t> &ingress() const noexcept { return ingress_; }
        /// Bytes leaving on the response direction of each host's link.
        const std::map<stats::Attribution, std::uint64_t> &egress() const noexcept { return egress_; }
        std::size_t max_input_occupancy() const noexcept { return max_input_occupancy_; }

    private:
        static constexpr std::uint32_t kXbarTick = 100;
        static constexpr std::uint32_t kChannelEnqueue = 101;
        static constexpr std::uint32_t kChannelKick = 102;
        static constexpr std::uint32_t kChannelDone = 103;

        void arrive(const MemRequest &req, Context &ctx);
        void tick(Context &ctx);

        DeviceConfig device_;
        SimTime cycle_;
        DramController controller_;
        std::vector<ComponentId> endpoints_;
        std::vector<LinkTx> response_tx_;
        std::vector<std::deque<MemRequest>> inputs_;
        std::vector<char> granted_;
        std::size_t rr_ = 0;
        bool tick_armed_ = false;
        std::size_t max_input_occupancy_ = 0;
        std::map<stats::Attribution, std::uint64_t> ingress_;
        std::map<stats::Attribution, std::uint64_t> egress_;
    };

} // namespace cxlsim::memnet

#pragma once

#include "cxlsim/memnet/link.hpp"
#include "cxlsim/memnet/remote_memory.hpp"
#include "cxlsim/sim/engine.hpp"

namespace cxlsim::memnet
{
    /// Linear read stream: one line per `issue_interval`, addresses ascending through
    /// `span` bytes starting at `base` and wrapping.
    struct GeneratorSpec
    {
        std::uint32_t outstanding = 128;
        double issue_interval_ns = 0.25;
        std::uint64_t span = std::uint64_t{1} << 30;
        LinkConfig link{0.0, 256.0, 128};
    };

    class LinearReadGenerator final : public Component
    {
    public:
        LinearReadGenerator(const GeneratorSpec &spec, HostId host, std::uint64_t base, ComponentId remote);

        void handle(const Event &ev, Context &ctx) override;

        std::uint64_t issued() const noexcept { return issued_; }
        std::uint64_t completed() const noexcept { return completed_; }
        const LinkEndpoint &endpoint() const noexcept { return endpoint_; }

        static constexpr std::uint32_t kIssue = 200;

    private:
        GeneratorSpec spec_;
        HostId host_;
        std::uint64_t base_;
        SimTime interval_;
        LinkEndpoint endpoint_;
        std::uint64_t next_offset_ = 0;
        std::uint64_t issued_ = 0;
        std::uint64_t completed_ = 0;
        std::uint32_t in_flight_ = 0;
        bool stalled_ = false;
        SimTime next_allowed_{};
    };

    struct CalibrationResult
    {
        std::uint32_t channels = 0;
        double peak_gbps = 0.0;
        double sustained_gbps = 0.0;
        double ratio = 0.0;
        std::uint64_t bytes = 0;
        SimTime duration{};
        stats::ControllerMeter meter{};
    };

    /// Saturates the device with linear reads for `duration` and reports bytes delivered by the
    /// controller per unit time.
    CalibrationResult calibrate(const DeviceConfig &device, SimTime duration, const GeneratorSpec &gen = {},
                                unsigned threads = 1);

} // namespace cxlsim::memnet

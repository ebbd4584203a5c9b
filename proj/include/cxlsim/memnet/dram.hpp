#pragma once

#include "cxlsim/memnet/request.hpp"
#include "cxlsim/sim/time.hpp"
#include "cxlsim/stats/meters.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <vector>

namespace cxlsim::memnet
{
    enum class RowPolicy : std::uint8_t
    {
        OpenRow,
        ClosedRow,
    };

    /// DDR timing for one channel. Banks are grouped; consecutive column commands to the same
    /// bank group are spaced by tCCD_L, to different groups by tBURST.
    struct DramTiming
    {
        double data_rate_mts = 2400.0;
        std::uint32_t bus_width_bytes = 8;
        std::uint32_t burst_beats = 8;
        double tCL_ns = 14.0;
        double tRCD_ns = 14.0;
        double tRP_ns = 14.0;
        double tCCD_L_ns = 5.0;
        std::uint32_t banks_per_channel = 16;
        std::uint32_t bank_groups = 4;
        std::uint64_t row_bytes = 8192;
        RowPolicy page_policy = RowPolicy::OpenRow;

        void validate() const;

        SimTime tCL() const { return SimTime::from_ns(tCL_ns); }
        SimTime tRCD() const { return SimTime::from_ns(tRCD_ns); }
        SimTime tRP() const { return SimTime::from_ns(tRP_ns); }
        SimTime tCCD_L() const { return max(SimTime::from_ns(tCCD_L_ns), tBURST()); }
        /// burst_beats / data_rate, rounded up to whole picoseconds.
        SimTime tBURST() const { return SimTime::from_ns(burst_beats * 1000.0 / data_rate_mts); }
        std::uint64_t lines_per_row() const noexcept { return row_bytes / kLineBytes; }
        std::uint32_t banks_per_group() const noexcept { return banks_per_channel / bank_groups; }

        bool operator==(const DramTiming &) const = default;
    };

    /// Theoretical peak in GB/s (1e9 B/s): nchannels x bus width x transfer rate.
    double peak_bandwidth(const DramTiming &timing, std::uint32_t nchannels);

    struct DramCoord
    {
        std::uint32_t channel = 0;
        std::uint32_t bank = 0;
        std::uint64_t row = 0;
        bool operator==(const DramCoord &) const = default;
    };

    /// Line-interleaved decode over the device-relative address:
    /// [ row | column | bank | channel | 6-bit line offset ].
    DramCoord decode_address(std::uint64_t addr, std::uint32_t nchannels, const DramTiming &timing,
                             std::uint64_t base, std::uint64_t size);

    struct BankState
    {
        std::optional<std::uint64_t> open_row;
        SimTime next_ready{};
    };

    struct ChannelState
    {
        explicit ChannelState(const DramTiming &timing)
            : banks(timing.banks_per_channel), group_next_col(timing.bank_groups)
        {
        }

        std::vector<BankState> banks;
        std::vector<SimTime> group_next_col;
        SimTime next_col{};
        SimTime bus_next_free{};
    };

    enum class RowOutcome : std::uint8_t
    {
        Hit,
        Empty,
        Conflict,
    };

    struct ServiceResult
    {
        SimTime completion;
        SimTime column_time;
        RowOutcome outcome;
    };

    /// Services one line access on `channel` no earlier than `now` and advances bank, bank group
    /// and data-bus state. At idle the completion is now + tCL + tBURST on a row hit,
    /// + tRCD on an empty bank and + tRP + tRCD on a row conflict.
    ServiceResult dram_service(ChannelState &channel, const DramTiming &timing, const DramCoord &where, SimTime now);

    /// Per-channel request queues in front of the timing model. Scheduling is first-ready FCFS
    /// over the oldest `window` entries: the oldest row hit, else the oldest request among those
    /// whose bank is ready soonest.
    class DramController
    {
    public:
        DramController(const DramTiming &timing, std::uint32_t channels, std::uint64_t base, std::uint64_t size,
                       std::uint32_t window = 8);

        std::uint32_t channel_of(std::uint64_t addr) const;

        /// Queues the request; returns true if the channel's scheduler must be kicked.
        bool enqueue(const MemRequest &req);

        struct Issued
        {
            MemRequest req;
            ServiceResult result;
        };
        /// Picks and services the next request on `ch`. `next_kick` receives the time of the
        /// next scheduling decision when the queue is still non-empty.
        std::optional<Issued> kick(std::uint32_t ch, SimTime now, std::optional<SimTime> &next_kick);

        /// Accounts a completed request. Called at its completion time.
        void complete(std::uint32_t ch, const MemRequest &req, const ServiceResult &r);

        std::uint32_t channels() const noexcept { return static_cast<std::uint32_t>(channels_.size()); }
        const DramTiming &timing() const noexcept { return timing_; }
        const stats::ControllerMeter &meter(std::uint32_t ch) const { return channels_.at(ch).meter; }
        stats::ControllerMeter total() const;
        const std::map<stats::Attribution, stats::ControllerMeter> &attributed() const noexcept { return attributed_; }
        std::size_t queued(std::uint32_t ch) const { return channels_.at(ch).queue.size(); }

    private:
        struct Queued
        {
            MemRequest req;
            DramCoord where;
        };
        struct Channel
        {
            explicit Channel(const DramTiming &t) : state(t) {}
            ChannelState state;
            std::deque<Queued> queue;
            bool armed = false;
            stats::ControllerMeter meter;
        };

        DramTiming timing_;
        std::uint64_t base_;
        std::uint64_t size_;
        std::uint32_t window_;
        std::vector<Channel> channels_;
        std::map<stats::Attribution, stats::ControllerMeter> attributed_;
    };

} // namespace cxlsim::memnet

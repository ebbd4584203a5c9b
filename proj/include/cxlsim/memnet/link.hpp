#pragma once

#include "cxlsim/memnet/request.hpp"
#include "cxlsim/sim/engine.hpp"
#include "cxlsim/stats/meters.hpp"

#include <cstdint>
#include <deque>
#include <map>

namespace cxlsim::memnet
{
    /// Message kinds exchanged between node endpoints and the remote memory node.
    namespace msg
    {
        inline constexpr std::uint32_t kRequestArrival = 1;  // node -> remote
        inline constexpr std::uint32_t kResponseArrival = 2; // remote -> node
    } // namespace msg

    struct LinkConfig
    {
        double latency_ns = 0.0;      // one way
        double bandwidth_gbps = 256.0; // serialization rate, GB/s
        std::uint32_t credits = 128;   // requests in flight per host

        void validate() const;
        SimTime latency() const { return SimTime::from_ns(latency_ns); }
        /// 64 B / bandwidth, rounded up to whole picoseconds.
        SimTime serialization() const { return SimTime::from_ns(static_cast<double>(kLineBytes) / bandwidth_gbps); }
        /// Smallest delay any message experiences crossing the link.
        SimTime min_delay() const { return latency() + serialization(); }

        bool operator==(const LinkConfig &) const = default;
    };

    /// One direction of a link: departures are serialized, arrivals lag by latency plus the
    /// line's serialization time.
    class LinkTx
    {
    public:
        explicit LinkTx(const LinkConfig &cfg) : latency_(cfg.latency()), serialization_(cfg.serialization()) {}

        /// Returns the arrival time of a message offered at `now`.
        SimTime transmit(SimTime now)
        {
            const SimTime departure = max(now, next_free_);
            next_free_ = departure + serialization_;
            last_departure_ = departure;
            return departure + latency_ + serialization_;
        }
        SimTime last_departure() const noexcept { return last_departure_; }

    private:
        SimTime latency_;
        SimTime serialization_;
        SimTime next_free_{};
        SimTime last_departure_{};
    };

    /// Arrival time of a single message on an idle link: now + latency + 64 B / bandwidth.
    inline SimTime link_transmit(const LinkConfig &link, SimTime now)
    {
        LinkTx tx(link);
        return tx.transmit(now);
    }

    /// Host side of the host<->device link: credit-controlled request transmission. A credit is
    /// consumed when a request departs and returned when its response arrives; requests that
    /// find no credit wait in FIFO order.
    class LinkEndpoint
    {
    public:
        LinkEndpoint(const LinkConfig &cfg, ComponentId remote) : cfg_(cfg), tx_(cfg), remote_(remote), credits_(cfg.credits) {}

        void send(Context &ctx, const MemRequest &req);
        /// Returns the credit of a completed request and drains waiting requests.
        void on_response(Context &ctx);

        std::uint32_t in_flight() const noexcept { return cfg_.credits - credits_; }
        std::size_t waiting() const noexcept { return waiting_.size(); }
        const LinkConfig &config() const noexcept { return cfg_; }

        /// Traffic sent, attributed to the ROI tag of each request.
        const std::map<std::uint32_t, stats::LinkMeter> &meters() const noexcept { return meters_; }

    private:
        void transmit(Context &ctx, const MemRequest &req);

        LinkConfig cfg_;
        LinkTx tx_;
        ComponentId remote_;
        std::uint32_t credits_;
        std::deque<MemRequest> waiting_;
        std::map<std::uint32_t, stats::LinkMeter> meters_;
    };

} // namespace cxlsim::memnet

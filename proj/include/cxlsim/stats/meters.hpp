#pragma once

#include "cxlsim/memnet/request.hpp"
#include "cxlsim/sim/time.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <utility>

namespace cxlsim::stats
{
    /// Fixed log2 latency histogram: bucket 0 holds < 1 ns, bucket k (1..14) holds
    /// [2^(k-1), 2^k) ns, and the last bucket holds >= 16 us.
    class LatencyHistogram
    {
    public:
        static constexpr std::size_t kBuckets = 16;

        void add(SimTime latency) noexcept
        {
            ++counts_[bucket_of(latency)];
            total_ps_ += latency.ps();
            ++samples_;
        }
        static std::size_t bucket_of(SimTime latency) noexcept
        {
            const std::uint64_t ns = latency.ps() / 1000;
            if (ns == 0)
                return 0;
            std::size_t k = 1;
            for (std::uint64_t v = ns; v > 1 && k < kBuckets - 1; v >>= 1)
                ++k;
            return k;
        }
        void merge(const LatencyHistogram &o) noexcept
        {
            for (std::size_t i = 0; i < kBuckets; ++i)
                counts_[i] += o.counts_[i];
            total_ps_ += o.total_ps_;
            samples_ += o.samples_;
        }

        const std::array<std::uint64_t, kBuckets> &counts() const noexcept { return counts_; }
        std::uint64_t samples() const noexcept { return samples_; }
        std::uint64_t total_ps() const noexcept { return total_ps_; }
        bool operator==(const LatencyHistogram &) const = default;

    private:
        std::array<std::uint64_t, kBuckets> counts_{};
        std::uint64_t total_ps_ = 0;
        std::uint64_t samples_ = 0;
    };

    struct ControllerMeter
    {
        std::uint64_t bytes_read = 0;
        std::uint64_t bytes_written = 0;
        std::uint64_t busy_ps = 0;
        std::uint64_t requests = 0;
        std::uint64_t row_hits = 0;
        std::uint64_t row_empty = 0;
        std::uint64_t row_conflicts = 0;

        std::uint64_t bytes() const noexcept { return bytes_read + bytes_written; }
        void merge(const ControllerMeter &o) noexcept
        {
            bytes_read += o.bytes_read;
            bytes_written += o.bytes_written;
            busy_ps += o.busy_ps;
            requests += o.requests;
            row_hits += o.row_hits;
            row_empty += o.row_empty;
            row_conflicts += o.row_conflicts;
        }
        bool operator==(const ControllerMeter &) const = default;
    };

    struct LinkMeter
    {
        std::uint64_t bytes = 0;
        std::uint64_t messages = 0;
        std::uint64_t credit_stalls = 0;
        std::map<std::uint32_t, std::uint64_t> in_flight; // in-flight count at send -> occurrences

        void merge(const LinkMeter &o)
        {
            bytes += o.bytes;
            messages += o.messages;
            credit_stalls += o.credit_stalls;
            for (const auto &[k, v] : o.in_flight)
                in_flight[k] += v;
        }
        bool operator==(const LinkMeter &) const = default;
    };

    /// Key for attributing traffic to the (host, ROI) that issued it.
    using Attribution = std::pair<HostId, std::uint32_t>;

} // namespace cxlsim::stats

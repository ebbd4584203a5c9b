#pragma once

#include "cxlsim/sim/time.hpp"

#include <cstdint>

namespace cxlsim
{
    using HostId = std::uint32_t;

    inline constexpr std::uint64_t kLineBytes = 64;
    inline constexpr std::uint64_t kPageBytes = 4096;

    enum class AccessKind : std::uint8_t
    {
        Read,
        Write,
    };

    enum class RequestSource : std::uint8_t
    {
        Demand,
        Prefetch,
        Writeback,
        StreamingStore,
        Generator,
    };

    /// One 64-byte line transfer between a node and a memory controller.
    struct MemRequest
    {
        std::uint64_t id = 0;
        std::uint64_t addr = 0; // physical, line aligned
        SimTime issue_time{};
        SimTime complete_time{};
        HostId host = 0;
        std::uint16_t core = 0;
        AccessKind kind = AccessKind::Read;
        RequestSource source = RequestSource::Demand;
        // ROI the request was issued in (0 = outside any ROI). Used to attribute bytes to the
        // issuing ROI at every meter on the path.
        std::uint32_t roi = 0;
    };

} // namespace cxlsim

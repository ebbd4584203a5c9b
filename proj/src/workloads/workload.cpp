#include "cxlsim/workloads/workload.hpp"

#include "cxlsim/errors.hpp"

#include <cstdio>

namespace cxlsim::workloads
{
    std::size_t Workload::first_roi() const
    {
        const auto ph = phases();
        for (std::size_t i = 0; i < ph.size(); ++i)
        {
            if (ph[i].roi)
                return i;
        }
        return ph.size();
    }

    fabric::HostMemory &Workload::mem() const
    {
        if (mem_ == nullptr)
            throw InvalidArgument("workload used before being attached to host memory");
        return *mem_;
    }

    std::uint64_t fnv1a(const void *data, std::size_t len, std::uint64_t h)
    {
        const auto *p = static_cast<const unsigned char *>(data);
        for (std::size_t i = 0; i < len; ++i)
        {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    std::string hex64(std::uint64_t v)
    {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
        return buf;
    }

    std::pair<std::uint64_t, std::uint64_t> core_chunk(std::uint64_t n, std::uint32_t core, std::uint32_t cores,
                                                       std::uint32_t elem_bytes)
    {
        const std::uint64_t per_line = kLineBytes / elem_bytes;
        const std::uint64_t lines = (n + per_line - 1) / per_line;
        const std::uint64_t per_core = (lines + cores - 1) / cores;
        const std::uint64_t begin = std::min(n, core * per_core * per_line);
        const std::uint64_t end = std::min(n, (core + 1) * per_core * per_line);
        return {begin, end};
    }

} // namespace cxlsim::workloads

#pragma once

#include "cxlsim/fabric/page_map.hpp"
#include "cxlsim/node/node.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace cxlsim::workloads
{
    /// Resources handed to a workload for its zero-time setup (allocation and mapping).
    struct SetupContext
    {
        fabric::HostMemory &mem;
        std::mt19937_64 &rng;
        // Virtual base and size of the shared segment this host participates in (0 if none).
        std::uint64_t shared_vbase = 0;
        std::uint64_t shared_bytes = 0;
        fabric::Access shared_access = fabric::Access::ReadOnly;
    };

    /// A node's workload: a node::Program plus setup, checkpointable descriptor state and
    /// post-run results.
    class Workload : public node::Program
    {
    public:
        void attach(fabric::HostMemory &mem) { mem_ = &mem; }

        virtual std::string kind() const = 0;
        virtual void setup(SetupContext &ctx) = 0;
        /// Descriptor words (allocated addresses) that restore() accepts verbatim.
        virtual std::vector<std::uint64_t> state() const = 0;
        virtual void restore(const std::vector<std::uint64_t> &state) = 0;
        /// Bytes the workload's own counting convention attributes to `phase` (0 if none).
        virtual std::uint64_t reported_bytes(std::size_t /*phase*/) const { return 0; }
        /// Named results computed from memory contents after the run (digests, checks).
        virtual std::map<std::string, std::string> results() const { return {}; }

        /// Index of the first ROI phase (phases().size() if none).
        std::size_t first_roi() const;

    protected:
        fabric::HostMemory &mem() const;

    private:
        fabric::HostMemory *mem_ = nullptr;
    };

    /// A node that runs nothing.
    class IdleWorkload final : public Workload
    {
    public:
        std::string kind() const override { return "idle"; }
        void setup(SetupContext &) override {}
        std::vector<std::uint64_t> state() const override { return {}; }
        void restore(const std::vector<std::uint64_t> &) override {}
        std::vector<node::PhaseInfo> phases() const override { return {}; }
        node::OpStream stream(std::size_t, std::uint32_t, std::uint32_t) override { return {}; }
    };

    /// 64-bit FNV-1a over a byte range.
    std::uint64_t fnv1a(const void *data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL);
    std::string hex64(std::uint64_t v);

    /// Contiguous [begin, end) element range of `core` when `n` elements are split into
    /// line-aligned chunks of `elem_bytes`-sized elements.
    std::pair<std::uint64_t, std::uint64_t> core_chunk(std::uint64_t n, std::uint32_t core, std::uint32_t cores,
                                                       std::uint32_t elem_bytes);

} // namespace cxlsim::workloads

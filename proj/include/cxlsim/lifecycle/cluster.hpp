#pragma once

#include "cxlsim/config/config.hpp"
#include "cxlsim/fabric/fabric.hpp"
#include "cxlsim/fabric/memory_store.hpp"
#include "cxlsim/fabric/page_map.hpp"
#include "cxlsim/node/node.hpp"
#include "cxlsim/stats/snapshot.hpp"
#include "cxlsim/workloads/workload.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace cxlsim::lifecycle
{
    /// Per-node state that survives between runs: page table, local memory contents, workload
    /// descriptor and the index of the next phase to execute.
    struct NodeRuntime
    {
        HostId host = 0;
        std::unique_ptr<fabric::PageMap> map;
        std::unique_ptr<fabric::MemoryStore> local;
        std::unique_ptr<fabric::HostMemory> mem;
        std::unique_ptr<workloads::Workload> workload;
        std::mt19937_64 rng;
        std::size_t next_phase = 0;
        std::optional<std::size_t> shared_segment;
    };

    /// Creates the workload described by `cfg` (not yet set up).
    std::unique_ptr<workloads::Workload> make_workload(const config::WorkloadConfig &cfg);

    /// Virtual base at which shared segments are mapped on every participating host.
    inline constexpr std::uint64_t kSharedVirtualBase = std::uint64_t{1} << 44;

    /// A whole simulated cluster between runs: fabric bindings, device contents and node
    /// runtimes. Runs build a fresh engine over this state and advance `now()`.
    class Cluster
    {
    public:
        /// Validates the config, binds device memory, and runs every workload's setup.
        /// Setup errors are reported as InitFailure.
        explicit Cluster(config::ClusterConfig cfg);

        Cluster(Cluster &&) noexcept;
        Cluster &operator=(Cluster &&) noexcept;
        ~Cluster();

        const config::ClusterConfig &config() const noexcept { return cfg_; }
        config::ClusterConfig &mutable_config() noexcept { return cfg_; }
        fabric::FabricManager &fabric() noexcept { return *fabric_; }
        const fabric::FabricManager &fabric() const noexcept { return *fabric_; }
        fabric::MemoryStore &device_store() noexcept { return *device_; }
        const fabric::MemoryStore &device_store() const noexcept { return *device_; }
        std::size_t node_count() const noexcept { return nodes_.size(); }
        NodeRuntime &node(std::size_t i) { return nodes_.at(i); }
        const NodeRuntime &node(std::size_t i) const { return nodes_.at(i); }
        SimTime now() const noexcept { return now_; }
        void set_now(SimTime t) noexcept { now_ = t; }

        /// Device range of shared segment `s`.
        fabric::AddrRange shared_range(std::size_t s) const { return shared_ranges_.at(s); }

        /// Runs every node's phases [next_phase, first ROI) functionally (or under the timing
        /// model when the config sets timing_init).
        stats::StatSnapshot fast_forward();

        /// Runs every node's remaining phases under `mode` and returns the ROI statistics.
        stats::StatSnapshot run_remaining(node::Mode mode, const std::string &run_id);

        /// Runs each node's phases [next_phase, until[i]) under `mode`.
        stats::StatSnapshot run(node::Mode mode, const std::vector<std::size_t> &until, const std::string &run_id);

        /// Tag of a workload-attributed ROI phase.
        static std::uint32_t roi_tag(std::size_t phase) { return static_cast<std::uint32_t>(phase + 1); }

    private:
        friend class CheckpointAccess;
        struct RestoreTag
        {
        };
        Cluster(RestoreTag, config::ClusterConfig cfg);
        void build_nodes(bool run_setup);

        config::ClusterConfig cfg_;
        std::unique_ptr<fabric::FabricManager> fabric_;
        std::unique_ptr<fabric::MemoryStore> device_;
        std::vector<NodeRuntime> nodes_;
        std::vector<fabric::AddrRange> shared_ranges_;
        SimTime now_{};
    };

} // namespace cxlsim::lifecycle

#pragma once

#include "cxlsim/fabric/fabric.hpp"
#include "cxlsim/fabric/memory_store.hpp"
#include "cxlsim/fabric/page_map.hpp"
#include "cxlsim/lifecycle/cluster.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace cxlsim::lifecycle
{
    inline constexpr std::uint32_t kCheckpointVersion = 1;

    /// Contents of a set of 4 KiB pages keyed by page index.
    using PageImage = std::map<std::uint64_t, fabric::MemoryStore::Page>;

    struct NodeCheckpoint
    {
        std::uint64_t next_phase = 0;
        fabric::PageMap::State page_map;
        std::vector<std::uint64_t> workload_state;
        std::string rng_state;
        PageImage local;
    };

    /// Self-contained image of a cluster at a global barrier.
    struct Checkpoint
    {
        std::uint32_t version = kCheckpointVersion;
        std::string config_yaml;
        SimTime time{};
        std::vector<fabric::Binding> bindings;
        std::uint32_t next_binding_id = 1;
        std::vector<NodeCheckpoint> nodes;
        PageImage device;
    };

    /// Captures the cluster's state.
    Checkpoint capture(const Cluster &cluster);

    /// Rebuilds a cluster from `ckpt`, then applies timing `overrides` ("key=value"). Throws
    /// ConfigConflict when an override changes the checkpoint's topology or workloads.
    Cluster restore(const Checkpoint &ckpt, const std::vector<std::string> &overrides = {});

    /// Binary encoding: a header with magic, version and a section index, then the sections.
    /// Each section carries a CRC-32 of its payload.
    std::string encode(const Checkpoint &ckpt);
    /// Throws VersionMismatch or CorruptCheckpoint.
    Checkpoint decode(std::string_view bytes);

    void save(const Checkpoint &ckpt, const std::string &path);
    Checkpoint load(const std::string &path);

    /// fast_forward a fresh cluster built from `cfg` and capture it at ROI entry.
    Checkpoint fast_forward(const config::ClusterConfig &cfg);

    /// Restores `ckpt` under `overrides`, runs to completion (or horizon) and returns the ROI
    /// statistics.
    stats::StatSnapshot restore_and_run(const Checkpoint &ckpt, const std::vector<std::string> &overrides,
                                        const std::string &run_id);

} // namespace cxlsim::lifecycle

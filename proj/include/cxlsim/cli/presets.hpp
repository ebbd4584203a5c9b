#pragma once

#include "cxlsim/config/config.hpp"
#include "cxlsim/stats/report.hpp"
#include "cxlsim/stats/snapshot.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cxlsim::cli
{
    struct PresetOptions
    {
        unsigned threads = 1;
        std::optional<std::uint64_t> seed;
        std::vector<std::string> overrides; // applied to every base config the preset builds
        bool quick = false;                 // reduced problem sizes (smoke and determinism runs)
    };

    /// One simulated run inside a preset.
    struct RunRecord
    {
        std::string run_id;
        config::ClusterConfig config;              // config of the fast-forward stage
        std::vector<std::string> restore_overrides; // timing overrides applied at restore
        stats::StatSnapshot snapshot;
        bool in_csv = true;
    };

    struct PresetReport
    {
        std::string preset;
        PresetOptions options;
        std::vector<RunRecord> runs;
        std::vector<stats::CsvRow> derived; // preset-level deterministic results
        nlohmann::json summary;             // includes wallclock-derived values
    };

    std::vector<std::string> preset_names();

    /// Expands and executes a preset. Throws InvalidArgument for an unknown name.
    PresetReport run_preset(const std::string &name, const PresetOptions &options);

    /// Snapshot rows of every CSV run followed by the derived rows.
    std::vector<stats::CsvRow> report_rows(const PresetReport &report);

    /// Reproduction manifest: inputs, per-run config hashes and configs, tool version.
    nlohmann::json manifest(const PresetReport &report);

    /// Base configurations used by the presets.
    config::ClusterConfig stream_cluster(std::size_t nodes, const fabric::PagePolicy &policy, std::uint64_t array_bytes,
                                         std::uint64_t pool_bytes);
    config::ClusterConfig walker_cluster(const fabric::PagePolicy &policy, std::uint64_t footprint,
                                         std::uint64_t local_capacity, std::uint64_t pool_bytes);
    /// One writer (node 0) and `readers` graph readers sharing one segment.
    config::ClusterConfig sharing_cluster(std::size_t readers, const workloads::GraphSpec &graph);
    /// One node running the graph kernels over a private, all-local copy.
    config::ClusterConfig graph_local_cluster(const workloads::GraphSpec &graph);

    const char *version();

} // namespace cxlsim::cli

#pragma once

#include "cxlsim/fabric/page_map.hpp"
#include "cxlsim/memnet/link.hpp"
#include "cxlsim/memnet/remote_memory.hpp"
#include "cxlsim/node/node.hpp"
#include "cxlsim/workloads/graph.hpp"
#include "cxlsim/workloads/stream.hpp"
#include "cxlsim/workloads/walker.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cxlsim::config
{
    enum class WorkloadKind : std::uint8_t
    {
        Idle,
        Stream,
        Walker,
        GraphWriter,
        GraphReader,
        GraphLocal, // reader that builds a private copy of the graph
    };
    std::string to_string(WorkloadKind k);
    WorkloadKind workload_kind_from_string(const std::string &s);

    struct WorkloadConfig
    {
        WorkloadKind kind = WorkloadKind::Stream;
        fabric::PagePolicy policy = fabric::PagePolicy::bind_local();
        workloads::StreamSpec stream{};
        workloads::WalkerSpec walker{};
        workloads::GraphSpec graph{};
        bool operator==(const WorkloadConfig &) const = default;
    };

    struct NodeEntry
    {
        node::NodeConfig node{};
        WorkloadConfig workload{};
        std::uint64_t pool_bytes = 0; // pooled device slice bound to this node (0 = none)
        bool operator==(const NodeEntry &) const = default;
    };

    /// Single-writer, multi-reader device segment.
    struct SharedSegment
    {
        std::uint64_t bytes = 0;
        HostId writer = 0;
        std::vector<HostId> readers;
        bool operator==(const SharedSegment &) const = default;
    };

    struct ClusterConfig
    {
        std::string name = "cluster";
        std::vector<NodeEntry> nodes{NodeEntry{}};
        memnet::DeviceConfig device{};
        memnet::LinkConfig link{};
        std::vector<SharedSegment> shared;
        unsigned threads = 1;
        double lookahead_ns = 0.0; // 0: derived from the link
        std::uint64_t seed = 1;
        double horizon_us = 0.0;   // 0: run to completion
        bool timing_init = false;  // run init phases under the timing model instead of functionally

        /// Throws ValidationError naming the offending key and constraint.
        void validate() const;
        SimTime lookahead() const;
        bool needs_device() const;
        bool operator==(const ClusterConfig &) const = default;
    };

    /// Parses YAML text. Throws ParseError (with line:column) or ValidationError.
    ClusterConfig parse_config_text(const std::string &text, const std::string &origin = "<config>");
    ClusterConfig parse_config(const std::string &path);
    /// Emits YAML that parses back to an equal config.
    std::string serialize_config(const ClusterConfig &cfg);

    /// Applies `key=value` with a dotted key, e.g. "link.latency_ns=250",
    /// "nodes.0.workload.policy=remote", "nodes.*.node.cores=4", "nodes.count=8".
    /// Throws ValidationError for unknown keys or malformed values.
    void apply_override(ClusterConfig &cfg, const std::string &assignment);

    std::string policy_name(const fabric::PagePolicy &p);
    fabric::PagePolicy policy_from_string(const std::string &s);

    /// Stable hash of the serialized config (hex).
    std::string config_hash(const ClusterConfig &cfg);

} // namespace cxlsim::config

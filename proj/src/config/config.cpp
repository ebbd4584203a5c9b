#include "cxlsim/config/config.hpp"

#include "cxlsim/errors.hpp"
#include "cxlsim/workloads/workload.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace cxlsim::config
{
    namespace
    {
        using workloads::GraphKernel;
        using workloads::StreamKernel;

        std::string where(const std::string &path, const YAML::Node &n)
        {
            const YAML::Mark m = n.Mark();
            if (m.line < 0)
                return path;
            return path + " (line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) + ")";
        }

        /// Reads keys of one mapping, rejecting unknown ones.
        class MapReader
        {
        public:
            MapReader(const YAML::Node &node, std::string path) : node_(node), path_(std::move(path))
            {
                if (node_ && !node_.IsMap())
                    throw ValidationError(where(path_, node_) + ": expected a mapping");
            }

            std::string key(const std::string &k) const { return path_.empty() ? k : path_ + "." + k; }

            YAML::Node child(const std::string &k)
            {
                seen_.insert(k);
                if (!node_ || node_.IsNull())
                    return YAML::Node(YAML::NodeType::Undefined);
                const YAML::Node &n = node_;
                return n[k];
            }

            template <class T>
            void get(const std::string &k, T &out)
            {
                const YAML::Node n = child(k);
                if (!n)
                    return;
                try
                {
                    out = n.as<T>();
                }
                catch (const YAML::Exception &)
                {
                    throw ValidationError(where(key(k), n) + ": cannot convert '" + scalar(n) + "'");
                }
            }

            void get_bool(const std::string &k, bool &out) { get(k, out); }

            void get_bytes(const std::string &k, std::uint64_t &out)
            {
                const YAML::Node n = child(k);
                if (!n)
                    return;
                out = parse_bytes(n, key(k));
            }

            void finish() const
            {
                if (!node_)
                    return;
                for (const auto &kv : node_)
                {
                    const auto name = kv.first.as<std::string>();
                    if (!seen_.contains(name))
                        throw ValidationError(where(key(name), kv.first) + ": unknown key");
                }
            }

            static std::string scalar(const YAML::Node &n) { return n.IsScalar() ? n.Scalar() : std::string("<non-scalar>"); }

            static std::uint64_t parse_bytes(const YAML::Node &n, const std::string &path)
            {
                if (!n.IsScalar())
                    throw ValidationError(where(path, n) + ": expected a byte size");
                std::string s = n.Scalar();
                std::string digits;
                std::size_t i = 0;
                while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])))
                    digits += s[i++];
                while (i < s.size() && s[i] == ' ')
                    ++i;
                const std::string unit = s.substr(i);
                std::uint64_t mult = 1;
                if (unit.empty() || unit == "B")
                    mult = 1;
                else if (unit == "KiB")
                    mult = 1ULL << 10;
                else if (unit == "MiB")
                    mult = 1ULL << 20;
                else if (unit == "GiB")
                    mult = 1ULL << 30;
                else if (unit == "TiB")
                    mult = 1ULL << 40;
                else
                    throw ValidationError(where(path, n) + ": unknown size unit '" + unit + "' (use B, KiB, MiB, GiB, TiB)");
                std::uint64_t v = 0;
                auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
                if (digits.empty() || ec != std::errc() || p != digits.data() + digits.size())
                    throw ValidationError(where(path, n) + ": invalid byte size '" + s + "'");
                if (v > ~std::uint64_t{0} / mult)
                    throw ValidationError(where(path, n) + ": byte size overflows");
                return v * mult;
            }

        private:
            YAML::Node node_;
            std::string path_;
            std::set<std::string> seen_;
        };

        std::string bytes_text(std::uint64_t v)
        {
            static const std::pair<std::uint64_t, const char *> units[] = {
                {1ULL << 40, "TiB"}, {1ULL << 30, "GiB"}, {1ULL << 20, "MiB"}, {1ULL << 10, "KiB"}};
            for (const auto &[mult, name] : units)
            {
                if (v != 0 && v % mult == 0)
                    return std::to_string(v / mult) + name;
            }
            return std::to_string(v);
        }

        std::string number_text(double v)
        {
            char buf[64];
            auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
            return std::string(buf, p);
        }

        fabric::Region region_from_string(const std::string &s, const std::string &path)
        {
            if (s == "local")
                return fabric::Region::Local;
            if (s == "remote")
                return fabric::Region::Remote;
            throw ValidationError(path + ": unknown region '" + s + "' (expected local or remote)");
        }

        fabric::PagePolicy parse_policy(const YAML::Node &n, const std::string &path)
        {
            if (n.IsScalar())
            {
                try
                {
                    return policy_from_string(n.Scalar());
                }
                catch (const InvalidArgument &e)
                {
                    throw ValidationError(where(path, n) + ": " + e.what());
                }
            }
            MapReader r(n, path);
            std::string kind;
            r.get("kind", kind);
            fabric::PagePolicy p;
            try
            {
                p = policy_from_string(kind);
            }
            catch (const InvalidArgument &e)
            {
                throw ValidationError(where(r.key("kind"), n) + ": " + e.what());
            }
            if (const YAML::Node regions = r.child("regions"))
            {
                if (!regions.IsSequence())
                    throw ValidationError(where(r.key("regions"), regions) + ": expected a list");
                p.interleave_set.clear();
                for (const auto &x : regions)
                    p.interleave_set.push_back(region_from_string(x.as<std::string>(), r.key("regions")));
            }
            r.get("early_spill", p.early_spill_probability);
            r.finish();
            return p;
        }

        void parse_cache(MapReader &parent, const std::string &k, node::CacheGeometry &g)
        {
            MapReader r(parent.child(k), parent.key(k));
            r.get_bytes("size", g.size);
            r.get("associativity", g.associativity);
            r.get("hit_latency", g.hit_latency);
            r.finish();
        }

        void parse_dram(MapReader &parent, const std::string &k, memnet::DramTiming &t)
        {
            MapReader r(parent.child(k), parent.key(k));
            r.get("data_rate_mts", t.data_rate_mts);
            r.get("bus_width_bytes", t.bus_width_bytes);
            r.get("burst_beats", t.burst_beats);
            r.get("tCL_ns", t.tCL_ns);
            r.get("tRCD_ns", t.tRCD_ns);
            r.get("tRP_ns", t.tRP_ns);
            r.get("tCCD_L_ns", t.tCCD_L_ns);
            r.get("banks_per_channel", t.banks_per_channel);
            r.get("bank_groups", t.bank_groups);
            r.get_bytes("row_bytes", t.row_bytes);
            std::string policy = t.page_policy == memnet::RowPolicy::OpenRow ? "open" : "closed";
            r.get("page_policy", policy);
            if (policy == "open")
                t.page_policy = memnet::RowPolicy::OpenRow;
            else if (policy == "closed")
                t.page_policy = memnet::RowPolicy::ClosedRow;
            else
                throw ValidationError(r.key("page_policy") + ": expected open or closed");
            r.finish();
        }

        void parse_node(MapReader &parent, node::NodeConfig &nc)
        {
            MapReader r(parent.child("node"), parent.key("node"));
            r.get("arch_profile", nc.arch_profile);
            try
            {
                const auto prof = node::arch_profile(nc.arch_profile);
                nc.issue_cycles = prof.issue_cycles;
                nc.outstanding_misses = prof.outstanding_misses;
            }
            catch (const InvalidArgument &e)
            {
                throw ValidationError(r.key("arch_profile") + ": " + e.what());
            }
            r.get("cores", nc.cores);
            r.get("freq_ghz", nc.freq_ghz);
            parse_cache(r, "l1d", nc.l1d);
            parse_cache(r, "l2", nc.l2);
            parse_cache(r, "l3", nc.l3);
            r.get("outstanding_misses", nc.outstanding_misses);
            r.get("local_channels", nc.local_channels);
            r.get_bytes("local_capacity", nc.local_capacity);
            r.get("issue_cycles", nc.issue_cycles);
            r.get_bool("prefetch", nc.prefetch);
            r.get("prefetch_degree", nc.prefetch_degree);
            r.get("prefetch_queue", nc.prefetch_queue);
            parse_dram(r, "dram", nc.local_dram);
            r.finish();
        }

        template <class E, class F>
        std::vector<E> parse_list(const YAML::Node &n, const std::string &path, F from_string)
        {
            if (!n.IsSequence())
                throw ValidationError(where(path, n) + ": expected a list");
            std::vector<E> out;
            for (const auto &x : n)
            {
                try
                {
                    out.push_back(from_string(x.as<std::string>()));
                }
                catch (const InvalidArgument &e)
                {
                    throw ValidationError(where(path, x) + ": " + e.what());
                }
            }
            return out;
        }

        void parse_workload(MapReader &parent, WorkloadConfig &w)
        {
            MapReader r(parent.child("workload"), parent.key("workload"));
            std::string kind = to_string(w.kind);
            r.get("kind", kind);
            try
            {
                w.kind = workload_kind_from_string(kind);
            }
            catch (const InvalidArgument &e)
            {
                throw ValidationError(r.key("kind") + ": " + e.what());
            }
            if (const YAML::Node p = r.child("policy"))
                w.policy = parse_policy(p, r.key("policy"));
            {
                MapReader s(r.child("stream"), r.key("stream"));
                s.get_bytes("array_bytes", w.stream.array_bytes);
                s.get("alpha", w.stream.alpha);
                if (const YAML::Node k = s.child("kernels"))
                    w.stream.kernels = parse_list<StreamKernel>(k, s.key("kernels"), workloads::stream_kernel_from_string);
                s.get_bool("streaming_stores", w.stream.streaming_stores);
                s.finish();
            }
            {
                MapReader s(r.child("walker"), r.key("walker"));
                s.get_bytes("footprint", w.walker.footprint);
                std::string pattern = workloads::to_string(w.walker.pattern);
                s.get("pattern", pattern);
                try
                {
                    w.walker.pattern = workloads::walk_pattern_from_string(pattern);
                }
                catch (const InvalidArgument &e)
                {
                    throw ValidationError(s.key("pattern") + ": " + e.what());
                }
                s.get("stride_lines", w.walker.stride_lines);
                s.get("seed", w.walker.seed);
                s.get("compute_cost", w.walker.compute_cost);
                s.get("iterations", w.walker.iterations);
                s.finish();
            }
            {
                MapReader s(r.child("graph"), r.key("graph"));
                s.get("vertices", w.graph.vertices);
                s.get("edges", w.graph.edges);
                s.get("seed", w.graph.seed);
                s.get("bfs_source", w.graph.bfs_source);
                s.get("pagerank_iterations", w.graph.pagerank_iterations);
                s.get("damping", w.graph.damping);
                if (const YAML::Node k = s.child("kernels"))
                    w.graph.kernels = parse_list<GraphKernel>(k, s.key("kernels"), workloads::graph_kernel_from_string);
                s.finish();
            }
            r.finish();
        }

        ClusterConfig from_yaml(const YAML::Node &root)
        {
            ClusterConfig cfg;
            MapReader r(root, "");
            r.get("name", cfg.name);
            r.get("seed", cfg.seed);
            r.get("threads", cfg.threads);
            r.get("lookahead_ns", cfg.lookahead_ns);
            r.get("horizon_us", cfg.horizon_us);
            r.get_bool("timing_init", cfg.timing_init);
            {
                MapReader l(r.child("link"), "link");
                l.get("latency_ns", cfg.link.latency_ns);
                l.get("bandwidth_gbps", cfg.link.bandwidth_gbps);
                l.get("credits", cfg.link.credits);
                l.finish();
            }
            {
                MapReader d(r.child("device"), "device");
                d.get_bytes("base", cfg.device.base);
                d.get_bytes("capacity", cfg.device.capacity);
                d.get("channels", cfg.device.channels);
                d.get("queue_window", cfg.device.queue_window);
                d.get("crossbar_cycle_ns", cfg.device.crossbar_cycle_ns);
                parse_dram(d, "dram", cfg.device.dram);
                d.finish();
            }
            if (const YAML::Node nodes = r.child("nodes"))
            {
                if (!nodes.IsSequence())
                    throw ValidationError(where("nodes", nodes) + ": expected a list");
                cfg.nodes.clear();
                std::size_t idx = 0;
                for (const auto &n : nodes)
                {
                    MapReader e(n, "nodes[" + std::to_string(idx++) + "]");
                    NodeEntry entry;
                    std::uint32_t count = 1;
                    e.get("count", count);
                    e.get_bytes("pool_bytes", entry.pool_bytes);
                    parse_node(e, entry.node);
                    parse_workload(e, entry.workload);
                    e.finish();
                    if (count == 0 || count > 4096)
                        throw ValidationError(e.key("count") + ": must be in [1, 4096]");
                    for (std::uint32_t i = 0; i < count; ++i)
                        cfg.nodes.push_back(entry);
                }
            }
            if (const YAML::Node shared = r.child("shared"))
            {
                if (!shared.IsSequence())
                    throw ValidationError(where("shared", shared) + ": expected a list");
                std::size_t idx = 0;
                for (const auto &s : shared)
                {
                    MapReader e(s, "shared[" + std::to_string(idx++) + "]");
                    SharedSegment seg;
                    e.get_bytes("bytes", seg.bytes);
                    e.get("writer", seg.writer);
                    e.get("readers", seg.readers);
                    e.finish();
                    cfg.shared.push_back(seg);
                }
            }
            r.finish();
            return cfg;
        }

        void emit_cache(YAML::Emitter &out, const char *name, const node::CacheGeometry &g)
        {
            out << YAML::Key << name << YAML::Value << YAML::Flow << YAML::BeginMap;
            out << YAML::Key << "size" << YAML::Value << bytes_text(g.size);
            out << YAML::Key << "associativity" << YAML::Value << g.associativity;
            out << YAML::Key << "hit_latency" << YAML::Value << g.hit_latency;
            out << YAML::EndMap;
        }

        void emit_dram(YAML::Emitter &out, const memnet::DramTiming &t)
        {
            out << YAML::Key << "dram" << YAML::Value << YAML::BeginMap;
            out << YAML::Key << "data_rate_mts" << YAML::Value << number_text(t.data_rate_mts);
            out << YAML::Key << "bus_width_bytes" << YAML::Value << t.bus_width_bytes;
            out << YAML::Key << "burst_beats" << YAML::Value << t.burst_beats;
            out << YAML::Key << "tCL_ns" << YAML::Value << number_text(t.tCL_ns);
            out << YAML::Key << "tRCD_ns" << YAML::Value << number_text(t.tRCD_ns);
            out << YAML::Key << "tRP_ns" << YAML::Value << number_text(t.tRP_ns);
            out << YAML::Key << "tCCD_L_ns" << YAML::Value << number_text(t.tCCD_L_ns);
            out << YAML::Key << "banks_per_channel" << YAML::Value << t.banks_per_channel;
            out << YAML::Key << "bank_groups" << YAML::Value << t.bank_groups;
            out << YAML::Key << "row_bytes" << YAML::Value << bytes_text(t.row_bytes);
            out << YAML::Key << "page_policy" << YAML::Value
                << (t.page_policy == memnet::RowPolicy::OpenRow ? "open" : "closed");
            out << YAML::EndMap;
        }

        void emit_policy(YAML::Emitter &out, const fabric::PagePolicy &p)
        {
            out << YAML::Key << "policy" << YAML::Value;
            const bool plain = (p.kind != fabric::PolicyKind::Interleave ||
                                p.interleave_set == std::vector<fabric::Region>{fabric::Region::Local, fabric::Region::Remote}) &&
                               p.early_spill_probability == 0.0;
            if (plain)
            {
                out << policy_name(p);
                return;
            }
            out << YAML::Flow << YAML::BeginMap << YAML::Key << "kind" << YAML::Value << policy_name(p);
            if (p.kind == fabric::PolicyKind::Interleave)
            {
                out << YAML::Key << "regions" << YAML::Value << YAML::Flow << YAML::BeginSeq;
                for (auto r : p.interleave_set)
                    out << fabric::to_string(r);
                out << YAML::EndSeq;
            }
            if (p.early_spill_probability != 0.0)
                out << YAML::Key << "early_spill" << YAML::Value << number_text(p.early_spill_probability);
            out << YAML::EndMap;
        }

        YAML::Node load_yaml(const std::string &text, const std::string &origin)
        {
            try
            {
                return YAML::Load(text);
            }
            catch (const YAML::ParserException &e)
            {
                throw ParseError(origin + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                                 ": " + e.msg);
            }
        }
    } // namespace

    std::string to_string(WorkloadKind k)
    {
        switch (k)
        {
        case WorkloadKind::Idle:
            return "idle";
        case WorkloadKind::Stream:
            return "stream";
        case WorkloadKind::Walker:
            return "walker";
        case WorkloadKind::GraphWriter:
            return "graph-writer";
        case WorkloadKind::GraphReader:
            return "graph-reader";
        case WorkloadKind::GraphLocal:
            return "graph-local";
        }
        return "?";
    }

    WorkloadKind workload_kind_from_string(const std::string &s)
    {
        for (auto k : {WorkloadKind::Idle, WorkloadKind::Stream, WorkloadKind::Walker, WorkloadKind::GraphWriter,
                       WorkloadKind::GraphReader, WorkloadKind::GraphLocal})
        {
            if (to_string(k) == s)
                return k;
        }
        throw InvalidArgument("unknown workload kind '" + s +
                              "' (expected idle, stream, walker, graph-writer, graph-reader or graph-local)");
    }

    std::string policy_name(const fabric::PagePolicy &p)
    {
        switch (p.kind)
        {
        case fabric::PolicyKind::MemBindLocal:
            return "local";
        case fabric::PolicyKind::MemBindRemote:
            return "remote";
        case fabric::PolicyKind::Interleave:
            return "interleave";
        case fabric::PolicyKind::PreferredLocal:
            return "preferred";
        }
        return "?";
    }

    fabric::PagePolicy policy_from_string(const std::string &s)
    {
        if (s == "local")
            return fabric::PagePolicy::bind_local();
        if (s == "remote")
            return fabric::PagePolicy::bind_remote();
        if (s == "interleave")
            return fabric::PagePolicy::interleave();
        if (s == "preferred")
            return fabric::PagePolicy::preferred_local();
        throw InvalidArgument("unknown policy '" + s + "' (expected local, remote, interleave or preferred)");
    }

    SimTime ClusterConfig::lookahead() const
    {
        return lookahead_ns > 0.0 ? SimTime::from_ns(lookahead_ns) : link.min_delay();
    }

    bool ClusterConfig::needs_device() const
    {
        if (!shared.empty())
            return true;
        for (const auto &n : nodes)
        {
            if (n.pool_bytes > 0)
                return true;
        }
        return false;
    }

    void ClusterConfig::validate() const
    {
        auto wrap = [](const std::string &prefix, auto &&fn) {
            try
            {
                fn();
            }
            catch (const InvalidArgument &e)
            {
                throw ValidationError(prefix + ": " + e.what());
            }
        };
        if (nodes.empty())
            throw ValidationError("nodes: at least one node is required");
        if (nodes.size() > 4096)
            throw ValidationError("nodes: at most 4096 nodes are supported");
        if (threads == 0 || threads > 256)
            throw ValidationError("threads: must be in [1, 256]");
        if (!(lookahead_ns >= 0.0))
            throw ValidationError("lookahead_ns: must be >= 0");
        if (!(horizon_us >= 0.0))
            throw ValidationError("horizon_us: must be >= 0");
        wrap("link", [&] { link.validate(); });
        wrap("device", [&] { device.validate(); });
        if (lookahead() > link.min_delay())
            throw ValidationError("lookahead_ns: exceeds the link's minimum delay (latency + 64 B serialization)");

        std::uint64_t bound = 0;
        std::vector<int> segment_of(nodes.size(), -1);
        for (std::size_t s = 0; s < shared.size(); ++s)
        {
            const auto &seg = shared[s];
            const std::string p = "shared[" + std::to_string(s) + "]";
            if (seg.bytes == 0 || seg.bytes % kPageBytes != 0)
                throw ValidationError(p + ".bytes: must be a positive multiple of 4 KiB");
            if (seg.writer >= nodes.size())
                throw ValidationError(p + ".writer: no node " + std::to_string(seg.writer));
            std::vector<HostId> members{seg.writer};
            for (auto r : seg.readers)
            {
                if (r >= nodes.size())
                    throw ValidationError(p + ".readers: no node " + std::to_string(r));
                if (r == seg.writer)
                    throw ValidationError(p + ".readers: the writer cannot also be a reader");
                members.push_back(r);
            }
            for (auto h : members)
            {
                if (segment_of[h] >= 0)
                    throw ValidationError(p + ": node " + std::to_string(h) + " already belongs to a shared segment");
                segment_of[h] = static_cast<int>(s);
            }
            bound += seg.bytes;
        }

        for (std::size_t i = 0; i < nodes.size(); ++i)
        {
            const auto &n = nodes[i];
            const std::string p = "nodes[" + std::to_string(i) + "]";
            wrap(p + ".node", [&] { n.node.validate(); });
            wrap(p + ".node", [&] { node::arch_profile(n.node.arch_profile); });
            if (n.node.local_capacity > device.base)
                throw ValidationError(p + ".node.local_capacity: must not exceed device.base");
            if (n.pool_bytes % kPageBytes != 0)
                throw ValidationError(p + ".pool_bytes: must be a multiple of 4 KiB");
            bound += n.pool_bytes;
            const auto &w = n.workload;
            wrap(p + ".workload.policy", [&] { w.policy.validate(); });
            const bool uses_remote =
                w.policy.kind == fabric::PolicyKind::MemBindRemote ||
                (w.policy.kind == fabric::PolicyKind::Interleave &&
                 std::find(w.policy.interleave_set.begin(), w.policy.interleave_set.end(), fabric::Region::Remote) !=
                     w.policy.interleave_set.end());
            const bool allocates = w.kind != WorkloadKind::Idle && w.kind != WorkloadKind::GraphWriter;
            if (allocates && uses_remote && n.pool_bytes == 0)
                throw ValidationError(p + ".workload.policy: '" + policy_name(w.policy) +
                                      "' places pages remotely but the node declares no pool_bytes binding");
            switch (w.kind)
            {
            case WorkloadKind::Stream:
                wrap(p + ".workload.stream", [&] { w.stream.validate(); });
                break;
            case WorkloadKind::Walker:
                wrap(p + ".workload.walker", [&] { w.walker.validate(); });
                break;
            case WorkloadKind::GraphWriter:
            case WorkloadKind::GraphReader:
            case WorkloadKind::GraphLocal:
                wrap(p + ".workload.graph", [&] { w.graph.validate(); });
                break;
            case WorkloadKind::Idle:
                break;
            }
            if (w.kind == WorkloadKind::GraphWriter || w.kind == WorkloadKind::GraphReader)
            {
                const int s = segment_of[i];
                if (s < 0)
                    throw ValidationError(p + ".workload.kind: " + to_string(w.kind) + " requires a shared segment");
                const bool is_writer = shared[s].writer == i;
                if (is_writer != (w.kind == WorkloadKind::GraphWriter))
                    throw ValidationError(p + ".workload.kind: " + to_string(w.kind) + " does not match the node's role in shared[" +
                                          std::to_string(s) + "]");
                const auto need = workloads::csr_layout(w.graph.vertices, w.graph.edges).bytes;
                if (need > shared[s].bytes)
                    throw ValidationError(p + ".workload.graph: CSR needs " + std::to_string(need) + " bytes but shared[" +
                                          std::to_string(s) + "] holds " + std::to_string(shared[s].bytes));
            }
        }
        if (bound > device.capacity)
            throw ValidationError("device.capacity: remote bindings need " + std::to_string(bound) + " bytes but the device holds " +
                                  std::to_string(device.capacity));
    }

    ClusterConfig parse_config_text(const std::string &text, const std::string &origin)
    {
        const YAML::Node root = load_yaml(text, origin);
        if (root.IsNull())
            throw ParseError(origin + ": empty document");
        ClusterConfig cfg = from_yaml(root);
        cfg.validate();
        return cfg;
    }

    ClusterConfig parse_config(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ParseError(path + ": cannot open file");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_config_text(ss.str(), path);
    }

    std::string serialize_config(const ClusterConfig &cfg)
    {
        YAML::Emitter out;
        out << YAML::BeginMap;
        out << YAML::Key << "name" << YAML::Value << cfg.name;
        out << YAML::Key << "seed" << YAML::Value << cfg.seed;
        out << YAML::Key << "threads" << YAML::Value << cfg.threads;
        out << YAML::Key << "lookahead_ns" << YAML::Value << number_text(cfg.lookahead_ns);
        out << YAML::Key << "horizon_us" << YAML::Value << number_text(cfg.horizon_us);
        out << YAML::Key << "timing_init" << YAML::Value << cfg.timing_init;

        out << YAML::Key << "link" << YAML::Value << YAML::Flow << YAML::BeginMap;
        out << YAML::Key << "latency_ns" << YAML::Value << number_text(cfg.link.latency_ns);
        out << YAML::Key << "bandwidth_gbps" << YAML::Value << number_text(cfg.link.bandwidth_gbps);
        out << YAML::Key << "credits" << YAML::Value << cfg.link.credits;
        out << YAML::EndMap;

        out << YAML::Key << "device" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "base" << YAML::Value << bytes_text(cfg.device.base);
        out << YAML::Key << "capacity" << YAML::Value << bytes_text(cfg.device.capacity);
        out << YAML::Key << "channels" << YAML::Value << cfg.device.channels;
        out << YAML::Key << "queue_window" << YAML::Value << cfg.device.queue_window;
        out << YAML::Key << "crossbar_cycle_ns" << YAML::Value << number_text(cfg.device.crossbar_cycle_ns);
        emit_dram(out, cfg.device.dram);
        out << YAML::EndMap;

        out << YAML::Key << "nodes" << YAML::Value << YAML::BeginSeq;
        for (const auto &n : cfg.nodes)
        {
            const auto &nc = n.node;
            out << YAML::BeginMap;
            out << YAML::Key << "pool_bytes" << YAML::Value << bytes_text(n.pool_bytes);
            out << YAML::Key << "node" << YAML::Value << YAML::BeginMap;
            out << YAML::Key << "arch_profile" << YAML::Value << nc.arch_profile;
            out << YAML::Key << "cores" << YAML::Value << nc.cores;
            out << YAML::Key << "freq_ghz" << YAML::Value << number_text(nc.freq_ghz);
            emit_cache(out, "l1d", nc.l1d);
            emit_cache(out, "l2", nc.l2);
            emit_cache(out, "l3", nc.l3);
            out << YAML::Key << "outstanding_misses" << YAML::Value << nc.outstanding_misses;
            out << YAML::Key << "local_channels" << YAML::Value << nc.local_channels;
            out << YAML::Key << "local_capacity" << YAML::Value << bytes_text(nc.local_capacity);
            out << YAML::Key << "issue_cycles" << YAML::Value << nc.issue_cycles;
            out << YAML::Key << "prefetch" << YAML::Value << nc.prefetch;
            out << YAML::Key << "prefetch_degree" << YAML::Value << nc.prefetch_degree;
            out << YAML::Key << "prefetch_queue" << YAML::Value << nc.prefetch_queue;
            emit_dram(out, nc.local_dram);
            out << YAML::EndMap;

            const auto &w = n.workload;
            out << YAML::Key << "workload" << YAML::Value << YAML::BeginMap;
            out << YAML::Key << "kind" << YAML::Value << to_string(w.kind);
            emit_policy(out, w.policy);
            out << YAML::Key << "stream" << YAML::Value << YAML::Flow << YAML::BeginMap;
            out << YAML::Key << "array_bytes" << YAML::Value << bytes_text(w.stream.array_bytes);
            out << YAML::Key << "alpha" << YAML::Value << number_text(w.stream.alpha);
            out << YAML::Key << "kernels" << YAML::Value << YAML::Flow << YAML::BeginSeq;
            for (auto k : w.stream.kernels)
                out << workloads::to_string(k);
            out << YAML::EndSeq;
            out << YAML::Key << "streaming_stores" << YAML::Value << w.stream.streaming_stores;
            out << YAML::EndMap;
            out << YAML::Key << "walker" << YAML::Value << YAML::Flow << YAML::BeginMap;
            out << YAML::Key << "footprint" << YAML::Value << bytes_text(w.walker.footprint);
            out << YAML::Key << "pattern" << YAML::Value << workloads::to_string(w.walker.pattern);
            out << YAML::Key << "stride_lines" << YAML::Value << w.walker.stride_lines;
            out << YAML::Key << "seed" << YAML::Value << w.walker.seed;
            out << YAML::Key << "compute_cost" << YAML::Value << w.walker.compute_cost;
            out << YAML::Key << "iterations" << YAML::Value << w.walker.iterations;
            out << YAML::EndMap;
            out << YAML::Key << "graph" << YAML::Value << YAML::Flow << YAML::BeginMap;
            out << YAML::Key << "vertices" << YAML::Value << w.graph.vertices;
            out << YAML::Key << "edges" << YAML::Value << w.graph.edges;
            out << YAML::Key << "seed" << YAML::Value << w.graph.seed;
            out << YAML::Key << "bfs_source" << YAML::Value << w.graph.bfs_source;
            out << YAML::Key << "pagerank_iterations" << YAML::Value << w.graph.pagerank_iterations;
            out << YAML::Key << "damping" << YAML::Value << number_text(w.graph.damping);
            out << YAML::Key << "kernels" << YAML::Value << YAML::Flow << YAML::BeginSeq;
            for (auto k : w.graph.kernels)
                out << workloads::to_string(k);
            out << YAML::EndSeq;
            out << YAML::EndMap;
            out << YAML::EndMap;
            out << YAML::EndMap;
        }
        out << YAML::EndSeq;

        out << YAML::Key << "shared" << YAML::Value << YAML::BeginSeq;
        for (const auto &s : cfg.shared)
        {
            out << YAML::Flow << YAML::BeginMap;
            out << YAML::Key << "bytes" << YAML::Value << bytes_text(s.bytes);
            out << YAML::Key << "writer" << YAML::Value << s.writer;
            out << YAML::Key << "readers" << YAML::Value << YAML::Flow << s.readers;
            out << YAML::EndMap;
        }
        out << YAML::EndSeq;
        out << YAML::EndMap;
        return std::string(out.c_str()) + "\n";
    }

    void apply_override(ClusterConfig &cfg, const std::string &assignment)
    {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ValidationError("override '" + assignment + "': expected key=value");
        const std::string key = assignment.substr(0, eq);
        const std::string value = assignment.substr(eq + 1);

        std::vector<std::string> parts;
        std::stringstream ss(key);
        for (std::string part; std::getline(ss, part, '.');)
        {
            if (part.empty())
                throw ValidationError("override '" + assignment + "': empty path component");
            parts.push_back(part);
        }

        if (parts.size() == 2 && parts[0] == "nodes" && parts[1] == "count")
        {
            std::size_t n = 0;
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
            if (ec != std::errc() || p != value.data() + value.size() || n == 0 || n > 4096)
                throw ValidationError("override nodes.count: expected an integer in [1, 4096]");
            const NodeEntry last = cfg.nodes.back();
            cfg.nodes.resize(n, last);
            cfg.validate();
            return;
        }

        YAML::Node root = YAML::Load(serialize_config(cfg));
        YAML::Node parsed_value;
        try
        {
            parsed_value = YAML::Load(value);
        }
        catch (const YAML::ParserException &e)
        {
            throw ValidationError("override '" + assignment + "': cannot parse value: " + e.msg);
        }

        std::vector<YAML::Node> targets{root};
        for (std::size_t i = 0; i + 1 < parts.size(); ++i)
        {
            std::vector<YAML::Node> next;
            for (auto &t : targets)
            {
                if (t.IsSequence())
                {
                    if (parts[i] == "*")
                    {
                        for (std::size_t j = 0; j < t.size(); ++j)
                            next.push_back(t[j]);
                        continue;
                    }
                    std::size_t idx = 0;
                    auto [p, ec] = std::from_chars(parts[i].data(), parts[i].data() + parts[i].size(), idx);
                    if (ec != std::errc() || p != parts[i].data() + parts[i].size() || idx >= t.size())
                        throw ValidationError("override '" + assignment + "': no element '" + parts[i] + "'");
                    next.push_back(t[idx]);
                }
                else if (t.IsMap())
                {
                    YAML::Node child = t[parts[i]];
                    if (!child.IsDefined() || child.IsNull())
                        throw ValidationError("override '" + assignment + "': unknown key '" + parts[i] + "'");
                    next.push_back(child);
                }
                else
                {
                    throw ValidationError("override '" + assignment + "': '" + parts[i] + "' is not a section");
                }
            }
            targets = std::move(next);
        }
        for (auto &t : targets)
        {
            if (!t.IsMap() || !t[parts.back()].IsDefined())
                throw ValidationError("override '" + assignment + "': unknown key '" + parts.back() + "'");
            t[parts.back()] = parsed_value;
            if (parts.back() == "arch_profile")
            {
                // Let the new profile supply its own issue cost and miss limit.
                t.remove("issue_cycles");
                t.remove("outstanding_misses");
            }
        }
        YAML::Emitter out;
        out << root;
        cfg = parse_config_text(out.c_str(), "override '" + assignment + "'");
    }

    std::string config_hash(const ClusterConfig &cfg)
    {
        const std::string text = serialize_config(cfg);
        return workloads::hex64(workloads::fnv1a(text.data(), text.size()));
    }

} // namespace cxlsim::config

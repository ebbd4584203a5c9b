#include "cxlsim/cli/presets.hpp"

#include "cxlsim/errors.hpp"
#include "cxlsim/lifecycle/checkpoint.hpp"
#include "cxlsim/memnet/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#ifndef CXLSIM_VERSION
#define CXLSIM_VERSION "0.0.0"
#endif

namespace cxlsim::cli
{
    namespace
    {
        constexpr std::uint64_t KiB = 1024;
        constexpr std::uint64_t MiB = 1024 * KiB;

        class Rows
        {
        public:
            explicit Rows(std::vector<stats::CsvRow> &out) : out_(out) {}
            void add(const std::string &run_id, const std::string &node, const std::string &component,
                     const std::string &metric, const std::string &roi, const std::string &value)
            {
                out_.push_back(stats::CsvRow{run_id, node, component, metric, roi, value});
            }
            void real(const std::string &run_id, const std::string &node, const std::string &component,
                      const std::string &metric, const std::string &roi, double value)
            {
                add(run_id, node, component, metric, roi, stats::format_double(value));
            }

        private:
            std::vector<stats::CsvRow> &out_;
        };

        config::ClusterConfig prepared(config::ClusterConfig cfg, const PresetOptions &opt)
        {
            if (opt.seed)
            {
                cfg.seed = *opt.seed;
                for (auto &n : cfg.nodes)
                {
                    n.workload.walker.seed = *opt.seed;
                    n.workload.graph.seed = *opt.seed;
                }
            }
            for (const auto &o : opt.overrides)
                config::apply_override(cfg, o);
            cfg.threads = opt.threads;
            cfg.validate();
            return cfg;
        }

        RunRecord simulate(const config::ClusterConfig &cfg, const std::string &run_id,
                           const std::vector<std::string> &restore_overrides = {})
        {
            const lifecycle::Checkpoint ck = lifecycle::fast_forward(cfg);
            RunRecord r;
            r.run_id = run_id;
            r.config = cfg;
            r.restore_overrides = restore_overrides;
            r.snapshot = lifecycle::restore_and_run(ck, restore_overrides, run_id);
            return r;
        }

        /// Mean over nodes of a per-ROI bandwidth, keyed by ROI label.
        std::map<std::string, double> mean_node_bandwidth(const stats::StatSnapshot &snap, stats::Where where)
        {
            std::map<std::string, double> sum;
            std::map<std::string, std::size_t> count;
            for (const auto &n : snap.nodes)
            {
                for (const auto &r : n.rois)
                {
                    sum[r.label] += stats::bandwidth(r, where);
                    ++count[r.label];
                }
            }
            for (auto &[label, s] : sum)
                s /= static_cast<double>(count[label]);
            return sum;
        }

        double aggregate_remote_bandwidth(const stats::StatSnapshot &snap)
        {
            return stats::bandwidth(snap.remote_total().bytes(), snap.end - snap.start);
        }

        double mean_ipc(const stats::StatSnapshot &snap)
        {
            double s = 0;
            std::size_t k = 0;
            for (const auto &n : snap.nodes)
            {
                for (const auto &r : n.rois)
                {
                    s += stats::ipc_proxy(r);
                    ++k;
                }
            }
            return k == 0 ? 0.0 : s / static_cast<double>(k);
        }

        void preset_calibration(PresetReport &rep)
        {
            const config::ClusterConfig cfg = prepared(config::ClusterConfig{}, rep.options);
            const SimTime duration = SimTime::from_ns(rep.options.quick ? 20'000.0 : 100'000.0);
            const auto r = memnet::calibrate(cfg.device, duration, memnet::GeneratorSpec{}, cfg.threads);
            Rows rows(rep.derived);
            const std::string id = "calibration";
            rows.add(id, "remote", "remote_mc", "channels", "-", std::to_string(r.channels));
            rows.real(id, "remote", "remote_mc", "peak_gbps", "-", r.peak_gbps);
            rows.real(id, "remote", "remote_mc", "sustained_gbps", "-", r.sustained_gbps);
            rows.real(id, "remote", "remote_mc", "sustained_over_peak", "-", r.ratio);
            rows.add(id, "remote", "remote_mc", "bytes", "-", std::to_string(r.bytes));
            rows.add(id, "remote", "remote_mc", "duration_ps", "-", std::to_string(r.duration.ps()));
            rows.add(id, "remote", "remote_mc", "row_hits", "-", std::to_string(r.meter.row_hits));
            rows.add(id, "remote", "remote_mc", "row_conflicts", "-", std::to_string(r.meter.row_conflicts));
            rep.summary["peak_gbps"] = r.peak_gbps;
            rep.summary["sustained_gbps"] = r.sustained_gbps;
            rep.summary["ratio"] = r.ratio;
            rep.runs.push_back(RunRecord{id, cfg, {}, {}, false});
        }

        void preset_stream_policies(PresetReport &rep)
        {
            const bool quick = rep.options.quick;
            const std::uint64_t single = quick ? 512 * KiB : 4 * MiB;
            const std::uint64_t multi = quick ? 256 * KiB : 2 * MiB;
            struct Point
            {
                std::string id;
                std::size_t nodes;
                fabric::PagePolicy policy;
                std::uint64_t array;
            };
            const std::vector<Point> points{
                {"1n-local", 1, fabric::PagePolicy::bind_local(), single},
                {"1n-remote", 1, fabric::PagePolicy::bind_remote(), single},
                {"1n-interleave", 1, fabric::PagePolicy::interleave(), single},
                {"8n-local", 8, fabric::PagePolicy::bind_local(), multi},
                {"8n-remote", 8, fabric::PagePolicy::bind_remote(), multi},
                {"8n-interleave", 8, fabric::PagePolicy::interleave(), multi},
            };
            Rows rows(rep.derived);
            for (const auto &p : points)
            {
                const auto cfg = prepared(stream_cluster(p.nodes, p.policy, p.array, 64 * MiB), rep.options);
                const std::string id = "stream-policies/" + p.id;
                rep.runs.push_back(simulate(cfg, id));
                const auto &snap = rep.runs.back().snapshot;
                for (const auto &[label, bw] : mean_node_bandwidth(snap, stats::Where::Reported))
                    rows.real(id, "mean", "stream", "reported_bandwidth_gbps", label, bw);
                for (const auto &[label, bw] : mean_node_bandwidth(snap, stats::Where::LocalController))
                    rows.real(id, "mean", "local_mc", "bandwidth_gbps", label, bw);
                for (const auto &[label, bw] : mean_node_bandwidth(snap, stats::Where::RemoteController))
                    rows.real(id, "mean", "remote_mc", "bandwidth_gbps", label, bw);
                rows.real(id, "all", "remote_mc", "aggregate_bandwidth_gbps", "-", aggregate_remote_bandwidth(snap));
            }
        }

        void preset_latency_sweep(PresetReport &rep)
        {
            const std::uint64_t array = rep.options.quick ? 512 * KiB : 4 * MiB;
            const auto cfg = prepared(stream_cluster(1, fabric::PagePolicy::bind_remote(), array, 64 * MiB), rep.options);
            const lifecycle::Checkpoint ck = lifecycle::fast_forward(cfg);
            Rows rows(rep.derived);
            for (double latency : {0.0, 170.0, 250.0})
            {
                const std::string lat = stats::format_double(latency);
                const std::string id = "latency-sweep/" + lat + "ns";
                const std::vector<std::string> ov{"link.latency_ns=" + lat};
                RunRecord r;
                r.run_id = id;
                r.config = cfg;
                r.restore_overrides = ov;
                r.snapshot = lifecycle::restore_and_run(ck, ov, id);
                const lifecycle::Cluster probe = lifecycle::restore(ck, ov);
                const auto &c = probe.config();
                const auto &nc = c.nodes.front().node;
                const std::uint64_t window = std::min<std::uint64_t>(
                    std::uint64_t{nc.cores} * nc.outstanding_misses, c.link.credits);
                const double bound = stats::littles_law_bound_gbps(window, c.link.latency() * 2 + c.link.serialization());
                for (const auto &roi : r.snapshot.nodes.front().rois)
                {
                    rows.real(id, "0", "link", "bandwidth_gbps", roi.label, stats::bandwidth(roi, stats::Where::Link));
                    rows.real(id, "0", "remote_mc", "bandwidth_gbps", roi.label,
                              stats::bandwidth(roi, stats::Where::RemoteController));
                    rows.real(id, "0", "stream", "reported_bandwidth_gbps", roi.label,
                              stats::bandwidth(roi, stats::Where::Reported));
                }
                rows.real(id, "0", "link", "littles_law_bound_gbps", "-", bound);
                rows.add(id, "0", "link", "window_lines", "-", std::to_string(window));
                rep.runs.push_back(std::move(r));
            }
        }

        void preset_pooling_study(PresetReport &rep)
        {
            const std::uint64_t local = rep.options.quick ? 1 * MiB : 8 * MiB;
            Rows rows(rep.derived);
            nlohmann::json points = nlohmann::json::array();
            for (double ratio : {0.5, 1.0, 1.5, 2.0, 3.0})
            {
                const auto footprint = static_cast<std::uint64_t>(ratio * static_cast<double>(local));
                const std::string tag = "ratio-" + stats::format_double(ratio);
                const auto pooled = prepared(
                    walker_cluster(fabric::PagePolicy::preferred_local(), footprint, local, 8 * local), rep.options);
                const auto baseline = prepared(
                    walker_cluster(fabric::PagePolicy::bind_local(), footprint, 4 * local, 8 * local), rep.options);
                rep.runs.push_back(simulate(pooled, "pooling-study/" + tag));
                rep.runs.push_back(simulate(baseline, "pooling-study/" + tag + "-all-local"));
                const auto &ps = rep.runs[rep.runs.size() - 2].snapshot;
                const auto &bs = rep.runs.back().snapshot;
                const auto &proi = ps.nodes.front().rois.front();
                const double split = stats::remote_split(proi);
                const double rel = mean_ipc(ps) / mean_ipc(bs);
                const std::string id = "pooling-study/" + tag;
                rows.real(id, "0", "walker", "footprint_over_local", "-", ratio);
                rows.real(id, "0", "walker", "remote_fraction", proi.label, split);
                rows.real(id, "0", "walker", "relative_ipc", proi.label, rel);
                points.push_back({{"ratio", ratio}, {"remote_fraction", split}, {"relative_ipc", rel}});
            }
            rep.summary["points"] = points;
        }

        workloads::GraphSpec sharing_graph(bool quick)
        {
            workloads::GraphSpec g;
            g.vertices = quick ? 2048 : 16384;
            g.edges = quick ? 16384 : 131072;
            return g;
        }

        void preset_sharing_study(PresetReport &rep)
        {
            workloads::GraphSpec graph = sharing_graph(rep.options.quick);
            if (rep.options.seed)
                graph.seed = *rep.options.seed;
            const auto shared_cfg = prepared(sharing_cluster(2, graph), rep.options);
            const auto local_cfg = prepared(graph_local_cluster(graph), rep.options);

            const lifecycle::Checkpoint ck = lifecycle::fast_forward(shared_cfg);
            lifecycle::Cluster cluster = lifecycle::restore(ck);
            const auto range = cluster.shared_range(0);
            const std::uint32_t before = cluster.device_store().checksum(range.start, range.end);
            RunRecord shared_run;
            shared_run.run_id = "sharing-study/shared";
            shared_run.config = shared_cfg;
            shared_run.snapshot = cluster.run_remaining(node::Mode::Timing, shared_run.run_id);
            const std::uint32_t after = cluster.device_store().checksum(range.start, range.end);

            lifecycle::Cluster oracle = lifecycle::restore(ck);
            const stats::StatSnapshot functional = oracle.run_remaining(node::Mode::Functional, "sharing-study/functional");

            rep.runs.push_back(std::move(shared_run));
            rep.runs.push_back(simulate(local_cfg, "sharing-study/all-local"));

            Rows rows(rep.derived);
            const auto &ss = rep.runs[0].snapshot;
            const auto &ls = rep.runs[1].snapshot;
            const std::string id = "sharing-study/shared";
            rows.add(id, "all", "shared_segment", "checksum_before", "-", workloads::hex64(before));
            rows.add(id, "all", "shared_segment", "checksum_after", "-", workloads::hex64(after));
            for (const auto &n : ss.nodes)
            {
                if (n.rois.empty())
                    continue;
                std::uint64_t t_local = 0, t_remote = 0, f_local = 0, f_remote = 0;
                for (const auto &r : n.rois)
                {
                    t_local += r.local_ops;
                    t_remote += r.remote_ops;
                }
                for (const auto &r : functional.nodes.at(n.host).rois)
                {
                    f_local += r.local_ops;
                    f_remote += r.remote_ops;
                }
                const std::string node = std::to_string(n.host);
                rows.real(id, node, "reader", "remote_split", "all", stats::remote_split(t_local, t_remote));
                rows.real(id, node, "reader", "functional_remote_split", "all", stats::remote_split(f_local, f_remote));
                rows.add(id, node, "reader", "functional_remote_ops", "all", std::to_string(f_remote));
                rows.add(id, node, "reader", "functional_local_ops", "all", std::to_string(f_local));
                for (const auto &[k, v] : n.results)
                {
                    const auto &ref = ls.nodes.front().results;
                    auto it = ref.find(k);
                    rows.add(id, node, "reader", k + "_matches_all_local", "-",
                             it != ref.end() && it->second == v ? "1" : "0");
                }
            }
        }

        void preset_scale_sweep(PresetReport &rep)
        {
            const std::vector<std::size_t> counts =
                rep.options.quick ? std::vector<std::size_t>{1, 2, 4} : std::vector<std::size_t>{1, 2, 4, 8, 16};
            const std::uint64_t array = rep.options.quick ? 128 * KiB : 512 * KiB;
            Rows rows(rep.derived);
            nlohmann::json points = nlohmann::json::array();
            for (std::size_t n : counts)
            {
                auto cluster = stream_cluster(n, fabric::PagePolicy::interleave(), array, 8 * MiB);
                cluster.link.latency_ns = 170.0;
                const auto base = prepared(cluster, rep.options);
                const std::string id = "scale-sweep/" + std::to_string(n) + "n";
                const lifecycle::Checkpoint ck = lifecycle::fast_forward(base);
                const stats::StatSnapshot serial = lifecycle::restore_and_run(ck, {"threads=1"}, id);
                const std::string par = "threads=" + std::to_string(n);
                RunRecord r;
                r.run_id = id;
                r.config = base;
                r.restore_overrides = {par};
                r.snapshot = lifecycle::restore_and_run(ck, r.restore_overrides, id);
                const double pe = stats::parallel_efficiency(
                    stats::PeInputs{static_cast<double>(n), std::max(serial.wallclock_s, 1e-9),
                                    std::max(r.snapshot.wallclock_s, 1e-9)});
                rows.add(id, "all", "sim", "nodes", "-", std::to_string(n));
                rows.add(id, "all", "sim", "events", "-", std::to_string(r.snapshot.events));
                rows.add(id, "all", "sim", "simulated_ps", "-", std::to_string((r.snapshot.end - r.snapshot.start).ps()));
                points.push_back({{"nodes", n},
                                  {"threads", n},
                                  {"wallclock_serial_s", serial.wallclock_s},
                                  {"wallclock_parallel_s", r.snapshot.wallclock_s},
                                  {"parallel_efficiency", pe}});
                rep.runs.push_back(std::move(r));
            }
            rep.summary["points"] = points;
        }

        const std::map<std::string, std::function<void(PresetReport &)>> &registry()
        {
            static const std::map<std::string, std::function<void(PresetReport &)>> r{
                {"calibration", preset_calibration},       {"stream-policies", preset_stream_policies},
                {"latency-sweep", preset_latency_sweep},   {"pooling-study", preset_pooling_study},
                {"sharing-study", preset_sharing_study},   {"scale-sweep", preset_scale_sweep},
            };
            return r;
        }
    } // namespace

    const char *version() { return CXLSIM_VERSION; }

    std::vector<std::string> preset_names()
    {
        return {"calibration", "stream-policies", "latency-sweep", "pooling-study", "sharing-study", "scale-sweep"};
    }

    config::ClusterConfig stream_cluster(std::size_t nodes, const fabric::PagePolicy &policy, std::uint64_t array_bytes,
                                         std::uint64_t pool_bytes)
    {
        config::ClusterConfig cfg;
        cfg.name = "stream";
        config::NodeEntry e;
        e.workload.kind = config::WorkloadKind::Stream;
        e.workload.policy = policy;
        e.workload.stream.array_bytes = array_bytes;
        e.pool_bytes = policy.kind == fabric::PolicyKind::MemBindLocal ? 0 : pool_bytes;
        cfg.nodes.assign(nodes, e);
        return cfg;
    }

    config::ClusterConfig walker_cluster(const fabric::PagePolicy &policy, std::uint64_t footprint,
                                         std::uint64_t local_capacity, std::uint64_t pool_bytes)
    {
        config::ClusterConfig cfg;
        cfg.name = "walker";
        cfg.link.latency_ns = 250.0;
        config::NodeEntry e;
        e.node.local_capacity = local_capacity;
        e.workload.kind = config::WorkloadKind::Walker;
        e.workload.policy = policy;
        e.workload.walker.footprint = footprint;
        e.workload.walker.pattern = workloads::WalkPattern::PointerChase;
        e.pool_bytes = policy.kind == fabric::PolicyKind::MemBindLocal ? 0 : pool_bytes;
        cfg.nodes.assign(1, e);
        return cfg;
    }

    config::ClusterConfig sharing_cluster(std::size_t readers, const workloads::GraphSpec &graph)
    {
        config::ClusterConfig cfg;
        cfg.name = "sharing";
        config::NodeEntry writer;
        writer.workload.kind = config::WorkloadKind::GraphWriter;
        writer.workload.graph = graph;
        config::NodeEntry reader;
        reader.workload.kind = config::WorkloadKind::GraphReader;
        reader.workload.policy = fabric::PagePolicy::bind_local();
        reader.workload.graph = graph;
        cfg.nodes.assign(1, writer);
        config::SharedSegment seg;
        const std::uint64_t bytes = workloads::csr_layout(graph.vertices, graph.edges).bytes;
        seg.bytes = (bytes + kPageBytes - 1) / kPageBytes * kPageBytes;
        seg.writer = 0;
        for (std::size_t i = 0; i < readers; ++i)
        {
            cfg.nodes.push_back(reader);
            seg.readers.push_back(static_cast<HostId>(i + 1));
        }
        cfg.shared.push_back(seg);
        return cfg;
    }

    config::ClusterConfig graph_local_cluster(const workloads::GraphSpec &graph)
    {
        config::ClusterConfig cfg;
        cfg.name = "graph-local";
        config::NodeEntry e;
        e.workload.kind = config::WorkloadKind::GraphLocal;
        e.workload.policy = fabric::PagePolicy::bind_local();
        e.workload.graph = graph;
        cfg.nodes.assign(1, e);
        return cfg;
    }

    PresetReport run_preset(const std::string &name, const PresetOptions &options)
    {
        const auto &reg = registry();
        auto it = reg.find(name);
        if (it == reg.end())
        {
            std::string known;
            for (const auto &n : preset_names())
                known += (known.empty() ? "" : ", ") + n;
            throw InvalidArgument("unknown preset '" + name + "' (known: " + known + ")");
        }
        PresetReport rep;
        rep.preset = name;
        rep.options = options;
        rep.summary = nlohmann::json::object();
        it->second(rep);
        nlohmann::json runs = nlohmann::json::array();
        for (const auto &r : rep.runs)
        {
            if (r.in_csv)
                runs.push_back(stats::summary_json(r.snapshot));
        }
        rep.summary["preset"] = name;
        rep.summary["threads"] = options.threads;
        rep.summary["runs"] = runs;
        return rep;
    }

    std::vector<stats::CsvRow> report_rows(const PresetReport &report)
    {
        std::vector<stats::CsvRow> rows;
        for (const auto &r : report.runs)
        {
            if (!r.in_csv)
                continue;
            auto s = stats::snapshot_rows(r.snapshot);
            rows.insert(rows.end(), s.begin(), s.end());
        }
        rows.insert(rows.end(), report.derived.begin(), report.derived.end());
        return rows;
    }

    nlohmann::json manifest(const PresetReport &report)
    {
        nlohmann::json m;
        m["tool"] = "cxlsim";
        m["version"] = version();
        m["preset"] = report.preset;
        m["quick"] = report.options.quick;
        m["seed"] = report.options.seed ? nlohmann::json(*report.options.seed) : nlohmann::json(nullptr);
        m["overrides"] = report.options.overrides;
        nlohmann::json runs = nlohmann::json::array();
        for (const auto &r : report.runs)
        {
            runs.push_back({{"run_id", r.run_id},
                            {"config_hash", config::config_hash(r.config)},
                            {"restore_overrides", r.restore_overrides},
                            {"config", config::serialize_config(r.config)}});
        }
        m["runs"] = runs;
        return m;
    }

} // namespace cxlsim::cli

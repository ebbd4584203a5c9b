#include "cxlsim/cli/presets.hpp"
#include "cxlsim/errors.hpp"
#include "cxlsim/lifecycle/checkpoint.hpp"
#include "cxlsim/lifecycle/cluster.hpp"
#include "cxlsim/node/cache.hpp"
#include "cxlsim/stats/report.hpp"
#include "cxlsim/workloads/graph.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace cxlsim;

namespace
{
    constexpr std::uint64_t KiB = 1024;
    constexpr std::uint64_t MiB = 1024 * KiB;

    using Clock = std::chrono::steady_clock;

    double seconds_since(Clock::time_point t0)
    {
        return std::chrono::duration<double>(Clock::now() - t0).count();
    }

    struct Outcome
    {
        bool pass = true;
        std::string detail;

        void check(bool ok, const std::string &what)
        {
            if (!ok)
            {
                pass = false;
                detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
            }
        }
        void note(const std::string &text) { detail += (detail.empty() ? "" : "; ") + text; }
    };

    std::string fmt(double v, int digits = 4)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*f", digits, v);
        return buf;
    }

    std::string csv_text(const std::vector<stats::CsvRow> &rows)
    {
        std::ostringstream out;
        stats::write_csv(out, rows);
        return out.str();
    }

    const cli::RunRecord &find_run(const cli::PresetReport &rep, const std::string &id)
    {
        for (const auto &r : rep.runs)
        {
            if (r.run_id == id)
                return r;
        }
        throw std::runtime_error("run not found: " + id);
    }

    /// Bytes over summed ROI time for one node, at the given meter.
    double run_level_bandwidth(const stats::NodeSnapshot &n, stats::Where where)
    {
        std::uint64_t bytes = 0;
        std::uint64_t ps = 0;
        for (const auto &r : n.rois)
        {
            switch (where)
            {
            case stats::Where::Link:
                bytes += r.link.bytes;
                break;
            case stats::Where::RemoteController:
                bytes += r.remote_controller.bytes_read + r.remote_controller.bytes_written;
                break;
            case stats::Where::LocalController:
                bytes += r.local_controller.bytes_read + r.local_controller.bytes_written;
                break;
            case stats::Where::Reported:
                bytes += r.reported_bytes;
                break;
            }
            ps += (r.end - r.begin).ps();
        }
        return static_cast<double>(bytes) / (static_cast<double>(ps) * 1e-3);
    }

    double roi_bandwidth(const stats::RoiSnapshot &r, std::uint64_t bytes)
    {
        return static_cast<double>(bytes) / (static_cast<double>((r.end - r.begin).ps()) * 1e-3);
    }

    double sustained_gbps = 0.0;

    Outcome criterion1()
    {
        Outcome o;
        const auto t0 = Clock::now();
        const auto rep = cli::run_preset("calibration", cli::PresetOptions{});
        const double wall = seconds_since(t0);
        const config::ClusterConfig &cfg = rep.runs.front().config;
        const double peak_oracle =
            static_cast<double>(cfg.device.channels) * cfg.device.dram.data_rate_mts * 1e6 * 8.0 / 1e9;
        const double peak = rep.summary.at("peak_gbps").get<double>();
        const double ratio = rep.summary.at("ratio").get<double>();
        sustained_gbps = rep.summary.at("sustained_gbps").get<double>();
        o.check(std::fabs(peak_oracle - 76.8) < 1e-9, "oracle peak is 76.8");
        o.check(std::fabs(peak - peak_oracle) < 1e-9, "peak == 76.8");
        o.check(ratio >= 0.70 && ratio <= 0.85, "sustained/peak in [0.70, 0.85]");
        o.check(wall < 120.0, "runtime < 2 min");
        o.note("peak=" + fmt(peak, 3) + " sustained=" + fmt(sustained_gbps, 3) + " ratio=" + fmt(ratio) +
               " wall=" + fmt(wall, 1) + "s");
        return o;
    }

    void check_remote_conservation(Outcome &o, const stats::StatSnapshot &s, const std::string &tag)
    {
        double worst = 0.0;
        for (const auto &n : s.nodes)
        {
            for (const auto &r : n.rois)
            {
                const std::uint64_t mc = r.remote_controller.bytes_read + r.remote_controller.bytes_written;
                o.check(r.link.bytes == mc, tag + " node " + std::to_string(n.host) + " " + r.label +
                                                ": link bytes == remote controller bytes");
                o.check(r.reported_bytes > 0, tag + " " + r.label + ": reported bytes > 0");
                const double dev = std::fabs(static_cast<double>(r.link.bytes) - static_cast<double>(r.reported_bytes)) /
                                   static_cast<double>(r.reported_bytes);
                worst = std::max(worst, dev);
            }
        }
        o.check(s.link_bytes == s.remote_total().bytes(), tag + ": run link bytes == remote controller bytes");
        o.check(worst <= 0.05, tag + ": reported vs link within 5%");
        o.note(tag + " max |reported-link|/reported=" + fmt(100.0 * worst, 3) + "%");
    }

    cli::PresetReport stream_policies;

    Outcome criterion2()
    {
        Outcome o;
        const auto t0 = Clock::now();
        const auto cfg = cli::stream_cluster(1, fabric::PagePolicy::bind_remote(), 4 * MiB, 64 * MiB);
        const auto s = lifecycle::restore_and_run(lifecycle::fast_forward(cfg), {}, "acceptance/1n-remote-4MiB");
        const double wall = seconds_since(t0);
        o.check(s.nodes.front().results.at("mismatched_elements") == "0", "STREAM arrays verify");
        o.check(s.nodes.front().rois.size() == 4, "four kernel ROIs");
        check_remote_conservation(o, s, "1n-4MiB");
        check_remote_conservation(o, find_run(stream_policies, "stream-policies/1n-remote").snapshot, "preset 1n");
        check_remote_conservation(o, find_run(stream_policies, "stream-policies/8n-remote").snapshot, "preset 8n");
        o.check(wall < 300.0, "runtime < 5 min");
        o.note("wall=" + fmt(wall, 1) + "s");
        return o;
    }

    Outcome criterion3()
    {
        Outcome o;
        std::uint64_t local_rois = 0, remote_rois = 0;
        for (const char *id : {"stream-policies/1n-local", "stream-policies/8n-local"})
        {
            for (const auto &n : find_run(stream_policies, id).snapshot.nodes)
            {
                for (const auto &r : n.rois)
                {
                    ++local_rois;
                    o.check(r.remote_controller.bytes() == 0 && r.link.bytes == 0 && r.remote_ops == 0,
                            std::string(id) + " " + r.label + ": zero remote bytes");
                    o.check(r.local_controller.bytes() > 0, std::string(id) + " " + r.label + ": local traffic");
                }
            }
        }
        for (const char *id : {"stream-policies/1n-remote", "stream-policies/8n-remote"})
        {
            for (const auto &n : find_run(stream_policies, id).snapshot.nodes)
            {
                for (const auto &r : n.rois)
                {
                    ++remote_rois;
                    o.check(r.local_controller.bytes() == 0 && r.local_ops == 0,
                            std::string(id) + " " + r.label + ": zero local bytes");
                    o.check(r.remote_controller.bytes() > 0, std::string(id) + " " + r.label + ": remote traffic");
                }
            }
        }
        o.note("bind-local ROIs=" + std::to_string(local_rois) + " bind-remote ROIs=" + std::to_string(remote_rois));
        return o;
    }

    double stream_policies_wall = 0.0;

    Outcome criterion4()
    {
        Outcome o;
        const auto &local = find_run(stream_policies, "stream-policies/8n-local").snapshot;
        const auto &inter = find_run(stream_policies, "stream-policies/8n-interleave").snapshot;
        o.check(local.nodes.size() == 8 && inter.nodes.size() == 8, "8-node clusters");
        std::map<std::string, double> loc, itl;
        for (const auto &n : local.nodes)
            for (const auto &r : n.rois)
                loc[r.label] += roi_bandwidth(r, r.reported_bytes) / 8.0;
        for (const auto &n : inter.nodes)
            for (const auto &r : n.rois)
                itl[r.label] += roi_bandwidth(r, r.reported_bytes) / 8.0;
        std::string table;
        for (const auto &[label, bw] : loc)
        {
            o.check(itl.count(label) && itl[label] < bw, label + ": per-node interleave < per-node local");
            table += " " + label + " " + fmt(itl[label], 2) + "<" + fmt(bw, 2);
        }
        const double aggregate = static_cast<double>(inter.remote_total().bytes()) /
                                 (static_cast<double>((inter.end - inter.start).ps()) * 1e-3);
        o.check(sustained_gbps > 0.0, "calibrated sustained available");
        o.check(aggregate <= sustained_gbps, "aggregate remote <= calibrated sustained");
        o.check(stream_policies_wall < 1800.0, "runtime < 30 min");
        o.note("per-node GB/s interleave<local:" + table + "; aggregate remote=" + fmt(aggregate, 2) +
               " <= sustained=" + fmt(sustained_gbps, 2) + "; wall=" + fmt(stream_policies_wall, 1) + "s");
        return o;
    }

    Outcome criterion5()
    {
        Outcome o;
        const auto rep = cli::run_preset("latency-sweep", cli::PresetOptions{});
        std::vector<double> bw;
        std::string text;
        for (double latency : {0.0, 170.0, 250.0})
        {
            const auto &run = find_run(rep, "latency-sweep/" + stats::format_double(latency) + "ns");
            const auto &n = run.snapshot.nodes.front();
            const double b = run_level_bandwidth(n, stats::Where::Link);
            auto cfg = run.config;
            for (const auto &ov : run.restore_overrides)
                config::apply_override(cfg, ov);
            const auto &nc = cfg.nodes.front().node;
            const std::uint64_t window =
                std::min<std::uint64_t>(std::uint64_t{nc.cores} * nc.outstanding_misses, cfg.link.credits);
            const double round_trip_ns = 2.0 * cfg.link.latency_ns + 64.0 / cfg.link.bandwidth_gbps;
            const double bound = static_cast<double>(window) * 64.0 / round_trip_ns;
            o.check(b <= bound * 1.01, fmt(latency, 0) + "ns: bandwidth within Little's-law bound");
            bw.push_back(b);
            text += " " + fmt(latency, 0) + "ns=" + fmt(b, 3) + "(bound " + fmt(bound, 2) + ")";
            std::string per;
            for (const auto &r : n.rois)
                per += " " + r.label + "=" + fmt(roi_bandwidth(r, r.link.bytes), 2);
            text += " [" + per.substr(1) + "]";
        }
        o.check(bw[0] >= bw[1] && bw[1] >= bw[2], "non-increasing in latency");
        o.check(bw[2] < bw[1], "250ns < 170ns");
        o.note("run-level link GB/s:" + text + "; dips " + fmt(100.0 * (1.0 - bw[1] / bw[0]), 1) + "% and " +
               fmt(100.0 * (1.0 - bw[2] / bw[0]), 1) + "%");
        return o;
    }

    Outcome criterion6()
    {
        Outcome o;
        const auto rep = cli::run_preset("pooling-study", cli::PresetOptions{});
        struct Point
        {
            double ratio, fraction, rel;
        };
        std::vector<Point> pts;
        for (double ratio : {0.5, 1.0, 1.5, 2.0, 3.0})
        {
            const std::string tag = "pooling-study/ratio-" + stats::format_double(ratio);
            const auto &pooled = find_run(rep, tag).snapshot;
            const auto &base = find_run(rep, tag + "-all-local").snapshot;
            std::uint64_t local_ops = 0, remote_ops = 0;
            double ipc_p = 0.0, ipc_b = 0.0;
            for (const auto &r : pooled.nodes.front().rois)
            {
                local_ops += r.local_ops;
                remote_ops += r.remote_ops;
                ipc_p += stats::ipc_proxy(r);
            }
            for (const auto &r : base.nodes.front().rois)
                ipc_b += stats::ipc_proxy(r);
            const double fraction = static_cast<double>(remote_ops) / static_cast<double>(local_ops + remote_ops);
            pts.push_back({ratio, fraction, ipc_p / ipc_b});
        }
        std::string text;
        for (std::size_t i = 0; i < pts.size(); ++i)
        {
            const auto &p = pts[i];
            text += " " + fmt(p.ratio, 1) + ":(" + fmt(p.fraction, 3) + "," + fmt(p.rel, 3) + ")";
            if (p.ratio <= 1.0)
            {
                o.check(p.fraction == 0.0, "ratio " + fmt(p.ratio, 1) + ": remote fraction 0");
                o.check(std::fabs(p.rel - 1.0) <= 0.02, "ratio " + fmt(p.ratio, 1) + ": relative IPC within 2%");
            }
            if (i > 0 && pts[i].ratio > 1.0)
            {
                o.check(pts[i].fraction > pts[i - 1].fraction, "remote fraction grows at ratio " + fmt(p.ratio, 1));
                o.check(pts[i].rel < pts[i - 1].rel, "relative IPC strictly decreases at ratio " + fmt(p.ratio, 1));
            }
        }
        o.note("(ratio:(remote fraction, relative IPC))" + text);
        return o;
    }

    Outcome criterion7()
    {
        Outcome o;
        workloads::GraphSpec graph;
        graph.vertices = 16384;
        graph.edges = 131072;
        const auto cfg = cli::sharing_cluster(3, graph);

        const workloads::Csr csr = workloads::generate_graph(graph.seed, graph.vertices, graph.edges);
        const oracle::Graph g{csr.offsets, csr.edges};
        const auto dist = oracle::bfs(g, graph.bfs_source);
        const auto ranks = oracle::pagerank(g, graph.pagerank_iterations, graph.damping);
        const std::string bfs_digest = oracle::fnv_hex(dist.data(), dist.size() * sizeof dist[0]);
        const std::string pr_digest = oracle::fnv_hex(ranks.data(), ranks.size() * sizeof ranks[0]);
        const oracle::OpCount bfs_ops = oracle::bfs_ops(g, graph.bfs_source);
        const oracle::OpCount pr_ops = oracle::pagerank_ops(g, graph.pagerank_iterations);

        const lifecycle::Checkpoint ck = lifecycle::fast_forward(cfg);
        lifecycle::Cluster cluster = lifecycle::restore(ck);
        const auto range = cluster.shared_range(0);
        const std::uint32_t before = cluster.device_store().checksum(range.start, range.end);
        const auto s = cluster.run_remaining(node::Mode::Timing, "acceptance/sharing");
        const std::uint32_t after = cluster.device_store().checksum(range.start, range.end);
        o.check(before == after, "(b) segment checksum unchanged");

        const auto local = lifecycle::restore_and_run(lifecycle::fast_forward(cli::graph_local_cluster(graph)), {},
                                                      "acceptance/all-local");
        const auto &lr = local.nodes.front().results;
        o.check(lr.at("bfs_digest") == bfs_digest && lr.at("pagerank_digest") == pr_digest,
                "all-local digests == oracle");

        std::string splits;
        for (std::size_t i = 1; i < cluster.node_count(); ++i)
        {
            const auto &n = s.nodes.at(i);
            const std::string who = "reader " + std::to_string(i);
            o.check(n.results.at("bfs_digest") == bfs_digest, "(a) " + who + " BFS digest == oracle");
            o.check(n.results.at("pagerank_digest") == pr_digest, "(a) " + who + " PageRank digest == oracle");
            o.check(n.results == lr, "(a) " + who + " digests == all-local run");
            std::uint64_t local_ops = 0, remote_ops = 0;
            for (const auto &r : n.rois)
            {
                const oracle::OpCount &want = r.label == "BFS" ? bfs_ops : pr_ops;
                o.check(r.remote_ops == want.csr && r.local_ops == want.scratch,
                        "(d) " + who + " " + r.label + " op split == oracle");
                local_ops += r.local_ops;
                remote_ops += r.remote_ops;
            }
            const double split = stats::remote_split(local_ops, remote_ops);
            const oracle::OpCount total{bfs_ops.csr + pr_ops.csr, bfs_ops.scratch + pr_ops.scratch};
            o.check(split > 0.0, "(d) " + who + " remote_split > 0");
            o.check(split == total.csr_fraction(), "(d) " + who + " remote_split == oracle fraction");
            if (i == 1)
                splits = "remote_split=" + fmt(split) + " (BFS " + fmt(bfs_ops.csr_fraction()) + ", PageRank " +
                         fmt(pr_ops.csr_fraction()) + ")";
        }

        auto &reader = cluster.node(1);
        const std::uint64_t probe = lifecycle::kSharedVirtualBase + 64;
        const auto value = reader.mem->load<std::uint64_t>(probe);
        bool raised = false;
        try
        {
            reader.mem->store<std::uint64_t>(probe, value + 1);
        }
        catch (const ReadOnlyViolation &)
        {
            raised = true;
        }
        o.check(raised, "(c) reader store raises ReadOnlyViolation");
        o.check(reader.mem->load<std::uint64_t>(probe) == value, "(c) rejected store leaves memory unchanged");
        o.note(std::to_string(cluster.node_count() - 1) + " readers, n=" + std::to_string(graph.vertices) +
               " m=" + std::to_string(graph.edges) + "; " + splits);
        return o;
    }

    Outcome criterion8()
    {
        Outcome o;
        std::string text;
        for (const auto &name : cli::preset_names())
        {
            cli::PresetOptions one;
            one.quick = true;
            one.threads = 1;
            cli::PresetOptions eight = one;
            eight.threads = 8;
            const auto t0 = Clock::now();
            const std::string a = csv_text(cli::report_rows(cli::run_preset(name, one)));
            const std::string b = csv_text(cli::report_rows(cli::run_preset(name, eight)));
            const std::string c = csv_text(cli::report_rows(cli::run_preset(name, one)));
            o.check(a == b, name + ": threads 1 vs 8 CSV identical");
            o.check(a == c, name + ": repeated run CSV identical");
            o.check(a.size() > std::strlen(stats::kCsvHeader) + 1, name + ": CSV has rows");
            text += " " + name + "(" + fmt(seconds_since(t0), 1) + "s)";
        }
        o.note("quick presets:" + text);
        return o;
    }

    Outcome criterion9()
    {
        Outcome o;
        const double a = stats::parallel_efficiency({2, 76, 100});
        const double t = 1000.0;
        const double b = stats::parallel_efficiency({17, t, t / 1.09});
        o.check(std::fabs(a - 0.38) <= 1e-12, "PE(2, 76, 100) == 0.38");
        o.check(std::fabs(b - 1.09 / 17.0) <= 1e-12, "PE(17, t, t/1.09) == 1.09/17");
        o.note("PE(2,76,100)=" + stats::format_double(a) + " PE(17,t,t/1.09)=" + stats::format_double(b));
        return o;
    }

    Outcome criterion10()
    {
        Outcome o;
        std::mt19937_64 rng(20240601);
        std::uint64_t hits = 0, total = 0;
        const int geometries = 12;
        for (int k = 0; k < geometries; ++k)
        {
            const std::uint32_t ways = 1u << (rng() % 5);
            const std::uint64_t sets = std::uint64_t{1} << (rng() % 11);
            const node::CacheGeometry geo{sets * ways * 64, ways, 1};
            node::Cache cache(geo);
            oracle::RefLru ref(geo.size, ways);
            const std::uint64_t lines = sets * ways * (2 + rng() % 6);
            std::uint64_t mismatches = 0;
            for (int i = 0; i < 100000; ++i)
            {
                std::uint64_t line;
                if (rng() % 3 == 0)
                    line = rng() % std::max<std::uint64_t>(1, sets * ways / 2);
                else
                    line = rng() % lines;
                const std::uint64_t addr = line * 64 + rng() % 64;
                const bool write = rng() % 4 == 0;
                std::uint64_t evicted = std::numeric_limits<std::uint64_t>::max();
                const bool expect = ref.access(addr, &evicted);
                const auto got = cache.access(addr, write ? AccessKind::Write : AccessKind::Read);
                bool same = got.hit == expect;
                if (!expect)
                {
                    const bool ref_evicts = evicted != std::numeric_limits<std::uint64_t>::max();
                    same = same && got.victim.has_value() == ref_evicts;
                    if (ref_evicts && got.victim)
                        same = same && got.victim->line == evicted;
                }
                mismatches += same ? 0 : 1;
                hits += expect ? 1 : 0;
                ++total;
            }
            o.check(mismatches == 0, "geometry " + std::to_string(geo.size) + "B/" + std::to_string(ways) +
                                         "-way: " + std::to_string(mismatches) + " mismatches");
        }
        o.note(std::to_string(geometries) + " geometries x 100000 accesses, hit rate " +
               fmt(static_cast<double>(hits) / static_cast<double>(total), 3));
        return o;
    }

    void report(int id, const std::function<Outcome()> &fn, int &failures)
    {
        Outcome o;
        const auto t0 = Clock::now();
        try
        {
            o = fn();
        }
        catch (const std::exception &e)
        {
            o.pass = false;
            o.note(std::string("exception: ") + e.what());
        }
        if (!o.pass)
            ++failures;
        std::printf("criterion %d: %s (%.1fs) %s\n", id, o.pass ? "PASS" : "FAIL", seconds_since(t0),
                    o.detail.c_str());
        std::fflush(stdout);
    }
} // namespace

int main()
{
    int failures = 0;
    report(1, criterion1, failures);
    {
        const auto t0 = Clock::now();
        try
        {
            stream_policies = cli::run_preset("stream-policies", cli::PresetOptions{});
        }
        catch (const std::exception &e)
        {
            std::printf("stream-policies preset failed: %s\n", e.what());
        }
        stream_policies_wall = seconds_since(t0);
    }
    report(2, criterion2, failures);
    report(3, criterion3, failures);
    report(4, criterion4, failures);
    report(5, criterion5, failures);
    report(6, criterion6, failures);
    report(7, criterion7, failures);
    report(8, criterion8, failures);
    report(9, criterion9, failures);
    report(10, criterion10, failures);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}

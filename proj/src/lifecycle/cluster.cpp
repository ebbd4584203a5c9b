#include "cxlsim/lifecycle/cluster.hpp"

#include "cxlsim/errors.hpp"
#include "cxlsim/memnet/remote_memory.hpp"
#include "cxlsim/sim/engine.hpp"
#include "cxlsim/workloads/graph.hpp"
#include "cxlsim/workloads/stream.hpp"
#include "cxlsim/workloads/walker.hpp"

#include <algorithm>
#include <chrono>

namespace cxlsim::lifecycle
{
    namespace
    {
        std::uint64_t page_round(std::uint64_t bytes) { return (bytes + kPageBytes - 1) / kPageBytes * kPageBytes; }

        std::mt19937_64 node_rng(std::uint64_t seed, HostId host)
        {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), host};
            return std::mt19937_64(seq);
        }

        template <class Map, class Key>
        auto lookup(const Map &m, const Key &k) -> typename Map::mapped_type
        {
            auto it = m.find(k);
            return it == m.end() ? typename Map::mapped_type{} : it->second;
        }
    } // namespace

    std::unique_ptr<workloads::Workload> make_workload(const config::WorkloadConfig &cfg)
    {
        switch (cfg.kind)
        {
        case config::WorkloadKind::Idle:
            return std::make_unique<workloads::IdleWorkload>();
        case config::WorkloadKind::Stream:
            return std::make_unique<workloads::StreamWorkload>(cfg.stream, cfg.policy);
        case config::WorkloadKind::Walker:
            return std::make_unique<workloads::WalkerWorkload>(cfg.walker, cfg.policy);
        case config::WorkloadKind::GraphWriter:
            return std::make_unique<workloads::GraphWriterWorkload>(cfg.graph);
        case config::WorkloadKind::GraphReader:
            return std::make_unique<workloads::GraphReaderWorkload>(cfg.graph, cfg.policy, false);
        case config::WorkloadKind::GraphLocal:
            return std::make_unique<workloads::GraphReaderWorkload>(cfg.graph, cfg.policy, true);
        }
        throw InvalidArgument("unknown workload kind");
    }

    Cluster::Cluster(RestoreTag, config::ClusterConfig cfg) : cfg_(std::move(cfg))
    {
        cfg_.validate();
        fabric_ = std::make_unique<fabric::FabricManager>(cfg_.device.base, cfg_.device.capacity);
        device_ = std::make_unique<fabric::MemoryStore>();
        std::uint64_t cursor = cfg_.device.base;
        for (const auto &seg : cfg_.shared)
        {
            const std::uint64_t size = page_round(seg.bytes);
            shared_ranges_.push_back(fabric::AddrRange{cursor, cursor + size});
            cursor += size;
        }
    }

    Cluster::Cluster(config::ClusterConfig cfg) : Cluster(RestoreTag{}, std::move(cfg))
    {
        try
        {
            for (std::size_t s = 0; s < cfg_.shared.size(); ++s)
            {
                const auto &seg = cfg_.shared[s];
                fabric_->bind_shared(shared_ranges_[s], seg.writer, seg.readers);
                for (std::uint64_t a = shared_ranges_[s].start; a < shared_ranges_[s].end; a += kPageBytes)
                    device_->materialize(a, true);
            }
            for (std::size_t i = 0; i < cfg_.nodes.size(); ++i)
            {
                if (cfg_.nodes[i].pool_bytes > 0)
                    fabric_->bind_pooled(static_cast<HostId>(i), cfg_.nodes[i].pool_bytes);
            }
        }
        catch (const Error &e)
        {
            throw InitFailure(std::string("device binding failed: ") + e.what());
        }
        build_nodes(true);
    }

    Cluster::Cluster(Cluster &&) noexcept = default;
    Cluster &Cluster::operator=(Cluster &&) noexcept = default;
    Cluster::~Cluster() = default;

    void Cluster::build_nodes(bool run_setup)
    {
        nodes_.clear();
        nodes_.reserve(cfg_.nodes.size());
        for (std::size_t i = 0; i < cfg_.nodes.size(); ++i)
        {
            const HostId host = static_cast<HostId>(i);
            const auto &entry = cfg_.nodes[i];
            NodeRuntime rt;
            rt.host = host;
            rt.map = std::make_unique<fabric::PageMap>(host, entry.node.local_capacity);
            rt.local = std::make_unique<fabric::MemoryStore>();
            rt.mem = std::make_unique<fabric::HostMemory>(*rt.map, *rt.local, *device_);
            rt.workload = make_workload(entry.workload);
            rt.workload->attach(*rt.mem);
            rt.rng = node_rng(cfg_.seed, host);
            for (std::size_t s = 0; s < cfg_.shared.size(); ++s)
            {
                const auto &seg = cfg_.shared[s];
                if (seg.writer == host || std::find(seg.readers.begin(), seg.readers.end(), host) != seg.readers.end())
                    rt.shared_segment = s;
            }
            if (run_setup)
            {
                try
                {
                    for (const auto &b : fabric_->bindings_for(host))
                    {
                        if (b.mode == fabric::BindMode::Pooled)
                            rt.map->add_remote_slice(b);
                        else
                            rt.map->map_binding(kSharedVirtualBase, b);
                    }
                    workloads::SetupContext ctx{*rt.mem, rt.rng};
                    if (rt.shared_segment)
                    {
                        const auto range = shared_ranges_[*rt.shared_segment];
                        ctx.shared_vbase = kSharedVirtualBase;
                        ctx.shared_bytes = range.size();
                        ctx.shared_access = cfg_.shared[*rt.shared_segment].writer == host ? fabric::Access::ReadWrite
                                                                                          : fabric::Access::ReadOnly;
                    }
                    rt.workload->setup(ctx);
                }
                catch (const Error &e)
                {
                    throw InitFailure("node " + std::to_string(i) + " (" + rt.workload->kind() + ") setup failed: " + e.what());
                }
            }
            nodes_.push_back(std::move(rt));
        }
    }

    stats::StatSnapshot Cluster::fast_forward()
    {
        std::vector<std::size_t> until;
        for (const auto &n : nodes_)
            until.push_back(std::max(n.next_phase, n.workload->first_roi()));
        const node::Mode mode = cfg_.timing_init ? node::Mode::Timing : node::Mode::Functional;
        try
        {
            return run(mode, until, cfg_.name + ".init");
        }
        catch (const InitFailure &)
        {
            throw;
        }
        catch (const Error &e)
        {
            throw InitFailure(std::string("init stage failed: ") + e.what());
        }
    }

    stats::StatSnapshot Cluster::run_remaining(node::Mode mode, const std::string &run_id)
    {
        std::vector<std::size_t> until;
        for (const auto &n : nodes_)
            until.push_back(n.workload->phases().size());
        return run(mode, until, run_id);
    }

    stats::StatSnapshot Cluster::run(node::Mode mode, const std::vector<std::size_t> &until, const std::string &run_id)
    {
        if (until.size() != nodes_.size())
            throw InvalidArgument("run: one phase bound per node required");
        const std::size_t n = nodes_.size();
        const bool with_device = cfg_.needs_device();
        const ComponentId remote_id = static_cast<ComponentId>(n);

        Engine engine;
        std::vector<PartitionId> parts;
        for (std::size_t i = 0; i < n; ++i)
            parts.push_back(engine.add_partition());
        std::vector<node::ComputeNode *> cns;
        for (std::size_t i = 0; i < n; ++i)
        {
            auto cn = std::make_unique<node::ComputeNode>(
                static_cast<HostId>(i), cfg_.nodes[i].node, *nodes_[i].map, *nodes_[i].workload,
                with_device ? std::optional<ComponentId>(remote_id) : std::nullopt, cfg_.link, cfg_.device.base);
            cns.push_back(cn.get());
            engine.add_component(parts[i], std::move(cn));
        }
        memnet::RemoteMemory *remote = nullptr;
        if (with_device)
        {
            const PartitionId rp = engine.add_partition();
            std::vector<ComponentId> endpoints;
            for (std::size_t i = 0; i < n; ++i)
                endpoints.push_back(static_cast<ComponentId>(i));
            auto rm = std::make_unique<memnet::RemoteMemory>(cfg_.device, cfg_.link, endpoints);
            remote = rm.get();
            engine.add_component(rp, std::move(rm));
            for (std::size_t i = 0; i < n; ++i)
            {
                engine.register_channel(parts[i], rp, cfg_.link.min_delay());
                engine.register_channel(rp, parts[i], cfg_.link.min_delay());
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            cns[i]->start(engine, static_cast<ComponentId>(i), now_, nodes_[i].next_phase, until[i], mode);

        const SimTime horizon =
            cfg_.horizon_us > 0.0 ? now_ + SimTime::from_ns(cfg_.horizon_us * 1000.0) : SimTime::max();
        const auto wall0 = std::chrono::steady_clock::now();
        const SimTime last = engine.run_epochs(SyncConfig{cfg_.lookahead(), cfg_.threads}, horizon);
        const auto wall1 = std::chrono::steady_clock::now();

        stats::StatSnapshot snap;
        snap.run_id = run_id;
        snap.start = now_;
        snap.threads = cfg_.threads;
        snap.events = engine.delivered_events();
        snap.wallclock_s = std::chrono::duration<double>(wall1 - wall0).count();
        snap.completed = true;
        SimTime end = now_;
        for (auto *cn : cns)
        {
            if (!cn->finished())
                snap.completed = false;
            else
                end = max(end, cn->finish_time());
        }
        if (!snap.completed)
            end = max(end, horizon == SimTime::max() ? last : horizon);
        snap.end = end;

        if (remote != nullptr)
        {
            for (std::uint32_t ch = 0; ch < remote->controller().channels(); ++ch)
                snap.remote_channels.push_back(remote->controller().meter(ch));
            for (const auto &[key, bytes] : remote->ingress())
                snap.xbar_ingress += bytes;
        }

        for (std::size_t i = 0; i < n; ++i)
        {
            NodeRuntime &rt = nodes_[i];
            const node::ComputeNode &cn = *cns[i];
            const HostId host = static_cast<HostId>(i);
            const std::size_t first = rt.next_phase;
            const auto &records = cn.phase_records();
            rt.next_phase = first + records.size();

            stats::NodeSnapshot ns;
            ns.host = host;
            ns.arch_profile = cfg_.nodes[i].node.arch_profile;
            ns.workload = rt.workload->kind();
            ns.max_outstanding = cn.max_outstanding();
            if (const auto *ep = cn.endpoint())
            {
                for (const auto &[tag, m] : ep->meters())
                    snap.link_bytes += m.bytes;
            }
            for (std::size_t j = 0; j < records.size(); ++j)
            {
                const node::PhaseRecord &rec = records[j];
                if (!rec.roi)
                    continue;
                const stats::Attribution key{host, rec.tag};
                stats::RoiSnapshot roi;
                roi.label = rec.label;
                roi.tag = rec.tag;
                roi.begin = rec.begin;
                roi.end = rec.end;
                roi.cycle = cfg_.nodes[i].node.cycle();
                roi.core_retired = rec.retired;
                roi.local_ops = rec.mem_ops[static_cast<std::size_t>(fabric::Region::Local)];
                roi.remote_ops = rec.mem_ops[static_cast<std::size_t>(fabric::Region::Remote)];
                roi.local_controller = lookup(cn.local_controller().attributed(), key);
                if (remote != nullptr)
                {
                    roi.remote_controller = lookup(remote->controller().attributed(), key);
                    roi.xbar_ingress = lookup(remote->ingress(), key);
                    roi.link_egress = lookup(remote->egress(), key);
                }
                if (const auto *ep = cn.endpoint())
                    roi.link = lookup(ep->meters(), rec.tag);
                for (std::size_t l = 0; l < 3; ++l)
                    roi.caches[l] = stats::CacheCounters{rec.caches[l].hits, rec.caches[l].misses};
                roi.prefetches = rec.prefetches;
                roi.miss_latency = rec.miss_latency;
                roi.reported_bytes = rt.workload->reported_bytes(first + j);
                ns.rois.push_back(std::move(roi));
            }
            if (rt.next_phase == rt.workload->phases().size() && rt.workload->first_roi() < rt.next_phase)
                ns.results = rt.workload->results();
            snap.nodes.push_back(std::move(ns));
        }
        now_ = end;
        return snap;
    }

} // namespace cxlsim::lifecycle

#include "cxlsim/workloads/graph.hpp"

#include "cxlsim/errors.hpp"

#include <cstring>

namespace cxlsim::workloads
{
    using node::MemOp;
    using node::OpStream;

    Csr build_csr(std::uint64_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>> &edge_list)
    {
        Csr g;
        g.offsets.assign(n + 1, 0);
        for (const auto &[u, v] : edge_list)
        {
            if (u >= n || v >= n)
                throw InvalidArgument("edge endpoint out of range");
            ++g.offsets[u + 1];
        }
        for (std::uint64_t u = 0; u < n; ++u)
            g.offsets[u + 1] += g.offsets[u];
        g.edges.resize(edge_list.size());
        std::vector<std::uint64_t> fill(g.offsets.begin(), g.offsets.end() - 1);
        for (const auto &[u, v] : edge_list)
            g.edges[fill[u]++] = v;
        return g;
    }

    Csr generate_graph(std::uint64_t seed, std::uint64_t n, std::uint64_t m)
    {
        if (n == 0 || n > kUnreached)
            throw InvalidArgument("graph needs 1 .. 2^32-1 vertices");
        std::seed_seq seq{seed, std::uint64_t{0x67a9}};
        std::mt19937_64 rng(seq);
        std::vector<std::pair<std::uint32_t, std::uint32_t>> list;
        list.reserve(m);
        for (std::uint64_t i = 0; i < m; ++i)
        {
            const auto u = static_cast<std::uint32_t>(rng() % n);
            const auto v = static_cast<std::uint32_t>(rng() % n);
            list.emplace_back(u, v);
        }
        return build_csr(n, list);
    }

    CsrLayout csr_layout(std::uint64_t n, std::uint64_t m)
    {
        auto align = [](std::uint64_t x) { return (x + kLineBytes - 1) / kLineBytes * kLineBytes; };
        CsrLayout l;
        l.offsets_offset = 0;
        l.edges_offset = align((n + 1) * 8);
        l.bytes = l.edges_offset + align(m * 4);
        return l;
    }

    std::string to_string(GraphKernel k) { return k == GraphKernel::Bfs ? "BFS" : "PageRank"; }

    GraphKernel graph_kernel_from_string(const std::string &s)
    {
        if (s == "BFS")
            return GraphKernel::Bfs;
        if (s == "PageRank")
            return GraphKernel::PageRank;
        throw InvalidArgument("unknown graph kernel '" + s + "' (expected BFS or PageRank)");
    }

    void GraphSpec::validate() const
    {
        if (vertices == 0 || vertices >= kUnreached)
            throw InvalidArgument("graph.vertices must be in [1, 2^32-1)");
        if (bfs_source >= vertices)
            throw InvalidArgument("graph.bfs_source must be < graph.vertices");
        if (pagerank_iterations == 0)
            throw InvalidArgument("graph.pagerank_iterations must be >= 1");
        if (!(damping > 0.0 && damping < 1.0))
            throw InvalidArgument("graph.damping must be in (0, 1)");
        if (kernels.empty())
            throw InvalidArgument("graph.kernels must list at least one kernel");
    }

    namespace
    {
        /// Streams the CSR into memory at `base` (functional stores plus their timing ops).
        OpStream write_csr(fabric::HostMemory &m, const GraphSpec &spec, std::uint64_t base)
        {
            const Csr g = generate_graph(spec.seed, spec.vertices, spec.edges);
            const CsrLayout l = csr_layout(g.n(), g.m());
            for (std::uint64_t u = 0; u <= g.n(); ++u)
            {
                const std::uint64_t addr = base + l.offsets_offset + 8 * u;
                m.store<std::uint64_t>(addr, g.offsets[u]);
                co_yield MemOp::store(addr);
            }
            for (std::uint64_t e = 0; e < g.m(); ++e)
            {
                const std::uint64_t addr = base + l.edges_offset + 4 * e;
                m.store<std::uint32_t>(addr, g.edges[e]);
                co_yield MemOp::store(addr, 4);
            }
        }
    } // namespace

    GraphWriterWorkload::GraphWriterWorkload(const GraphSpec &spec) : spec_(spec) { spec_.validate(); }

    void GraphWriterWorkload::setup(SetupContext &ctx)
    {
        if (ctx.shared_vbase == 0)
            throw RemoteUnbound("graph writer has no shared segment");
        if (ctx.shared_access != fabric::Access::ReadWrite)
            throw ReadOnlyViolation("graph writer holds a read-only mapping of the shared segment");
        if (csr_layout(spec_.vertices, spec_.edges).bytes > ctx.shared_bytes)
            throw CapacityExceeded("graph of " + std::to_string(csr_layout(spec_.vertices, spec_.edges).bytes) +
                                   " bytes does not fit the " + std::to_string(ctx.shared_bytes) +
                                   "-byte shared segment");
        base_ = ctx.shared_vbase;
    }

    void GraphWriterWorkload::restore(const std::vector<std::uint64_t> &state)
    {
        if (state.size() != 1)
            throw CorruptCheckpoint("graph writer state must hold 1 word");
        base_ = state[0];
    }

    OpStream GraphWriterWorkload::stream(std::size_t, std::uint32_t core, std::uint32_t)
    {
        if (core != 0)
            return {};
        return write_csr(mem(), spec_, base_);
    }

    GraphReaderWorkload::GraphReaderWorkload(const GraphSpec &spec, const fabric::PagePolicy &scratch_policy,
                                             bool private_graph)
        : spec_(spec), scratch_policy_(scratch_policy), private_graph_(private_graph)
    {
        spec_.validate();
        scratch_policy_.validate();
    }

    void GraphReaderWorkload::setup(SetupContext &ctx)
    {
        const std::uint64_t n = spec_.vertices;
        if (private_graph_)
        {
            graph_ = ctx.mem.allocate(csr_layout(n, spec_.edges).bytes, scratch_policy_, &ctx.rng).vbase;
        }
        else
        {
            if (ctx.shared_vbase == 0)
                throw RemoteUnbound("graph reader has no shared segment");
            if (csr_layout(n, spec_.edges).bytes > ctx.shared_bytes)
                throw CapacityExceeded("graph does not fit the shared segment");
            graph_ = ctx.shared_vbase;
        }
        dist_ = ctx.mem.allocate(n * 4, scratch_policy_, &ctx.rng).vbase;
        queue_ = ctx.mem.allocate(n * 4, scratch_policy_, &ctx.rng).vbase;
        rank_ = ctx.mem.allocate(n * 8, scratch_policy_, &ctx.rng).vbase;
        next_ = ctx.mem.allocate(n * 8, scratch_policy_, &ctx.rng).vbase;
    }

    void GraphReaderWorkload::restore(const std::vector<std::uint64_t> &state)
    {
        if (state.size() != 5)
            throw CorruptCheckpoint("graph reader state must hold 5 words");
        graph_ = state[0];
        dist_ = state[1];
        queue_ = state[2];
        rank_ = state[3];
        next_ = state[4];
    }

    std::vector<node::PhaseInfo> GraphReaderWorkload::phases() const
    {
        std::vector<node::PhaseInfo> out{{"init", false}};
        for (auto k : spec_.kernels)
            out.push_back({to_string(k), true});
        return out;
    }

    OpStream GraphReaderWorkload::stream(std::size_t phase, std::uint32_t core, std::uint32_t)
    {
        if (core != 0)
            return {};
        if (phase == 0)
            return private_graph_ ? write_csr(mem(), spec_, graph_) : OpStream{};
        return spec_.kernels.at(phase - 1) == GraphKernel::Bfs ? bfs_stream() : pagerank_stream();
    }

    OpStream GraphReaderWorkload::bfs_stream()
    {
        auto &m = mem();
        const std::uint64_t n = spec_.vertices;
        const CsrLayout l = csr_layout(n, spec_.edges);
        const std::uint64_t off = graph_ + l.offsets_offset;
        const std::uint64_t edg = graph_ + l.edges_offset;

        for (std::uint64_t v = 0; v < n; ++v)
        {
            m.store<std::uint32_t>(dist_ + 4 * v, kUnreached);
            co_yield MemOp::store(dist_ + 4 * v, 4);
        }
        const std::uint32_t src = spec_.bfs_source;
        m.store<std::uint32_t>(dist_ + 4 * src, 0);
        co_yield MemOp::store(dist_ + 4 * src, 4);
        m.store<std::uint32_t>(queue_, src);
        co_yield MemOp::store(queue_, 4);
        std::uint64_t head = 0, tail = 1;
        while (head < tail)
        {
            const std::uint32_t u = m.load<std::uint32_t>(queue_ + 4 * head);
            co_yield MemOp::load(queue_ + 4 * head, 4, true);
            ++head;
            const std::uint32_t du = m.load<std::uint32_t>(dist_ + 4 * u);
            co_yield MemOp::load(dist_ + 4 * u, 4);
            const std::uint64_t b = m.load<std::uint64_t>(off + 8 * u);
            co_yield MemOp::load(off + 8 * u, 8, true);
            const std::uint64_t e = m.load<std::uint64_t>(off + 8 * (u + 1));
            co_yield MemOp::load(off + 8 * (u + 1), 8, true);
            for (std::uint64_t i = b; i < e; ++i)
            {
                const std::uint32_t v = m.load<std::uint32_t>(edg + 4 * i);
                co_yield MemOp::load(edg + 4 * i, 4, true);
                const std::uint32_t dv = m.load<std::uint32_t>(dist_ + 4 * v);
                co_yield MemOp::load(dist_ + 4 * v, 4, true).after(1);
                if (dv == kUnreached)
                {
                    m.store<std::uint32_t>(dist_ + 4 * v, du + 1);
                    co_yield MemOp::store(dist_ + 4 * v, 4);
                    m.store<std::uint32_t>(queue_ + 4 * tail, v);
                    co_yield MemOp::store(queue_ + 4 * tail, 4);
                    ++tail;
                }
            }
        }
    }

    OpStream GraphReaderWorkload::pagerank_stream()
    {
        auto &m = mem();
        const std::uint64_t n = spec_.vertices;
        const double d = spec_.damping;
        const double nd = static_cast<double>(n);
        const CsrLayout l = csr_layout(n, spec_.edges);
        const std::uint64_t off = graph_ + l.offsets_offset;
        const std::uint64_t edg = graph_ + l.edges_offset;

        for (std::uint64_t v = 0; v < n; ++v)
        {
            m.store<double>(rank_ + 8 * v, 1.0 / nd);
            co_yield MemOp::store(rank_ + 8 * v);
        }
        for (std::uint32_t it = 0; it < spec_.pagerank_iterations; ++it)
        {
            for (std::uint64_t v = 0; v < n; ++v)
            {
                m.store<double>(next_ + 8 * v, 0.0);
                co_yield MemOp::store(next_ + 8 * v);
            }
            double dangling = 0.0;
            for (std::uint64_t u = 0; u < n; ++u)
            {
                const double r = m.load<double>(rank_ + 8 * u);
                co_yield MemOp::load(rank_ + 8 * u);
                const std::uint64_t b = m.load<std::uint64_t>(off + 8 * u);
                co_yield MemOp::load(off + 8 * u);
                const std::uint64_t e = m.load<std::uint64_t>(off + 8 * (u + 1));
                co_yield MemOp::load(off + 8 * (u + 1));
                if (b == e)
                {
                    dangling += r;
                    continue;
                }
                const double share = r / static_cast<double>(e - b);
                for (std::uint64_t i = b; i < e; ++i)
                {
                    const std::uint32_t v = m.load<std::uint32_t>(edg + 4 * i);
                    co_yield MemOp::load(edg + 4 * i, 4, true);
                    const double x = m.load<double>(next_ + 8 * v);
                    co_yield MemOp::load(next_ + 8 * v);
                    m.store<double>(next_ + 8 * v, x + share);
                    co_yield MemOp::store(next_ + 8 * v).after(1);
                }
            }
            for (std::uint64_t v = 0; v < n; ++v)
            {
                const double x = m.load<double>(next_ + 8 * v);
                co_yield MemOp::load(next_ + 8 * v);
                m.store<double>(rank_ + 8 * v, (1.0 - d) / nd + d * (x + dangling / nd));
                co_yield MemOp::store(rank_ + 8 * v).after(2);
            }
        }
    }

    std::vector<std::uint32_t> GraphReaderWorkload::distances() const
    {
        std::vector<std::uint32_t> out(spec_.vertices);
        for (std::uint64_t v = 0; v < out.size(); ++v)
            out[v] = mem().load<std::uint32_t>(dist_ + 4 * v);
        return out;
    }

    std::vector<double> GraphReaderWorkload::ranks() const
    {
        std::vector<double> out(spec_.vertices);
        for (std::uint64_t v = 0; v < out.size(); ++v)
            out[v] = mem().load<double>(rank_ + 8 * v);
        return out;
    }

    std::map<std::string, std::string> GraphReaderWorkload::results() const
    {
        std::map<std::string, std::string> r;
        for (auto k : spec_.kernels)
        {
            if (k == GraphKernel::Bfs)
                r["bfs_digest"] = digest_distances(distances());
            else
                r["pagerank_digest"] = digest_ranks(ranks());
        }
        return r;
    }

    std::vector<std::uint32_t> reference_bfs(const Csr &g, std::uint32_t source)
    {
        std::vector<std::uint32_t> dist(g.n(), kUnreached);
        std::vector<std::uint32_t> queue{source};
        dist.at(source) = 0;
        for (std::size_t head = 0; head < queue.size(); ++head)
        {
            const std::uint32_t u = queue[head];
            for (std::uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i)
            {
                const std::uint32_t v = g.edges[i];
                if (dist[v] == kUnreached)
                {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        return dist;
    }

    std::vector<double> reference_pagerank(const Csr &g, std::uint32_t iterations, double damping)
    {
        const std::uint64_t n = g.n();
        const double nd = static_cast<double>(n);
        std::vector<double> rank(n, 1.0 / nd), next(n);
        for (std::uint32_t it = 0; it < iterations; ++it)
        {
            std::fill(next.begin(), next.end(), 0.0);
            double dangling = 0.0;
            for (std::uint64_t u = 0; u < n; ++u)
            {
                const std::uint64_t deg = g.offsets[u + 1] - g.offsets[u];
                if (deg == 0)
                {
                    dangling += rank[u];
                    continue;
                }
                const double share = rank[u] / static_cast<double>(deg);
                for (std::uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i)
                    next[g.edges[i]] += share;
            }
            for (std::uint64_t v = 0; v < n; ++v)
                rank[v] = (1.0 - damping) / nd + damping * (next[v] + dangling / nd);
        }
        return rank;
    }

    std::string digest_distances(const std::vector<std::uint32_t> &d)
    {
        return hex64(fnv1a(d.data(), d.size() * sizeof(std::uint32_t)));
    }

    std::string digest_ranks(const std::vector<double> &r)
    {
        return hex64(fnv1a(r.data(), r.size() * sizeof(double)));
    }

} // namespace cxlsim::workloads

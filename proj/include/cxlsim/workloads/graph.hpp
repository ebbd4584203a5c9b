#pragma once

#include "cxlsim/workloads/workload.hpp"

namespace cxlsim::workloads
{
    /// Compressed sparse row graph: out-edges of u are edges[offsets[u] .. offsets[u+1]).
    struct Csr
    {
        std::vector<std::uint64_t> offsets;
        std::vector<std::uint32_t> edges;

        std::uint64_t n() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
        std::uint64_t m() const noexcept { return edges.size(); }
        bool operator==(const Csr &) const = default;
    };

    /// Builds a CSR from an edge list; out-edges keep their list order.
    Csr build_csr(std::uint64_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>> &edge_list);
    /// Seeded uniform random graph: m edges with independently uniform endpoints.
    Csr generate_graph(std::uint64_t seed, std::uint64_t n, std::uint64_t m);

    /// Byte layout of a CSR inside a segment: offsets (u64) then edges (u32), line aligned.
    struct CsrLayout
    {
        std::uint64_t offsets_offset = 0;
        std::uint64_t edges_offset = 0;
        std::uint64_t bytes = 0;
    };
    CsrLayout csr_layout(std::uint64_t n, std::uint64_t m);

    enum class GraphKernel : std::uint8_t
    {
        Bfs,
        PageRank,
    };
    std::string to_string(GraphKernel k);
    GraphKernel graph_kernel_from_string(const std::string &s);

    struct GraphSpec
    {
        std::uint64_t vertices = 4096;
        std::uint64_t edges = 32768;
        std::uint64_t seed = 7;
        std::uint32_t bfs_source = 0;
        std::uint32_t pagerank_iterations = 20;
        double damping = 0.85;
        std::vector<GraphKernel> kernels{GraphKernel::Bfs, GraphKernel::PageRank};

        void validate() const;
        bool operator==(const GraphSpec &) const = default;
    };

    inline constexpr std::uint32_t kUnreached = 0xFFFFFFFFu;

    /// Writes the seeded CSR into the shared segment during its init phase.
    class GraphWriterWorkload final : public Workload
    {
    public:
        explicit GraphWriterWorkload(const GraphSpec &spec);

        std::string kind() const override { return "graph-writer"; }
        void setup(SetupContext &ctx) override;
        std::vector<std::uint64_t> state() const override { return {base_}; }
        void restore(const std::vector<std::uint64_t> &state) override;
        std::vector<node::PhaseInfo> phases() const override { return {{"build", false}}; }
        node::OpStream stream(std::size_t phase, std::uint32_t core, std::uint32_t cores) override;

    private:
        node::OpStream build_stream();

        GraphSpec spec_;
        std::uint64_t base_ = 0;
    };

    /// Runs BFS and/or PageRank over the shared CSR, with its own scratch arrays allocated
    /// under `scratch_policy`. The graph may instead live in a private copy (`private_graph`),
    /// which the reader then builds itself.
    class GraphReaderWorkload final : public Workload
    {
    public:
        GraphReaderWorkload(const GraphSpec &spec, const fabric::PagePolicy &scratch_policy, bool private_graph);

        std::string kind() const override { return private_graph_ ? "graph-local" : "graph-reader"; }
        void setup(SetupContext &ctx) override;
        std::vector<std::uint64_t> state() const override { return {graph_, dist_, queue_, rank_, next_}; }
        void restore(const std::vector<std::uint64_t> &state) override;
        std::vector<node::PhaseInfo> phases() const override;
        node::OpStream stream(std::size_t phase, std::uint32_t core, std::uint32_t cores) override;
        std::map<std::string, std::string> results() const override;

        std::vector<std::uint32_t> distances() const;
        std::vector<double> ranks() const;
        std::uint64_t graph_base() const noexcept { return graph_; }

    private:
        node::OpStream bfs_stream();
        node::OpStream pagerank_stream();

        GraphSpec spec_;
        fabric::PagePolicy scratch_policy_;
        bool private_graph_;
        std::uint64_t graph_ = 0, dist_ = 0, queue_ = 0, rank_ = 0, next_ = 0;
    };

    /// Independent references used to check simulated results.
    std::vector<std::uint32_t> reference_bfs(const Csr &g, std::uint32_t source);
    std::vector<double> reference_pagerank(const Csr &g, std::uint32_t iterations, double damping);
    std::string digest_distances(const std::vector<std::uint32_t> &d);
    std::string digest_ranks(const std::vector<double> &r);

} // namespace cxlsim::workloads

#pragma once

#include "cxlsim/fabric/page_map.hpp"
#include "cxlsim/memnet/dram.hpp"
#include "cxlsim/memnet/link.hpp"
#include "cxlsim/node/cache.hpp"
#include "cxlsim/node/ops.hpp"
#include "cxlsim/sim/engine.hpp"
#include "cxlsim/stats/meters.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace cxlsim::node
{
    struct NodeConfig
    {
        std::uint32_t cores = 8;
        double freq_ghz = 4.0;
        CacheGeometry l1d{32 * 1024, 8, 4};
        CacheGeometry l2{512 * 1024, 8, 12};
        CacheGeometry l3{8 * 1024 * 1024, 16, 36};
        std::uint32_t outstanding_misses = 16; // per core: L1 MSHRs plus streaming writes
        std::uint32_t local_channels = 1;
        std::uint64_t local_capacity = 16 * 1024 * 1024;
        std::string arch_profile = "arm";
        std::uint32_t issue_cycles = 1;
        bool prefetch = true;
        std::uint32_t prefetch_degree = 2;
        std::uint32_t prefetch_queue = 32; // in-flight L2 fills per core
        memnet::DramTiming local_dram{};

        void validate() const;
        SimTime cycle() const { return SimTime::from_ns(1.0 / freq_ghz); }
        bool operator==(const NodeConfig &) const = default;
    };

    /// Issue cost and outstanding-miss limit implied by a named architecture profile.
    struct ArchProfile
    {
        std::uint32_t issue_cycles;
        std::uint32_t outstanding_misses;
    };
    /// Known labels: "arm", "riscv", "x86". Throws InvalidArgument for others.
    ArchProfile arch_profile(const std::string &label);

    struct PhaseInfo
    {
        std::string label;
        bool roi = false;
    };

    /// A node's workload: an ordered list of phases, each executed by every core from its own
    /// op stream. Streams apply their data effects functionally as ops are produced.
    class Program
    {
    public:
        virtual ~Program() = default;
        virtual std::vector<PhaseInfo> phases() const = 0;
        virtual OpStream stream(std::size_t phase, std::uint32_t core, std::uint32_t cores) = 0;
    };

    enum class Mode : std::uint8_t
    {
        Functional, // zero-latency memory, no caches: every op costs its issue cycles
        Timing,
    };

    enum ServedBy : std::size_t
    {
        kServedL1,
        kServedL2,
        kServedL3,
        kServedMemory,
        kServedLevels
    };

    struct LevelCounters
    {
        std::uint64_t hits = 0;
        std::uint64_t misses = 0;
    };

    struct PhaseRecord
    {
        std::string label;
        bool roi = false;
        std::uint32_t tag = 0;
        SimTime begin{};
        SimTime end{};
        std::vector<std::uint64_t> retired; // per core, includes compute ops
        std::array<std::uint64_t, 2> mem_ops{0, 0}; // by fabric::Region
        std::array<LevelCounters, 3> caches{};
        std::uint64_t prefetches = 0;
        stats::LatencyHistogram miss_latency;
        // Smallest latency observed per serving level (ps); 0 when unused.
        std::array<std::uint64_t, kServedLevels> min_latency{};

        std::uint64_t cycles(SimTime cycle) const { return (end - begin).ps() / cycle.ps(); }
        std::uint64_t total_retired() const;
        std::uint64_t total_mem_ops() const { return mem_ops[0] + mem_ops[1]; }
    };

    /// A compute node: cores, private L1/L2, shared L3, a local DRAM controller and the host end
    /// of the link to the remote memory node.
    class ComputeNode final : public Component
    {
    public:
        static constexpr std::uint32_t kPhaseStart = 10;
        static constexpr std::uint32_t kCoreWake = 11;
        static constexpr std::uint32_t kFill = 12;
        static constexpr std::uint32_t kComplete = 13;
        static constexpr std::uint32_t kMemIssue = 14;
        static constexpr std::uint32_t kLocalKick = 15;
        static constexpr std::uint32_t kLocalDone = 16;

        /// `remote` is the remote memory component (absent for a node without a link).
        ComputeNode(HostId host, const NodeConfig &cfg, const fabric::PageMap &map, Program &program,
                    std::optional<ComponentId> remote, const memnet::LinkConfig &link, std::uint64_t device_base);

        /// Arms the node to run phases [first, last) starting at `at`.
        void start(Engine &engine, ComponentId self, SimTime at, std::size_t first, std::size_t last, Mode mode);

        void handle(const Event &ev, Context &ctx) override;

        HostId host() const noexcept { return host_; }
        const NodeConfig &config() const noexcept { return cfg_; }
        bool finished() const noexcept { return finished_; }
        SimTime finish_time() const noexcept { return finish_time_; }
        const std::vector<PhaseRecord> &phase_records() const noexcept { return records_; }
        const memnet::DramController &local_controller() const noexcept { return local_; }
        const memnet::LinkEndpoint *endpoint() const noexcept { return endpoint_ ? &*endpoint_ : nullptr; }
        /// Largest number of outstanding misses any core ever held.
        std::uint32_t max_outstanding() const noexcept { return max_outstanding_; }

    private:
        static constexpr std::uint64_t kNoLine = ~std::uint64_t{0};

        struct MissEntry
        {
            std::uint32_t loads = 0;
            std::uint32_t stores = 0;
            SimTime issued{};
            SimTime floor{};
            ServedBy level = kServedL2;
        };

        struct Core
        {
            Core(const NodeConfig &cfg) : l1(cfg.l1d), l2(cfg.l2) {}

            Cache l1;
            Cache l2;
            OpStream stream;
            MemOp op{};
            bool has_op = false;
            bool exhausted = true;
            bool done = true;
            bool blocked = false;
            std::uint64_t blocked_line = 0;
            bool waiting_slot = false;
            bool wake_pending = false;
            SimTime ready{};
            std::unordered_map<std::uint64_t, MissEntry> mshr;
            std::unordered_set<std::uint64_t> l2_pending;
            std::uint32_t stream_writes = 0;
            std::uint64_t wc_line = kNoLine;
            std::uint32_t wc_bytes = 0;
            bool wc_flush = false;
            std::uint64_t retired = 0;
            std::uint64_t tlb_vpage = kNoLine;
            fabric::Translation tlb{};
        };

        void start_phase(std::size_t phase, Context &ctx);
        void run_functional(Context &ctx);
        void run_core(std::uint32_t c, Context &ctx);
        void core_done(std::uint32_t c, Context &ctx);
        void wake(std::uint32_t c, SimTime at, Context &ctx);
        fabric::Translation translate(Core &k, std::uint64_t vaddr);
        std::uint32_t slots_used(const Core &k) const
        {
            return static_cast<std::uint32_t>(k.mshr.size()) + k.stream_writes;
        }
        void note_slots(const Core &k);

        void start_miss(std::uint32_t c, std::uint64_t line, MissEntry &entry, Context &ctx);
        void prefetch_after(std::uint32_t c, std::uint64_t line, SimTime at, Context &ctx);
        void fetch_from_l3(std::uint32_t c, std::uint64_t line, SimTime at, Context &ctx);
        void fill_l2(std::uint32_t c, std::uint64_t line, Context &ctx);
        void complete_l1(std::uint32_t c, std::uint64_t line, Context &ctx);
        void memory_fill(std::uint64_t line, Context &ctx);
        void emit_stream_write(std::uint32_t c, Context &ctx);
        void evict_to_l2(Core &k, const std::optional<Cache::Victim> &v, Context &ctx);
        void evict_to_l3(const std::optional<Cache::Victim> &v, Context &ctx);
        void writeback(std::uint64_t line, Context &ctx);

        MemRequest make_request(std::uint64_t line, AccessKind kind, RequestSource source, std::uint32_t core);
        void issue_memory(const MemRequest &req, Context &ctx);
        void on_memory_response(const MemRequest &req, Context &ctx);
        fabric::Region region_of(std::uint64_t paddr) const
        {
            return paddr >= device_base_ ? fabric::Region::Remote : fabric::Region::Local;
        }
        SimTime cycles(std::uint64_t n) const { return cycle_ * n; }

        HostId host_;
        NodeConfig cfg_;
        const fabric::PageMap *map_;
        Program *program_;
        std::vector<PhaseInfo> phases_;
        std::uint64_t device_base_;
        SimTime cycle_;
        SimTime lat_l1_, lat_l12_, lat_l123_, lat_l2_, lat_l23_;

        std::vector<Core> cores_;
        Cache l3_;
        std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> inflight_;
        memnet::DramController local_;
        std::optional<memnet::LinkEndpoint> endpoint_;

        Mode mode_ = Mode::Timing;
        std::size_t phase_ = 0;
        std::size_t last_phase_ = 0;
        std::uint32_t tag_ = 0;
        std::uint32_t cores_left_ = 0;
        SimTime phase_end_{};
        bool finished_ = true;
        SimTime finish_time_{};
        std::uint64_t next_request_id_ = 0;
        std::uint32_t max_outstanding_ = 0;

        PhaseRecord current_{};
        std::vector<PhaseRecord> records_;
    };

} // namespace cxlsim::node

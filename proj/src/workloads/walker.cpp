#include "cxlsim/workloads/walker.hpp"

#include "cxlsim/errors.hpp"

#include <numeric>

namespace cxlsim::workloads
{
    using node::MemOp;
    using node::OpStream;

    std::string to_string(WalkPattern p)
    {
        switch (p)
        {
        case WalkPattern::Sequential:
            return "sequential";
        case WalkPattern::Strided:
            return "strided";
        case WalkPattern::Random:
            return "random";
        case WalkPattern::PointerChase:
            return "pointer-chase";
        }
        return "?";
    }

    WalkPattern walk_pattern_from_string(const std::string &s)
    {
        for (auto p : {WalkPattern::Sequential, WalkPattern::Strided, WalkPattern::Random, WalkPattern::PointerChase})
        {
            if (to_string(p) == s)
                return p;
        }
        throw InvalidArgument("unknown walker pattern '" + s + "' (expected sequential, strided, random or pointer-chase)");
    }

    void WalkerSpec::validate() const
    {
        if (footprint < kPageBytes || footprint % kPageBytes != 0)
            throw InvalidArgument("walker.footprint must be a positive multiple of 4 KiB");
        if (pattern == WalkPattern::Strided && stride_lines == 0)
            throw InvalidArgument("walker.stride_lines must be >= 1");
        if (iterations == 0)
            throw InvalidArgument("walker.iterations must be >= 1");
    }

    namespace
    {
        std::mt19937_64 core_rng(std::uint64_t seed, std::uint32_t core)
        {
            std::seed_seq seq{seed, std::uint64_t{core}, std::uint64_t{0x57a1c3}};
            return std::mt19937_64(seq);
        }

        /// Produces the line indices of non-chasing patterns for one core.
        class Cursor
        {
        public:
            Cursor(const WalkerSpec &spec, std::uint32_t core, std::uint32_t cores)
                : spec_(spec), rng_(core_rng(spec.seed, core))
            {
                const auto [b, e] = core_chunk(spec.lines(), core, cores, kLineBytes);
                begin_ = b;
                len_ = e - b;
                total_ = len_ * spec.iterations;
            }
            std::uint64_t count() const noexcept { return total_; }
            std::uint64_t begin() const noexcept { return begin_; }
            std::uint64_t at(std::uint64_t j)
            {
                switch (spec_.pattern)
                {
                case WalkPattern::Sequential:
                    return begin_ + j % len_;
                case WalkPattern::Strided:
                    return begin_ + (j % len_) * spec_.stride_lines % len_;
                case WalkPattern::Random:
                    return rng_() % spec_.lines();
                case WalkPattern::PointerChase:
                    break;
                }
                throw InvalidArgument("pointer chase has no index cursor");
            }

        private:
            const WalkerSpec &spec_;
            std::mt19937_64 rng_;
            std::uint64_t begin_ = 0;
            std::uint64_t len_ = 0;
            std::uint64_t total_ = 0;
        };
    } // namespace

    std::vector<std::uint64_t> chase_permutation(std::uint64_t lines, std::uint64_t seed)
    {
        std::vector<std::uint64_t> order(lines);
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng = core_rng(seed, 0xFFFFFFFFu);
        // Sattolo's algorithm: a uniformly random single cycle.
        for (std::uint64_t i = lines - 1; i > 0; --i)
        {
            const std::uint64_t j = rng() % i;
            std::swap(order[i], order[j]);
        }
        std::vector<std::uint64_t> next(lines);
        for (std::uint64_t i = 0; i < lines; ++i)
            next[order[i]] = order[(i + 1) % lines];
        return next;
    }

    std::vector<std::uint64_t> walker_sequence(const WalkerSpec &spec, std::uint32_t core, std::uint32_t cores)
    {
        Cursor cur(spec, core, cores);
        std::vector<std::uint64_t> out;
        out.reserve(cur.count());
        if (spec.pattern == WalkPattern::PointerChase)
        {
            const auto next = chase_permutation(spec.lines(), spec.seed);
            std::uint64_t at = cur.begin();
            for (std::uint64_t j = 0; j < cur.count(); ++j)
            {
                out.push_back(at);
                at = next[at];
            }
            return out;
        }
        for (std::uint64_t j = 0; j < cur.count(); ++j)
            out.push_back(cur.at(j));
        return out;
    }

    WalkerWorkload::WalkerWorkload(const WalkerSpec &spec, const fabric::PagePolicy &policy)
        : spec_(spec), policy_(policy)
    {
        spec_.validate();
        policy_.validate();
    }

    void WalkerWorkload::setup(SetupContext &ctx) { base_ = ctx.mem.allocate(spec_.footprint, policy_, &ctx.rng).vbase; }

    void WalkerWorkload::restore(const std::vector<std::uint64_t> &state)
    {
        if (state.size() != 1)
            throw CorruptCheckpoint("walker workload state must hold 1 word");
        base_ = state[0];
    }

    OpStream WalkerWorkload::stream(std::size_t phase, std::uint32_t core, std::uint32_t cores)
    {
        return phase == 0 ? init_stream(core, cores) : walk_stream(core, cores);
    }

    OpStream WalkerWorkload::init_stream(std::uint32_t core, std::uint32_t cores)
    {
        auto &m = mem();
        const auto [begin, end] = core_chunk(spec_.lines(), core, cores, kLineBytes);
        std::vector<std::uint64_t> next;
        if (spec_.pattern == WalkPattern::PointerChase)
            next = chase_permutation(spec_.lines(), spec_.seed);
        for (std::uint64_t line = begin; line < end; ++line)
        {
            const std::uint64_t addr = base_ + line * kLineBytes;
            const std::uint64_t value = next.empty() ? line : base_ + next[line] * kLineBytes;
            m.store<std::uint64_t>(addr, value);
            co_yield MemOp::store(addr);
        }
    }

    OpStream WalkerWorkload::walk_stream(std::uint32_t core, std::uint32_t cores)
    {
        auto &m = mem();
        Cursor cur(spec_, core, cores);
        if (spec_.pattern == WalkPattern::PointerChase)
        {
            std::uint64_t addr = base_ + cur.begin() * kLineBytes;
            for (std::uint64_t j = 0; j < cur.count(); ++j)
            {
                const std::uint64_t next = m.load<std::uint64_t>(addr);
                checksum_ += next;
                co_yield MemOp::load(addr, 8, true).after(spec_.compute_cost);
                addr = next;
            }
            co_return;
        }
        for (std::uint64_t j = 0; j < cur.count(); ++j)
        {
            const std::uint64_t addr = base_ + cur.at(j) * kLineBytes;
            checksum_ += m.load<std::uint64_t>(addr);
            co_yield MemOp::load(addr).after(spec_.compute_cost);
        }
    }

    std::map<std::string, std::string> WalkerWorkload::results() const
    {
        return {{"checksum", hex64(checksum_)}};
    }

} // namespace cxlsim::workloads

#include "cxlsim/workloads/stream.hpp"

#include "cxlsim/errors.hpp"

namespace cxlsim::workloads
{
    using node::MemOp;
    using node::OpStream;

    std::string to_string(StreamKernel k)
    {
        switch (k)
        {
        case StreamKernel::Copy:
            return "Copy";
        case StreamKernel::Scale:
            return "Scale";
        case StreamKernel::Add:
            return "Add";
        case StreamKernel::Triad:
            return "Triad";
        }
        return "?";
    }

    StreamKernel stream_kernel_from_string(const std::string &s)
    {
        for (auto k : {StreamKernel::Copy, StreamKernel::Scale, StreamKernel::Add, StreamKernel::Triad})
        {
            if (to_string(k) == s)
                return k;
        }
        throw InvalidArgument("unknown STREAM kernel '" + s + "' (expected Copy, Scale, Add or Triad)");
    }

    std::uint64_t stream_bytes_per_element(StreamKernel k)
    {
        return (k == StreamKernel::Copy || k == StreamKernel::Scale) ? 16 : 24;
    }

    void StreamSpec::validate() const
    {
        if (array_bytes < kPageBytes || array_bytes % kPageBytes != 0)
            throw InvalidArgument("stream.array_bytes must be a positive multiple of 4 KiB");
        if (kernels.empty())
            throw InvalidArgument("stream.kernels must list at least one kernel");
    }

    std::array<double, 3> stream_expected(const StreamSpec &spec)
    {
        double a = 1.0, b = 2.0, c = 0.0;
        for (auto k : spec.kernels)
        {
            switch (k)
            {
            case StreamKernel::Copy:
                c = a;
                break;
            case StreamKernel::Scale:
                b = spec.alpha * c;
                break;
            case StreamKernel::Add:
                c = a + b;
                break;
            case StreamKernel::Triad:
                a = b + spec.alpha * c;
                break;
            }
        }
        return {a, b, c};
    }

    StreamWorkload::StreamWorkload(const StreamSpec &spec, const fabric::PagePolicy &policy)
        : spec_(spec), policy_(policy)
    {
        spec_.validate();
        policy_.validate();
    }

    void StreamWorkload::setup(SetupContext &ctx)
    {
        a_ = ctx.mem.allocate(spec_.array_bytes, policy_, &ctx.rng).vbase;
        b_ = ctx.mem.allocate(spec_.array_bytes, policy_, &ctx.rng).vbase;
        c_ = ctx.mem.allocate(spec_.array_bytes, policy_, &ctx.rng).vbase;
    }

    void StreamWorkload::restore(const std::vector<std::uint64_t> &state)
    {
        if (state.size() != 3)
            throw CorruptCheckpoint("stream workload state must hold 3 words");
        a_ = state[0];
        b_ = state[1];
        c_ = state[2];
    }

    std::vector<node::PhaseInfo> StreamWorkload::phases() const
    {
        std::vector<node::PhaseInfo> out{{"init", false}};
        for (auto k : spec_.kernels)
            out.push_back({to_string(k), true});
        return out;
    }

    OpStream StreamWorkload::stream(std::size_t phase, std::uint32_t core, std::uint32_t cores)
    {
        const auto [begin, end] = core_chunk(spec_.elements(), core, cores, 8);
        if (phase == 0)
            return init_stream(begin, end);
        return kernel_stream(spec_.kernels.at(phase - 1), begin, end);
    }

    OpStream StreamWorkload::init_stream(std::uint64_t begin, std::uint64_t end)
    {
        auto &m = mem();
        for (std::uint64_t i = begin; i < end; ++i)
        {
            m.store<double>(a_ + 8 * i, 1.0);
            co_yield MemOp::store(a_ + 8 * i);
            m.store<double>(b_ + 8 * i, 2.0);
            co_yield MemOp::store(b_ + 8 * i);
            m.store<double>(c_ + 8 * i, 0.0);
            co_yield MemOp::store(c_ + 8 * i);
        }
    }

    OpStream StreamWorkload::kernel_stream(StreamKernel k, std::uint64_t begin, std::uint64_t end)
    {
        auto &m = mem();
        const double alpha = spec_.alpha;
        auto put = [&](std::uint64_t addr) {
            return spec_.streaming_stores ? MemOp::stream_store(addr) : MemOp::store(addr);
        };
        for (std::uint64_t i = begin; i < end; ++i)
        {
            const std::uint64_t off = 8 * i;
            switch (k)
            {
            case StreamKernel::Copy:
            {
                const double x = m.load<double>(a_ + off);
                co_yield MemOp::load(a_ + off);
                m.store<double>(c_ + off, x);
                co_yield put(c_ + off);
                break;
            }
            case StreamKernel::Scale:
            {
                const double x = m.load<double>(c_ + off);
                co_yield MemOp::load(c_ + off);
                m.store<double>(b_ + off, alpha * x);
                co_yield put(b_ + off);
                break;
            }
            case StreamKernel::Add:
            {
                const double x = m.load<double>(a_ + off);
                co_yield MemOp::load(a_ + off);
                const double y = m.load<double>(b_ + off);
                co_yield MemOp::load(b_ + off);
                m.store<double>(c_ + off, x + y);
                co_yield put(c_ + off);
                break;
            }
            case StreamKernel::Triad:
            {
                const double x = m.load<double>(b_ + off);
                co_yield MemOp::load(b_ + off);
                const double y = m.load<double>(c_ + off);
                co_yield MemOp::load(c_ + off);
                m.store<double>(a_ + off, x + alpha * y);
                co_yield put(a_ + off);
                break;
            }
            }
        }
    }

    std::uint64_t StreamWorkload::reported_bytes(std::size_t phase) const
    {
        if (phase == 0 || phase > spec_.kernels.size())
            return 0;
        return stream_bytes_per_element(spec_.kernels[phase - 1]) * spec_.elements();
    }

    std::uint64_t StreamWorkload::mismatches() const
    {
        const auto expect = stream_expected(spec_);
        auto &m = mem();
        std::uint64_t bad = 0;
        for (std::uint64_t i = 0; i < spec_.elements(); ++i)
        {
            if (m.load<double>(a_ + 8 * i) != expect[0] || m.load<double>(b_ + 8 * i) != expect[1] ||
                m.load<double>(c_ + 8 * i) != expect[2])
                ++bad;
        }
        return bad;
    }

    std::map<std::string, std::string> StreamWorkload::results() const
    {
        return {{"mismatched_elements", std::to_string(mismatches())}};
    }

} // namespace cxlsim::workloads

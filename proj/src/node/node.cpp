#include "cxlsim/node/node.hpp"

#include "cxlsim/errors.hpp"

#include <algorithm>

namespace cxlsim::node
{
    namespace
    {
        constexpr std::uint64_t line_of(std::uint64_t paddr) { return paddr & ~(kLineBytes - 1); }
        constexpr std::uint64_t page_of(std::uint64_t paddr) { return paddr / kPageBytes; }
    } // namespace

    void NodeConfig::validate() const
    {
        if (cores == 0 || cores > 1024)
            throw InvalidArgument("node.cores must be in [1, 1024]");
        if (!(freq_ghz > 0.0))
            throw InvalidArgument("node.freq_ghz must be > 0");
        l1d.validate("node.l1d");
        l2.validate("node.l2");
        l3.validate("node.l3");
        if (outstanding_misses == 0)
            throw InvalidArgument("node.outstanding_misses must be >= 1");
        if (local_channels == 0)
            throw InvalidArgument("node.local_channels must be >= 1");
        if (local_capacity == 0 || local_capacity % kPageBytes != 0)
            throw InvalidArgument("node.local_capacity must be a positive multiple of 4 KiB");
        if (issue_cycles == 0)
            throw InvalidArgument("node.issue_cycles must be >= 1");
        if (prefetch && (prefetch_degree == 0 || prefetch_queue == 0))
            throw InvalidArgument("node.prefetch_degree and node.prefetch_queue must be >= 1 when prefetch is on");
        local_dram.validate();
    }

    ArchProfile arch_profile(const std::string &label)
    {
        if (label == "arm" || label == "x86")
            return {1, 16};
        if (label == "riscv")
            return {2, 8};
        throw InvalidArgument("unknown arch_profile '" + label + "' (expected arm, riscv or x86)");
    }

    std::uint64_t PhaseRecord::total_retired() const
    {
        std::uint64_t s = 0;
        for (auto r : retired)
            s += r;
        return s;
    }

    ComputeNode::ComputeNode(HostId host, const NodeConfig &cfg, const fabric::PageMap &map, Program &program,
                             std::optional<ComponentId> remote, const memnet::LinkConfig &link,
                             std::uint64_t device_base)
        : host_(host),
          cfg_(cfg),
          map_(&map),
          program_(&program),
          phases_(program.phases()),
          device_base_(device_base),
          cycle_(cfg.cycle()),
          l3_(cfg.l3),
          local_(cfg.local_dram, cfg.local_channels, 0, cfg.local_capacity)
    {
        cfg_.validate();
        if (device_base < cfg.local_capacity)
            throw InvalidArgument("device base must lie above the node's local memory");
        lat_l1_ = cycles(cfg.l1d.hit_latency);
        lat_l2_ = cycles(cfg.l2.hit_latency);
        lat_l12_ = lat_l1_ + lat_l2_;
        lat_l23_ = lat_l2_ + cycles(cfg.l3.hit_latency);
        lat_l123_ = lat_l12_ + cycles(cfg.l3.hit_latency);
        cores_.reserve(cfg.cores);
        for (std::uint32_t c = 0; c < cfg.cores; ++c)
            cores_.emplace_back(cfg);
        if (remote)
            endpoint_.emplace(link, *remote);
    }

    void ComputeNode::start(Engine &engine, ComponentId self, SimTime at, std::size_t first, std::size_t last, Mode mode)
    {
        if (first > last || last > phases_.size())
            throw InvalidArgument("node phase range out of bounds");
        mode_ = mode;
        last_phase_ = last;
        finish_time_ = at;
        if (first == last)
        {
            finished_ = true;
            return;
        }
        finished_ = false;
        engine.schedule(self, at, Message{kPhaseStart, static_cast<std::uint32_t>(first), {}});
    }

    void ComputeNode::handle(const Event &ev, Context &ctx)
    {
        const Message &m = ev.payload;
        switch (m.kind)
        {
        case kPhaseStart:
            start_phase(m.index, ctx);
            break;
        case kCoreWake:
            cores_.at(m.index).wake_pending = false;
            run_core(m.index, ctx);
            break;
        case kFill:
            if (m.index == kServedL2)
                complete_l1(m.req.core, m.req.addr, ctx);
            else
                fill_l2(m.req.core, m.req.addr, ctx);
            break;
        case kComplete:
            complete_l1(m.req.core, m.req.addr, ctx);
            break;
        case kMemIssue:
            issue_memory(m.req, ctx);
            break;
        case kLocalKick:
        {
            std::optional<SimTime> next;
            if (auto issued = local_.kick(m.index, ctx.now(), next))
            {
                const std::uint32_t tag = m.index | (static_cast<std::uint32_t>(issued->result.outcome) << 24);
                MemRequest req = issued->req;
                req.complete_time = issued->result.completion;
                ctx.schedule_at(ctx.self(), issued->result.completion, Message{kLocalDone, tag, req});
            }
            if (next)
                ctx.schedule_at(ctx.self(), *next, Message{kLocalKick, m.index, {}});
            break;
        }
        case kLocalDone:
        {
            const auto outcome = static_cast<memnet::RowOutcome>(m.index >> 24);
            local_.complete(m.index & 0xFFFFFF, m.req,
                            memnet::ServiceResult{m.req.complete_time, m.req.complete_time, outcome});
            on_memory_response(m.req, ctx);
            break;
        }
        case memnet::msg::kResponseArrival:
            if (!endpoint_)
                throw InvalidArgument("response arrived at a node without a link");
            endpoint_->on_response(ctx);
            on_memory_response(m.req, ctx);
            break;
        default:
            throw InvalidArgument("compute node: unknown message kind " + std::to_string(m.kind));
        }
    }

    void ComputeNode::start_phase(std::size_t phase, Context &ctx)
    {
        phase_ = phase;
        const PhaseInfo &info = phases_.at(phase);
        tag_ = info.roi ? static_cast<std::uint32_t>(phase + 1) : 0;
        current_ = PhaseRecord{};
        current_.label = info.label;
        current_.roi = info.roi;
        current_.tag = tag_;
        current_.begin = ctx.now();
        current_.retired.assign(cores_.size(), 0);
        for (std::size_t c = 0; c < cores_.size(); ++c)
            current_.retired[c] = cores_[c].retired;
        phase_end_ = ctx.now();

        if (mode_ == Mode::Timing && info.roi)
        {
            // Every ROI starts from cold caches.
            for (auto &k : cores_)
            {
                k.l1.flush();
                k.l2.flush();
            }
            l3_.flush();
        }

        for (std::uint32_t c = 0; c < cores_.size(); ++c)
        {
            Core &k = cores_[c];
            k.stream = program_->stream(phase, c, static_cast<std::uint32_t>(cores_.size()));
            k.has_op = false;
            k.exhausted = false;
            k.done = false;
            k.ready = ctx.now();
        }
        cores_left_ = static_cast<std::uint32_t>(cores_.size());

        if (mode_ == Mode::Functional)
        {
            run_functional(ctx);
            return;
        }
        for (std::uint32_t c = 0; c < cores_.size(); ++c)
            wake(c, ctx.now(), ctx);
    }

    void ComputeNode::run_functional(Context &ctx)
    {
        for (std::uint32_t c = 0; c < cores_.size(); ++c)
        {
            Core &k = cores_[c];
            SimTime t = ctx.now();
            MemOp op;
            while (k.stream.next(op))
            {
                t += cycles(op.compute_cycles);
                k.retired += op.compute_cycles;
                if (op.kind != OpKind::Compute)
                {
                    const fabric::Translation tr = translate(k, op.vaddr);
                    ++current_.mem_ops[static_cast<std::size_t>(tr.region)];
                    ++k.retired;
                    t += cycles(cfg_.issue_cycles);
                }
            }
            k.exhausted = true;
            k.ready = t;
        }
        for (std::uint32_t c = 0; c < cores_.size(); ++c)
            core_done(c, ctx);
    }

    fabric::Translation ComputeNode::translate(Core &k, std::uint64_t vaddr)
    {
        const std::uint64_t vpage = vaddr / kPageBytes;
        if (vpage != k.tlb_vpage)
        {
            k.tlb = map_->translate(vpage * kPageBytes);
            k.tlb_vpage = vpage;
        }
        return fabric::Translation{k.tlb.region, k.tlb.paddr + vaddr % kPageBytes, k.tlb.access};
    }

    void ComputeNode::wake(std::uint32_t c, SimTime at, Context &ctx)
    {
        Core &k = cores_[c];
        if (k.wake_pending)
            return;
        k.wake_pending = true;
        ctx.schedule_at(ctx.self(), at, Message{kCoreWake, c, {}});
    }

    void ComputeNode::note_slots(const Core &k) { max_outstanding_ = std::max(max_outstanding_, slots_used(k)); }

    void ComputeNode::run_core(std::uint32_t c, Context &ctx)
    {
        Core &k = cores_[c];
        const SimTime now = ctx.now();
        while (!k.blocked && !k.waiting_slot && !k.done)
        {
            if (k.wc_line != kNoLine && (k.wc_bytes >= kLineBytes || k.wc_flush || k.exhausted))
            {
                const SimTime t = max(now, k.ready);
                if (t > now)
                    return wake(c, t, ctx);
                if (slots_used(k) >= cfg_.outstanding_misses)
                {
                    k.waiting_slot = true;
                    return;
                }
                emit_stream_write(c, ctx);
                continue;
            }
            if (k.exhausted)
            {
                if (k.mshr.empty() && k.stream_writes == 0)
                    core_done(c, ctx);
                return;
            }
            if (!k.has_op)
            {
                if (!k.stream.next(k.op))
                {
                    k.exhausted = true;
                    continue;
                }
                k.has_op = true;
            }

            MemOp &op = k.op;
            if (op.compute_cycles > 0)
            {
                k.ready = max(now, k.ready) + cycles(op.compute_cycles);
                k.retired += op.compute_cycles;
                op.compute_cycles = 0;
            }
            if (op.kind == OpKind::Compute)
            {
                k.has_op = false;
                continue;
            }

            const SimTime t = max(now, k.ready);
            const fabric::Translation tr = translate(k, op.vaddr);
            const std::uint64_t line = line_of(tr.paddr);
            if (op.size == 0 || (tr.paddr - line) + op.size > kLineBytes)
                throw InvalidArgument("memory op must lie within one 64 B line");
            const auto region = static_cast<std::size_t>(tr.region);

            if (op.kind == OpKind::StreamStore)
            {
                if (k.wc_line != kNoLine && k.wc_line != line)
                {
                    k.wc_flush = true;
                    continue;
                }
                k.wc_line = line;
                k.wc_bytes += op.size;
                ++current_.mem_ops[region];
                ++k.retired;
                k.ready = t + cycles(cfg_.issue_cycles);
                k.has_op = false;
                continue;
            }

            const bool write = op.kind == OpKind::Store;
            if (k.l1.probe(line))
            {
                k.l1.touch(line, write);
                ++current_.caches[0].hits;
                ++current_.mem_ops[region];
                ++k.retired;
                if (current_.min_latency[kServedL1] == 0 || lat_l1_.ps() < current_.min_latency[kServedL1])
                    current_.min_latency[kServedL1] = lat_l1_.ps();
                k.ready = t + (op.blocking ? lat_l1_ : cycles(cfg_.issue_cycles));
                k.has_op = false;
                continue;
            }

            if (t > now)
                return wake(c, t, ctx);
            auto it = k.mshr.find(line);
            if (it == k.mshr.end() && slots_used(k) >= cfg_.outstanding_misses)
            {
                k.waiting_slot = true;
                return;
            }
            ++current_.caches[0].misses;
            ++current_.mem_ops[region];
            if (it == k.mshr.end())
            {
                it = k.mshr.emplace(line, MissEntry{}).first;
                it->second.issued = now;
                note_slots(k);
                start_miss(c, line, it->second, ctx);
            }
            if (write)
                ++it->second.stores;
            else
                ++it->second.loads;
            if (op.blocking)
            {
                k.blocked = true;
                k.blocked_line = line;
            }
            k.ready = t + cycles(cfg_.issue_cycles);
            k.has_op = false;
        }
    }

    void ComputeNode::core_done(std::uint32_t c, Context &ctx)
    {
        Core &k = cores_[c];
        if (k.done)
            return;
        k.done = true;
        k.stream = OpStream{};
        phase_end_ = max(phase_end_, max(k.ready, ctx.now()));
        if (--cores_left_ > 0)
            return;

        current_.end = phase_end_;
        for (std::size_t i = 0; i < cores_.size(); ++i)
            current_.retired[i] = cores_[i].retired - current_.retired[i];
        records_.push_back(std::move(current_));
        current_ = PhaseRecord{};
        tag_ = 0;
        if (phase_ + 1 < last_phase_)
        {
            ctx.schedule_at(ctx.self(), phase_end_, Message{kPhaseStart, static_cast<std::uint32_t>(phase_ + 1), {}});
        }
        else
        {
            finished_ = true;
            finish_time_ = phase_end_;
        }
    }

    void ComputeNode::start_miss(std::uint32_t c, std::uint64_t line, MissEntry &entry, Context &ctx)
    {
        Core &k = cores_[c];
        const SimTime now = ctx.now();
        entry.floor = now + lat_l12_;
        if (k.l2_pending.contains(line))
        {
            entry.level = kServedL2;
            return;
        }
        if (k.l2.probe(line))
        {
            ++current_.caches[1].hits;
            entry.level = kServedL2;
            if (k.l2.touch(line, false) && cfg_.prefetch)
                prefetch_after(c, line, now + lat_l1_, ctx);
            MemRequest r;
            r.addr = line;
            r.core = static_cast<std::uint16_t>(c);
            ctx.schedule_at(ctx.self(), entry.floor, Message{kFill, kServedL2, r});
            return;
        }
        ++current_.caches[1].misses;
        k.l2_pending.insert(line);
        entry.level = l3_.probe(line) ? kServedL3 : kServedMemory;
        entry.floor = now + lat_l123_;
        fetch_from_l3(c, line, now + lat_l12_, ctx);
        if (cfg_.prefetch)
            prefetch_after(c, line, now + lat_l1_, ctx);
    }

    void ComputeNode::prefetch_after(std::uint32_t c, std::uint64_t line, SimTime at, Context &ctx)
    {
        Core &k = cores_[c];
        for (std::uint32_t d = 1; d <= cfg_.prefetch_degree; ++d)
        {
            const std::uint64_t next = line + d * kLineBytes;
            if (page_of(next) != page_of(line))
                break;
            if (k.l2.probe(next) || k.l2_pending.contains(next) || k.l1.probe(next))
                continue;
            if (k.l2_pending.size() >= cfg_.prefetch_queue)
                break;
            k.l2_pending.insert(next);
            ++current_.prefetches;
            fetch_from_l3(c, next, at + lat_l2_, ctx);
        }
    }

    void ComputeNode::fetch_from_l3(std::uint32_t c, std::uint64_t line, SimTime at, Context &ctx)
    {
        const SimTime ready = at + cycles(cfg_.l3.hit_latency);
        if (l3_.probe(line))
        {
            ++current_.caches[2].hits;
            l3_.touch(line, false);
            MemRequest r;
            r.addr = line;
            r.core = static_cast<std::uint16_t>(c);
            ctx.schedule_at(ctx.self(), ready, Message{kFill, kServedL3, r});
            return;
        }
        ++current_.caches[2].misses;
        auto &waiters = inflight_[line];
        const bool fresh = waiters.empty();
        if (std::find(waiters.begin(), waiters.end(), c) == waiters.end())
            waiters.push_back(c);
        if (!fresh)
            return;
        const bool demand = cores_[c].mshr.contains(line);
        MemRequest req = make_request(line, AccessKind::Read, demand ? RequestSource::Demand : RequestSource::Prefetch, c);
        ctx.schedule_at(ctx.self(), ready, Message{kMemIssue, 0, req});
    }

    void ComputeNode::fill_l2(std::uint32_t c, std::uint64_t line, Context &ctx)
    {
        Core &k = cores_[c];
        if (k.l2_pending.erase(line) == 0)
            return;
        const bool demand = k.mshr.contains(line);
        evict_to_l3(k.l2.install(line, false, !demand), ctx);
        if (demand)
            complete_l1(c, line, ctx);
    }

    void ComputeNode::complete_l1(std::uint32_t c, std::uint64_t line, Context &ctx)
    {
        Core &k = cores_[c];
        auto it = k.mshr.find(line);
        if (it == k.mshr.end())
            return;
        const SimTime now = ctx.now();
        MissEntry e = it->second;
        if (e.floor > now)
        {
            MemRequest r;
            r.addr = line;
            r.core = static_cast<std::uint16_t>(c);
            ctx.schedule_at(ctx.self(), e.floor, Message{kComplete, 0, r});
            return;
        }
        k.mshr.erase(it);
        evict_to_l2(k, k.l1.install(line, e.stores > 0), ctx);

        const SimTime latency = now - e.issued;
        const std::uint32_t ops = e.loads + e.stores;
        for (std::uint32_t i = 0; i < ops; ++i)
            current_.miss_latency.add(latency);
        auto &min_lat = current_.min_latency[e.level];
        if (min_lat == 0 || latency.ps() < min_lat)
            min_lat = latency.ps();
        k.retired += ops;

        if (k.blocked && k.blocked_line == line)
        {
            k.blocked = false;
            k.ready = max(k.ready, now);
            wake(c, now, ctx);
        }
        if (k.waiting_slot)
        {
            k.waiting_slot = false;
            wake(c, now, ctx);
        }
        if (k.exhausted && !k.done)
            wake(c, now, ctx);
    }

    void ComputeNode::memory_fill(std::uint64_t line, Context &ctx)
    {
        auto it = inflight_.find(line);
        if (it == inflight_.end())
            return;
        const std::vector<std::uint32_t> waiters = std::move(it->second);
        inflight_.erase(it);
        evict_to_l3(l3_.install(line, false), ctx);
        for (std::uint32_t c : waiters)
            fill_l2(c, line, ctx);
    }

    void ComputeNode::emit_stream_write(std::uint32_t c, Context &ctx)
    {
        Core &k = cores_[c];
        const std::uint64_t line = k.wc_line;
        // A streaming write replaces any cached copy of the line.
        k.l1.invalidate(line);
        k.l2.invalidate(line);
        l3_.invalidate(line);
        ++k.stream_writes;
        note_slots(k);
        k.wc_line = kNoLine;
        k.wc_bytes = 0;
        k.wc_flush = false;
        issue_memory(make_request(line, AccessKind::Write, RequestSource::StreamingStore, c), ctx);
    }

    void ComputeNode::evict_to_l2(Core &k, const std::optional<Cache::Victim> &v, Context &ctx)
    {
        if (!v || !v->dirty)
            return;
        evict_to_l3(k.l2.install(v->line, true), ctx);
    }

    void ComputeNode::evict_to_l3(const std::optional<Cache::Victim> &v, Context &ctx)
    {
        if (!v || !v->dirty)
            return;
        if (auto victim = l3_.install(v->line, true); victim && victim->dirty)
            writeback(victim->line, ctx);
    }

    void ComputeNode::writeback(std::uint64_t line, Context &ctx)
    {
        issue_memory(make_request(line, AccessKind::Write, RequestSource::Writeback, 0), ctx);
    }

    MemRequest ComputeNode::make_request(std::uint64_t line, AccessKind kind, RequestSource source, std::uint32_t core)
    {
        MemRequest req;
        req.id = next_request_id_++;
        req.addr = line;
        req.host = host_;
        req.core = static_cast<std::uint16_t>(core);
        req.kind = kind;
        req.source = source;
        req.roi = tag_;
        return req;
    }

    void ComputeNode::issue_memory(const MemRequest &in, Context &ctx)
    {
        MemRequest req = in;
        req.issue_time = ctx.now();
        if (region_of(req.addr) == fabric::Region::Local)
        {
            if (local_.enqueue(req))
                ctx.schedule_at(ctx.self(), ctx.now(), Message{kLocalKick, local_.channel_of(req.addr), {}});
            return;
        }
        if (!endpoint_)
            throw RemoteUnbound("node " + std::to_string(host_) + " accessed remote memory without a link");
        endpoint_->send(ctx, req);
    }

    void ComputeNode::on_memory_response(const MemRequest &req, Context &ctx)
    {
        switch (req.source)
        {
        case RequestSource::Demand:
        case RequestSource::Prefetch:
            memory_fill(req.addr, ctx);
            break;
        case RequestSource::StreamingStore:
        {
            Core &k = cores_.at(req.core);
            --k.stream_writes;
            if (k.waiting_slot)
            {
                k.waiting_slot = false;
                wake(req.core, ctx.now(), ctx);
            }
            if (k.exhausted && !k.done)
                wake(req.core, ctx.now(), ctx);
            break;
        }
        case RequestSource::Writeback:
        case RequestSource::Generator:
            break;
        }
    }

} // namespace cxlsim::node

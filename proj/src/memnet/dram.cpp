#include "cxlsim/memnet/dram.hpp"

#include "cxlsim/errors.hpp"

#include <bit>

namespace cxlsim::memnet
{
    void DramTiming::validate() const
    {
        auto positive = [](double v, const char *name) {
            if (!(v > 0.0))
                throw InvalidArgument(std::string("dram.") + name + " must be > 0");
        };
        positive(data_rate_mts, "data_rate_mts");
        positive(tCL_ns, "tCL_ns");
        positive(tRCD_ns, "tRCD_ns");
        positive(tRP_ns, "tRP_ns");
        positive(tCCD_L_ns, "tCCD_L_ns");
        if (bus_width_bytes == 0 || burst_beats == 0)
            throw InvalidArgument("dram.bus_width_bytes and dram.burst_beats must be > 0");
        if (std::uint64_t{bus_width_bytes} * burst_beats != kLineBytes)
            throw InvalidArgument("dram.bus_width_bytes x dram.burst_beats must equal the 64 B line");
        if (banks_per_channel == 0 || bank_groups == 0 || banks_per_channel % bank_groups != 0)
            throw InvalidArgument("dram.banks_per_channel must be a positive multiple of dram.bank_groups");
        if (row_bytes < kLineBytes || !std::has_single_bit(row_bytes))
            throw InvalidArgument("dram.row_bytes must be a power of two >= 64");
    }

    double peak_bandwidth(const DramTiming &timing, std::uint32_t nchannels)
    {
        // MT/s x bytes/transfer = MB/s; /1000 -> GB/s.
        return static_cast<double>(nchannels) * timing.bus_width_bytes * timing.data_rate_mts / 1000.0;
    }

    DramCoord decode_address(std::uint64_t addr, std::uint32_t nchannels, const DramTiming &timing, std::uint64_t base,
                             std::uint64_t size)
    {
        if (addr % kLineBytes != 0)
            throw OutOfRange("address " + std::to_string(addr) + " is not 64 B aligned");
        if (addr < base || addr - base >= size)
            throw OutOfRange("address " + std::to_string(addr) + " outside controller range");
        if (nchannels == 0)
            throw InvalidArgument("controller needs at least one channel");
        const std::uint64_t line = (addr - base) / kLineBytes;
        DramCoord c;
        c.channel = static_cast<std::uint32_t>(line % nchannels);
        const std::uint64_t in_channel = line / nchannels;
        c.bank = static_cast<std::uint32_t>(in_channel % timing.banks_per_channel);
        c.row = in_channel / timing.banks_per_channel / timing.lines_per_row();
        return c;
    }

    ServiceResult dram_service(ChannelState &channel, const DramTiming &timing, const DramCoord &where, SimTime now)
    {
        BankState &bank = channel.banks.at(where.bank);
        const std::uint32_t group = where.bank / timing.banks_per_group();
        const SimTime tBURST = timing.tBURST();
        const SimTime tCL = timing.tCL();

        const SimTime start = max(now, bank.next_ready);
        RowOutcome outcome;
        SimTime prep{};
        if (bank.open_row && *bank.open_row == where.row)
        {
            outcome = RowOutcome::Hit;
        }
        else if (!bank.open_row)
        {
            outcome = RowOutcome::Empty;
            prep = timing.tRCD();
        }
        else
        {
            outcome = RowOutcome::Conflict;
            prep = timing.tRP() + timing.tRCD();
        }

        SimTime col = max(start + prep, max(channel.group_next_col[group], channel.next_col));
        const SimTime data_start = max(col + tCL, channel.bus_next_free);
        col = data_start - tCL;
        const SimTime completion = data_start + tBURST;

        channel.bus_next_free = completion;
        channel.group_next_col[group] = col + timing.tCCD_L();
        channel.next_col = col + tBURST;
        if (timing.page_policy == RowPolicy::OpenRow)
        {
            bank.open_row = where.row;
            bank.next_ready = col + tBURST;
        }
        else
        {
            bank.open_row.reset();
            bank.next_ready = col + tBURST + timing.tRP();
        }
        return ServiceResult{completion, col, outcome};
    }

    DramController::DramController(const DramTiming &timing, std::uint32_t channels, std::uint64_t base,
                                   std::uint64_t size, std::uint32_t window)
        : timing_(timing), base_(base), size_(size), window_(window == 0 ? 1 : window)
    {
        timing_.validate();
        if (channels == 0)
            throw InvalidArgument("controller needs at least one channel");
        channels_.reserve(channels);
        for (std::uint32_t i = 0; i < channels; ++i)
            channels_.emplace_back(timing_);
    }

    std::uint32_t DramController::channel_of(std::uint64_t addr) const
    {
        return decode_address(addr, channels(), timing_, base_, size_).channel;
    }

    bool DramController::enqueue(const MemRequest &req)
    {
        const DramCoord where = decode_address(req.addr, channels(), timing_, base_, size_);
        Channel &ch = channels_[where.channel];
        ch.queue.push_back(Queued{req, where});
        if (ch.armed)
            return false;
        ch.armed = true;
        return true;
    }

    std::optional<DramController::Issued> DramController::kick(std::uint32_t index, SimTime now,
                                                               std::optional<SimTime> &next_kick)
    {
        Channel &ch = channels_.at(index);
        next_kick.reset();
        if (ch.queue.empty())
        {
            ch.armed = false;
            return std::nullopt;
        }
        const std::size_t limit = std::min<std::size_t>(window_, ch.queue.size());
        std::optional<std::size_t> hit;
        std::size_t soonest = 0;
        for (std::size_t i = 0; i < limit && !hit; ++i)
        {
            const auto &q = ch.queue[i];
            const auto &bank = ch.state.banks[q.where.bank];
            if (bank.open_row && *bank.open_row == q.where.row)
                hit = i;
            else if (max(now, bank.next_ready) < max(now, ch.state.banks[ch.queue[soonest].where.bank].next_ready))
                soonest = i;
        }
        const std::size_t pick = hit ? *hit : soonest;
        const Queued chosen = ch.queue[pick];
        ch.queue.erase(ch.queue.begin() + static_cast<std::ptrdiff_t>(pick));
        const ServiceResult r = dram_service(ch.state, timing_, chosen.where, now);
        if (ch.queue.empty())
            ch.armed = false;
        else
        {
            const SimTime lead = timing_.tRP() + timing_.tRCD();
            next_kick = max(now, r.column_time - lead);
        }
        return Issued{chosen.req, r};
    }

    void DramController::complete(std::uint32_t index, const MemRequest &req, const ServiceResult &r)
    {
        const SimTime tBURST = timing_.tBURST();
        auto account = [&](stats::ControllerMeter &m) {
            (req.kind == AccessKind::Read ? m.bytes_read : m.bytes_written) += kLineBytes;
            m.busy_ps += tBURST.ps();
            ++m.requests;
            switch (r.outcome)
            {
            case RowOutcome::Hit:
                ++m.row_hits;
                break;
            case RowOutcome::Empty:
                ++m.row_empty;
                break;
            case RowOutcome::Conflict:
                ++m.row_conflicts;
                break;
            }
        };
        account(channels_.at(index).meter);
        account(attributed_[{req.host, req.roi}]);
    }

    stats::ControllerMeter DramController::total() const
    {
        stats::ControllerMeter t;
        for (const auto &ch : channels_)
            t.merge(ch.meter);
        return t;
    }

} // namespace cxlsim::memnet

#pragma once

#include "cxlsim/workloads/workload.hpp"

namespace cxlsim::workloads
{
    enum class WalkPattern : std::uint8_t
    {
        Sequential,
        Strided,
        Random,
        PointerChase,
    };

    std::string to_string(WalkPattern p);
    WalkPattern walk_pattern_from_string(const std::string &s);

    /// Footprint walker: touches one 8-byte word per 64 B line of its footprint.
    struct WalkerSpec
    {
        std::uint64_t footprint = 8 * 1024 * 1024;
        WalkPattern pattern = WalkPattern::Random;
        std::uint64_t stride_lines = 17; // Strided only
        std::uint64_t seed = 1;          // Random and PointerChase
        std::uint32_t compute_cost = 4;  // cycles per element
        std::uint32_t iterations = 1;    // passes over the footprint's lines

        void validate() const;
        std::uint64_t lines() const noexcept { return footprint / kLineBytes; }
        bool operator==(const WalkerSpec &) const = default;
    };

    /// Line indices visited by `core` in order. PointerChase returns the chase order.
    std::vector<std::uint64_t> walker_sequence(const WalkerSpec &spec, std::uint32_t core, std::uint32_t cores);
    /// The single-cycle successor permutation used by PointerChase (Sattolo shuffle).
    std::vector<std::uint64_t> chase_permutation(std::uint64_t lines, std::uint64_t seed);

    class WalkerWorkload final : public Workload
    {
    public:
        WalkerWorkload(const WalkerSpec &spec, const fabric::PagePolicy &policy);

        std::string kind() const override { return "walker"; }
        void setup(SetupContext &ctx) override;
        std::vector<std::uint64_t> state() const override { return {base_}; }
        void restore(const std::vector<std::uint64_t> &state) override;
        std::vector<node::PhaseInfo> phases() const override { return {{"init", false}, {"walk", true}}; }
        node::OpStream stream(std::size_t phase, std::uint32_t core, std::uint32_t cores) override;
        std::map<std::string, std::string> results() const override;

        std::uint64_t base() const noexcept { return base_; }

    private:
        node::OpStream init_stream(std::uint32_t core, std::uint32_t cores);
        node::OpStream walk_stream(std::uint32_t core, std::uint32_t cores);

        WalkerSpec spec_;
        fabric::PagePolicy policy_;
        std::uint64_t base_ = 0;
        std::uint64_t checksum_ = 0;
    };

} // namespace cxlsim::workloads

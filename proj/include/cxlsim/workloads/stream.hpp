#pragma once

#include "cxlsim/workloads/workload.hpp"

namespace cxlsim::workloads
{
    enum class StreamKernel : std::uint8_t
    {
        Copy,  // c = a
        Scale, // b = alpha * c
        Add,   // c = a + b
        Triad, // a = b + alpha * c
    };

    std::string to_string(StreamKernel k);
    StreamKernel stream_kernel_from_string(const std::string &s);
    /// Bytes STREAM counts per element: 16 for Copy/Scale, 24 for Add/Triad.
    std::uint64_t stream_bytes_per_element(StreamKernel k);

    struct StreamSpec
    {
        std::uint64_t array_bytes = 4 * 1024 * 1024;
        double alpha = 3.0;
        std::vector<StreamKernel> kernels{StreamKernel::Copy, StreamKernel::Scale, StreamKernel::Add,
                                          StreamKernel::Triad};
        // Destination arrays are written with non-temporal (streaming) stores.
        bool streaming_stores = true;

        void validate() const;
        std::uint64_t elements() const noexcept { return array_bytes / 8; }
        bool operator==(const StreamSpec &) const = default;
    };

    /// Expected (a, b, c) element values after running `kernels` once from a=1, b=2, c=0.
    std::array<double, 3> stream_expected(const StreamSpec &spec);

    /// STREAM: an init phase that first-touches a=1, b=2, c=0, then one ROI phase per kernel.
    class StreamWorkload final : public Workload
    {
    public:
        StreamWorkload(const StreamSpec &spec, const fabric::PagePolicy &policy);

        std::string kind() const override { return "stream"; }
        void setup(SetupContext &ctx) override;
        std::vector<std::uint64_t> state() const override { return {a_, b_, c_}; }
        void restore(const std::vector<std::uint64_t> &state) override;
        std::vector<node::PhaseInfo> phases() const override;
        node::OpStream stream(std::size_t phase, std::uint32_t core, std::uint32_t cores) override;
        std::uint64_t reported_bytes(std::size_t phase) const override;
        std::map<std::string, std::string> results() const override;

        /// Number of elements whose contents differ from the kernel equations.
        std::uint64_t mismatches() const;
        std::uint64_t array(int i) const { return i == 0 ? a_ : i == 1 ? b_ : c_; }

    private:
        node::OpStream init_stream(std::uint64_t begin, std::uint64_t end);
        node::OpStream kernel_stream(StreamKernel k, std::uint64_t begin, std::uint64_t end);

        StreamSpec spec_;
        fabric::PagePolicy policy_;
        std::uint64_t a_ = 0, b_ = 0, c_ = 0;
    };

} // namespace cxlsim::workloads

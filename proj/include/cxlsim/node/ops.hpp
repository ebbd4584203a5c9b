#pragma once

#include <coroutine>
#include <cstdint>
#include <exception>
#include <utility>

namespace cxlsim::node
{
    enum class OpKind : std::uint8_t
    {
        Load,
        Store,
        StreamStore, // non-temporal: write-combined, bypasses the caches
        Compute,     // compute_cycles only, no memory access
    };

    /// One workload operation as seen by a core. Data movement has already been applied
    /// functionally by the producer; the core only models its timing.
    struct MemOp
    {
        OpKind kind = OpKind::Load;
        std::uint64_t vaddr = 0;
        std::uint32_t size = 8;
        // Cycles of computation retired before this op issues (one op per cycle).
        std::uint32_t compute_cycles = 0;
        // The next op depends on this load's value: the core stalls until it completes.
        bool blocking = false;

        static MemOp load(std::uint64_t vaddr, std::uint32_t size = 8, bool blocking = false)
        {
            return MemOp{OpKind::Load, vaddr, size, 0, blocking};
        }
        static MemOp store(std::uint64_t vaddr, std::uint32_t size = 8) { return MemOp{OpKind::Store, vaddr, size, 0, false}; }
        static MemOp stream_store(std::uint64_t vaddr, std::uint32_t size = 8)
        {
            return MemOp{OpKind::StreamStore, vaddr, size, 0, false};
        }
        static MemOp compute(std::uint32_t cycles) { return MemOp{OpKind::Compute, 0, 0, cycles, false}; }
        MemOp &after(std::uint32_t cycles)
        {
            compute_cycles = cycles;
            return *this;
        }
    };

    /// Lazily produced sequence of ops (a coroutine generator). Exceptions thrown by the
    /// producer are rethrown from next().
    class OpStream
    {
    public:
        struct promise_type
        {
            MemOp current{};
            std::exception_ptr error;

            OpStream get_return_object() { return OpStream(std::coroutine_handle<promise_type>::from_promise(*this)); }
            std::suspend_always initial_suspend() noexcept { return {}; }
            std::suspend_always final_suspend() noexcept { return {}; }
            std::suspend_always yield_value(const MemOp &op) noexcept
            {
                current = op;
                return {};
            }
            void return_void() noexcept {}
            void unhandled_exception() noexcept { error = std::current_exception(); }
        };

        OpStream() = default;
        explicit OpStream(std::coroutine_handle<promise_type> h) : handle_(h) {}
        OpStream(OpStream &&o) noexcept : handle_(std::exchange(o.handle_, {})) {}
        OpStream &operator=(OpStream &&o) noexcept
        {
            if (this != &o)
            {
                reset();
                handle_ = std::exchange(o.handle_, {});
            }
            return *this;
        }
        OpStream(const OpStream &) = delete;
        OpStream &operator=(const OpStream &) = delete;
        ~OpStream() { reset(); }

        /// Produces the next op; false once the stream is exhausted.
        bool next(MemOp &out)
        {
            if (!handle_ || handle_.done())
                return false;
            handle_.resume();
            if (handle_.promise().error)
                std::rethrow_exception(std::exchange(handle_.promise().error, nullptr));
            if (handle_.done())
                return false;
            out = handle_.promise().current;
            return true;
        }

    private:
        void reset()
        {
            if (handle_)
                handle_.destroy();
            handle_ = {};
        }

        std::coroutine_handle<promise_type> handle_{};
    };

} // namespace cxlsim::node

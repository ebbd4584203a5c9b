#pragma once

#include "cxlsim/errors.hpp"

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>

namespace cxlsim
{
    /// Simulated time in picoseconds. Used both for instants and for durations.
    class SimTime
    {
    public:
        constexpr SimTime() noexcept = default;
        constexpr explicit SimTime(std::uint64_t ps) noexcept : ps_(ps) {}

        static constexpr SimTime zero() noexcept { return SimTime{}; }
        static constexpr SimTime max() noexcept { return SimTime{std::numeric_limits<std::uint64_t>::max()}; }

        // Conversions from real units round up so that a modeled duration is never shorter than
        // the physical one.
        static SimTime from_ns(double ns)
        {
            if (!(ns >= 0.0))
                throw InvalidArgument("negative or NaN duration");
            const double ps = std::ceil(ns * 1000.0 - 1e-6);
            if (ps >= 1.8e19)
                throw SimTimeOverflow("duration does not fit in 64-bit picoseconds");
            return SimTime{static_cast<std::uint64_t>(ps < 0.0 ? 0.0 : ps)};
        }
        static constexpr SimTime from_cycles(std::uint64_t cycles, SimTime period) noexcept
        {
            return SimTime{cycles * period.ps_};
        }

        constexpr std::uint64_t ps() const noexcept { return ps_; }
        constexpr double ns() const noexcept { return static_cast<double>(ps_) / 1000.0; }
        constexpr double seconds() const noexcept { return static_cast<double>(ps_) * 1e-12; }

        constexpr auto operator<=>(const SimTime &) const noexcept = default;

        SimTime operator+(SimTime rhs) const
        {
            if (ps_ > std::numeric_limits<std::uint64_t>::max() - rhs.ps_)
                throw SimTimeOverflow("simulated time overflow");
            return SimTime{ps_ + rhs.ps_};
        }
        SimTime &operator+=(SimTime rhs) { return *this = *this + rhs; }

        // Saturates at zero; callers use it for non-negative spans.
        constexpr SimTime operator-(SimTime rhs) const noexcept
        {
            return SimTime{ps_ > rhs.ps_ ? ps_ - rhs.ps_ : 0};
        }
        SimTime operator*(std::uint64_t k) const
        {
            if (k != 0 && ps_ > std::numeric_limits<std::uint64_t>::max() / k)
                throw SimTimeOverflow("simulated time overflow");
            return SimTime{ps_ * k};
        }

    private:
        std::uint64_t ps_ = 0;
    };

    inline constexpr SimTime max(SimTime a, SimTime b) noexcept { return a < b ? b : a; }
    inline constexpr SimTime min(SimTime a, SimTime b) noexcept { return a < b ? a : b; }

} // namespace cxlsim

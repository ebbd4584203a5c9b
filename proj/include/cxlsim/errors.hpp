#pragma once

#include <stdexcept>
#include <string>

namespace cxlsim
{
    /// Base of every error the simulator raises. The concrete type names the failure class;
    /// the message carries the details.
    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

#define CXLSIM_ERROR(Name)                      \
    class Name : public Error                   \
    {                                           \
    public:                                     \
        using Error::Error;                     \
    }

    // engine
    CXLSIM_ERROR(SchedulingInPast);
    CXLSIM_ERROR(LookaheadViolation);
    CXLSIM_ERROR(SimTimeOverflow);

    // fabric
    CXLSIM_ERROR(CapacityExceeded);
    CXLSIM_ERROR(OverlapWithExistingBinding);
    CXLSIM_ERROR(SecondWriterRejected);
    CXLSIM_ERROR(OverlapWithPooled);
    CXLSIM_ERROR(RemoteUnbound);
    CXLSIM_ERROR(UnmappedAddress);
    CXLSIM_ERROR(ReadOnlyViolation);
    CXLSIM_ERROR(InvalidArgument);

    // memnet
    CXLSIM_ERROR(OutOfRange);

    // stats
    CXLSIM_ERROR(EmptyRoi);
    CXLSIM_ERROR(NoMemoryOps);

    // lifecycle
    CXLSIM_ERROR(InitFailure);
    CXLSIM_ERROR(VersionMismatch);
    CXLSIM_ERROR(ConfigConflict);
    CXLSIM_ERROR(CorruptCheckpoint);

    // config
    CXLSIM_ERROR(ParseError);
    CXLSIM_ERROR(ValidationError);

#undef CXLSIM_ERROR
} // namespace cxlsim

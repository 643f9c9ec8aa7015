#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pds {

/// Root of every error the library raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define PDS_DEFINE_ERROR(Name)                 \
    class Name : public Error {                \
    public:                                    \
        using Error::Error;                    \
    }

// content-store
PDS_DEFINE_ERROR(NotFound);
PDS_DEFINE_ERROR(IntegrityError);
PDS_DEFINE_ERROR(TransportError);
PDS_DEFINE_ERROR(UnsupportedOperation);

// ledger
PDS_DEFINE_ERROR(PayloadTooLarge);
PDS_DEFINE_ERROR(DuplicateChannel);
PDS_DEFINE_ERROR(NotOwner);
PDS_DEFINE_ERROR(DecryptionFailure);

// access-control
PDS_DEFINE_ERROR(AlreadyBound);
PDS_DEFINE_ERROR(UnknownChannel);
PDS_DEFINE_ERROR(UnknownContract);
PDS_DEFINE_ERROR(InvalidReference);
PDS_DEFINE_ERROR(UnknownBundle);
PDS_DEFINE_ERROR(InsufficientPayment);
PDS_DEFINE_ERROR(InsufficientFunds);
PDS_DEFINE_ERROR(NotAuthorized);

// workload
PDS_DEFINE_ERROR(EmptyTrace);
PDS_DEFINE_ERROR(InsufficientTraces);

// bench / config
PDS_DEFINE_ERROR(IoError);
PDS_DEFINE_ERROR(ConfigError);

#undef PDS_DEFINE_ERROR

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line)
    {
    }

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace pds

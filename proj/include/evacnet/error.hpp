#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace evacnet {

enum class ErrorCode {
    // alert gateway
    MissingGeocode,
    MalformedDocument,
    BadLength,
    NonDigit,
    BadPrefix,
    // source registry
    DuplicateFips,
    MissingRequiredColumn,
    EmptyRegistry,
    AtLeastOneChannel,
    MalformedRow,
    // harvester
    FetchFailed,
    // classifier
    InvalidDistribution,
    InvalidEndpoint,
    RetryableTransport,
    ProtocolError,
    // eval harness
    ClassTooSmall,
    LengthMismatch,
    EmptyMatrix,
    TooFewValues,
    MalformedDataset,
    // notice service
    UnknownNotice,
    MalformedGeometry,
    UnreadableStore,
    StoreFailure,
    // replay
    MalformedScenario,
    // shared
    MalformedTimestamp,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (CLI, HTTP layer, tests) can branch on kind rather than message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace evacnet

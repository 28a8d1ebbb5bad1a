#include "evacnet/error.hpp"

namespace evacnet {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingGeocode: return "MissingGeocode";
        case ErrorCode::MalformedDocument: return "MalformedDocument";
        case ErrorCode::BadLength: return "BadLength";
        case ErrorCode::NonDigit: return "NonDigit";
        case ErrorCode::BadPrefix: return "BadPrefix";
        case ErrorCode::DuplicateFips: return "DuplicateFips";
        case ErrorCode::MissingRequiredColumn: return "MissingRequiredColumn";
        case ErrorCode::EmptyRegistry: return "EmptyRegistry";
        case ErrorCode::AtLeastOneChannel: return "AtLeastOneChannel";
        case ErrorCode::MalformedRow: return "MalformedRow";
        case ErrorCode::FetchFailed: return "FetchFailed";
        case ErrorCode::InvalidDistribution: return "InvalidDistribution";
        case ErrorCode::InvalidEndpoint: return "InvalidEndpoint";
        case ErrorCode::RetryableTransport: return "RetryableTransport";
        case ErrorCode::ProtocolError: return "ProtocolError";
        case ErrorCode::ClassTooSmall: return "ClassTooSmall";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::EmptyMatrix: return "EmptyMatrix";
        case ErrorCode::TooFewValues: return "TooFewValues";
        case ErrorCode::MalformedDataset: return "MalformedDataset";
        case ErrorCode::UnknownNotice: return "UnknownNotice";
        case ErrorCode::MalformedGeometry: return "MalformedGeometry";
        case ErrorCode::UnreadableStore: return "UnreadableStore";
        case ErrorCode::StoreFailure: return "StoreFailure";
        case ErrorCode::MalformedScenario: return "MalformedScenario";
        case ErrorCode::MalformedTimestamp: return "MalformedTimestamp";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

}  // namespace evacnet

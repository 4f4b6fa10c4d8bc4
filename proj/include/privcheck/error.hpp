#ifndef PRIVCHECK_ERROR_HPP
#define PRIVCHECK_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace privcheck {

enum class Errc {
    MalformedId,
    NoIdentifiersFound,
    DuplicateIdentifier,
    NotALeaf,
    UnknownNode,
    SchemaVersionMismatch,
    CorruptPayload,
    Transport,
    RateLimited,
    ProviderError,
    UnscriptedPrompt,
    AnnotationFailed,
    CyclicTaxonomy,
    CycleDetected,
    EmptyGraph,
    EmptyCorpus,
    UnknownDoc,
    DimensionMismatch,
    ZeroVector,
    MalformedRecord,
    JudgmentCaseMismatch,
    InvalidArgument,
    Io,
};

inline std::string_view errc_name(Errc code) {
    switch (code) {
    case Errc::MalformedId: return "MalformedId";
    case Errc::NoIdentifiersFound: return "NoIdentifiersFound";
    case Errc::DuplicateIdentifier: return "DuplicateIdentifier";
    case Errc::NotALeaf: return "NotALeaf";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case Errc::CorruptPayload: return "CorruptPayload";
    case Errc::Transport: return "Transport";
    case Errc::RateLimited: return "RateLimited";
    case Errc::ProviderError: return "ProviderError";
    case Errc::UnscriptedPrompt: return "UnscriptedPrompt";
    case Errc::AnnotationFailed: return "AnnotationFailed";
    case Errc::CyclicTaxonomy: return "CyclicTaxonomy";
    case Errc::CycleDetected: return "CycleDetected";
    case Errc::EmptyGraph: return "EmptyGraph";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::UnknownDoc: return "UnknownDoc";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::JudgmentCaseMismatch: return "JudgmentCaseMismatch";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail)
        : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Non-2xx reply from a chat or embedding endpoint.
class ProviderError : public Error {
public:
    ProviderError(int status, std::string body)
        : Error(Errc::ProviderError, "status " + std::to_string(status) + ": " + body),
          status_(status), body_(std::move(body)) {}

    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

}  // namespace privcheck

#endif

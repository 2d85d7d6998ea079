#pragma once

#include <stdexcept>
#include <string>

namespace proact {

/// Base class for chat-completion client failures.
class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Network-level failure (connect/timeout/5xx) that persisted through retries.
class TransportError : public BackendError {
public:
    using BackendError::BackendError;
};

/// The endpoint answered, but not in the expected shape. Never retried.
class ProtocolError : public BackendError {
public:
    using BackendError::BackendError;
};

/// HTTP 401/403. Never retried.
class AuthError : public BackendError {
public:
    using BackendError::BackendError;
};

/// Malformed or inadmissible codec input. `position` is the index of the
/// first offending unit (character, token, or codepoint depending on the
/// codec), or npos when not applicable.
class CodecError : public std::runtime_error {
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    CodecError(const std::string& what, std::size_t position = npos)
        : std::runtime_error(what), position_(position) {}

    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

}  // namespace proact

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace khop {

using EntityId = std::int32_t;
using RelationId = std::int32_t;
using TokenId = std::int32_t;

enum class ErrorCode {
    invalid_argument,
    config,
    io,
    state,
    internal,
};

class KhopError : public std::runtime_error {
public:
    KhopError(ErrorCode code, std::string msg)
        : std::runtime_error(std::move(msg)), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
    throw KhopError(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
    if (!cond) {
        fail(code, msg);
    }
}

} // namespace khop

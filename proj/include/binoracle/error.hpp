#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace binoracle {

// Every failure carries a stable machine-readable code (e.g. "UnknownName",
// "InvalidPattern") next to the human-readable message. The tool server maps
// these to structured error payloads; the CLI maps them to exit code 1.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
    throw Error(code, message);
}

} // namespace binoracle

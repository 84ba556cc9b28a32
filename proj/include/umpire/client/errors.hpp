#pragma once

#include <stdexcept>
#include <string>

namespace umpire::client {

class ClientError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TimeoutError : public ClientError {
public:
    using ClientError::ClientError;
};

class ConnectionError : public ClientError {
public:
    using ClientError::ClientError;
};

/// The server answered with a BFCP Error or an HTTP error status.
class ServerError : public ClientError {
public:
    ServerError(int code, std::string name, const std::string& message)
        : ClientError(message), code_(code), name_(std::move(name)) {}
    /// BFCP error code, or HTTP status for gateway calls.
    [[nodiscard]] int code() const { return code_; }
    /// Machine-readable error name when the server supplied one.
    [[nodiscard]] const std::string& name() const { return name_; }

private:
    int code_;
    std::string name_;
};

}  // namespace umpire::client

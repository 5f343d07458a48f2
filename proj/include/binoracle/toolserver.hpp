#pragma once

#include "binoracle/queryapi.hpp"

#include <json.hpp>

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace binoracle {

// Text stored in a transcript slot once its payload has been released.
extern const char* const kDiscardedPlaceholder;
extern const char* const kServerVersion;

struct ToolResponse {
    std::string tag;     // "tN" for stored query results, empty otherwise
    std::string method;
    nlohmann::json payload; // result object, or {code, message} when !ok
    bool ok = true;

    // The form an agent sees in its transcript: "[tag=tN] {...}".
    std::string envelope() const;
};

// One conversation against one opened binary. Query results are tagged
// t1, t2, ... in issue order and kept until discarded; errors and discard
// acknowledgements consume no tag.
class Session {
public:
    Session(std::string id, std::shared_ptr<const ApiHandle> handle);

    const std::string& session_id() const { return id_; }
    const ApiHandle& api() const { return *handle_; }

    ToolResponse handle_call(const std::string& method, const nlohmann::json& params);

    // transcript introspection (diagnostics and tests)
    const std::string* stored(const std::string& tag) const;
    size_t outstanding_bytes() const { return outstanding_; }
    int issued_tags() const { return next_tag_ - 1; }

    // budget hooks enforced by callers, never by the server itself
    void set_wall_deadline(std::chrono::steady_clock::time_point t) { deadline_ = t; }
    bool past_deadline() const;

private:
    std::string id_;
    std::shared_ptr<const ApiHandle> handle_;
    int next_tag_ = 1;
    std::map<std::string, std::string> transcript_;
    size_t outstanding_ = 0;
    std::optional<std::chrono::steady_clock::time_point> deadline_;

    nlohmann::json dispatch(const std::string& method, const nlohmann::json& params);
    nlohmann::json discard(const nlohmann::json& params);
};

// Shares immutable analysis handles across sessions; one handle per
// (path, strict) pair, analyzed once.
class ServerCore {
public:
    std::shared_ptr<Session> open_session(const std::string& path, bool strict = false);
    static nlohmann::json capabilities();

private:
    std::mutex mu_;
    std::map<std::pair<std::string, bool>, std::shared_ptr<const ApiHandle>> handles_;
    int next_session_ = 1;
};

// One line-delimited wire exchange: request {id, method, params} in,
// serialized response {id, tag, payload} out. "open" binds the session,
// "capabilities" works unbound; everything else requires a bound session.
// Never throws: all failures come back as {code, message} payloads.
std::string handle_wire_line(ServerCore& core, std::shared_ptr<Session>& session,
                             const std::string& line);

// Serve the wire protocol. serve_stream reads requests from `in` until EOF.
// serve_tcp accepts connections on "host:port"; max_connections < 0 means
// run forever, otherwise return after that many connections finish.
int serve_stream(ServerCore& core, std::istream& in, std::ostream& out);
int serve_tcp(const std::string& addr, int max_connections = -1);

int cli_main(int argc, const char* const* argv);

} // namespace binoracle

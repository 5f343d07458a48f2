#include "binoracle/toolserver.hpp"

#include "binoracle/error.hpp"

#include <CLI11.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <csignal>
#include <cstring>
#include <iostream>
#include <sstream>
#include <thread>

namespace binoracle {

using nlohmann::json;

const char* const kDiscardedPlaceholder = "[discarded]";
const char* const kServerVersion = "1.0.0";

namespace {

// Error::what() is "Code: message"; the wire wants the parts split.
json error_payload(const Error& e) {
    std::string what = e.what();
    std::string message = what.substr(e.code().size() + 2);
    return json{{"code", e.code()}, {"message", message}};
}

const json& params_object(const json& params) {
    static const json empty = json::object();
    if (params.is_null()) return empty;
    if (!params.is_object()) fail("ParamValidation", "params must be an object");
    return params;
}

std::string req_string(const json& p, const char* key) {
    if (!p.contains(key) || !p.at(key).is_string()) {
        fail("ParamValidation", std::string("required string param: ") + key);
    }
    return p.at(key).get<std::string>();
}

int64_t opt_int(const json& p, const char* key, int64_t def) {
    if (!p.contains(key)) return def;
    if (!p.at(key).is_number_integer()) {
        fail("ParamValidation", std::string(key) + " must be an integer");
    }
    return p.at(key).get<int64_t>();
}

bool opt_bool(const json& p, const char* key, bool def) {
    if (!p.contains(key)) return def;
    if (!p.at(key).is_boolean()) {
        fail("ParamValidation", std::string(key) + " must be a boolean");
    }
    return p.at(key).get<bool>();
}

json page_json(const Page<FunctionInfo>& page) {
    json items = json::array();
    for (const FunctionInfo& f : page.items) {
        items.push_back({{"name", f.name},
                         {"address", f.address},
                         {"size_bytes", f.size_bytes},
                         {"num_blocks", f.num_blocks}});
    }
    return json{{"items", std::move(items)},
                {"total", page.total},
                {"offset", page.offset},
                {"returned", page.returned},
                {"next_offset", page.next_offset ? json(*page.next_offset) : json()}};
}

json page_json(const Page<std::string>& page) {
    return json{{"items", page.items},
                {"total", page.total},
                {"offset", page.offset},
                {"returned", page.returned},
                {"next_offset", page.next_offset ? json(*page.next_offset) : json()}};
}

json cfg_json(const Cfg& cfg) {
    json edges = json::array();
    for (const CfgEdge& e : cfg.edges) {
        edges.push_back(
            {{"source", e.source}, {"target", e.target}, {"edge_type", e.edge_type}});
    }
    return json{{"function", cfg.function},
                {"blocks", cfg.blocks},
                {"entry_block", cfg.entry_block},
                {"edges", std::move(edges)}};
}

json text_json(const std::string& function, std::string text) {
    return json{{"function", function}, {"text", std::move(text)}};
}

json search_json(const SearchResults& found) {
    json results = json::array();
    for (const FunctionMatches& fm : found.results) {
        json matches = json::array();
        for (const SearchMatch& m : fm.matches) {
            matches.push_back({{"function", m.function},
                               {"line_number", m.line_number},
                               {"line_content", m.line_content},
                               {"match_text", m.match_text}});
        }
        results.push_back({{"function", fm.function},
                           {"match_count", fm.match_count},
                           {"matches", std::move(matches)}});
    }
    return json{{"results", std::move(results)},
                {"total_match_count", found.total_match_count},
                {"truncated", found.truncated},
                {"limit", found.limit}};
}

const char* const kQueryMethods[] = {
    "decompile",      "find_callers_of_import",
    "find_functions_referencing_string",
    "get_assembly",   "get_callees",
    "get_callers",    "get_cfg",
    "get_imports",    "get_pcode",
    "get_strings",    "list_functions",
    "search_assembly", "search_decompiled",
    "search_pcode",
};

} // namespace

std::string ToolResponse::envelope() const {
    if (tag.empty()) return payload.dump();
    return "[tag=" + tag + "] " + payload.dump();
}

Session::Session(std::string id, std::shared_ptr<const ApiHandle> handle)
    : id_(std::move(id)), handle_(std::move(handle)) {}

bool Session::past_deadline() const {
    return deadline_ && std::chrono::steady_clock::now() > *deadline_;
}

const std::string* Session::stored(const std::string& tag) const {
    auto it = transcript_.find(tag);
    return it == transcript_.end() ? nullptr : &it->second;
}

json Session::discard(const json& params) {
    std::string tag = req_string(params, "tag");
    auto it = transcript_.find(tag);
    if (it == transcript_.end()) {
        fail("UnknownTag", "tag " + tag + " was never issued in this session");
    }
    if (it->second != kDiscardedPlaceholder) {
        outstanding_ -= it->second.size();
        it->second = kDiscardedPlaceholder;
    }
    return json{{"discarded", tag}, {"status", "ok"}};
}

json Session::dispatch(const std::string& method, const json& raw_params) {
    const json& p = params_object(raw_params);
    const ApiHandle& api = *handle_;
    if (method == "list_functions") {
        return page_json(api.list_functions(opt_int(p, "offset", 0), opt_int(p, "limit", 100)));
    }
    if (method == "get_imports") {
        return page_json(api.get_imports(opt_int(p, "offset", 0), opt_int(p, "limit", 100)));
    }
    if (method == "get_strings") {
        return page_json(api.get_strings(opt_int(p, "offset", 0), opt_int(p, "limit", 100)));
    }
    if (method == "find_callers_of_import") {
        return json(api.find_callers_of_import(req_string(p, "name")));
    }
    if (method == "find_functions_referencing_string") {
        return json(api.find_functions_referencing_string(
            req_string(p, "s"), opt_bool(p, "case_sensitive", false)));
    }
    if (method == "get_callees") return json(api.get_callees(req_string(p, "name")));
    if (method == "get_callers") return json(api.get_callers(req_string(p, "name")));
    if (method == "decompile") {
        std::string name = req_string(p, "name");
        return text_json(name, api.decompile(name));
    }
    if (method == "get_pcode") {
        std::string name = req_string(p, "name");
        return text_json(name, api.get_pcode(name));
    }
    if (method == "get_assembly") {
        std::string name = req_string(p, "name");
        return text_json(name, api.get_assembly(name));
    }
    if (method == "get_cfg") return cfg_json(api.get_cfg(req_string(p, "name")));
    if (method == "search_decompiled") {
        return search_json(
            api.search_decompiled(req_string(p, "pattern"), opt_int(p, "limit", 200)));
    }
    if (method == "search_pcode") {
        return search_json(
            api.search_pcode(req_string(p, "pattern"), opt_int(p, "limit", 200)));
    }
    if (method == "search_assembly") {
        return search_json(
            api.search_assembly(req_string(p, "pattern"), opt_int(p, "limit", 200)));
    }
    fail("UnknownMethod", "no method named " + method);
}

ToolResponse Session::handle_call(const std::string& method, const json& params) {
    ToolResponse r;
    r.method = method;
    try {
        if (method == "discard_tool_result") {
            r.payload = discard(params_object(params));
            return r;
        }
        r.payload = dispatch(method, params);
        r.tag = "t" + std::to_string(next_tag_++);
        std::string envelope = r.envelope();
        outstanding_ += envelope.size();
        transcript_.emplace(r.tag, std::move(envelope));
        return r;
    } catch (const Error& e) {
        r.tag.clear();
        r.ok = false;
        r.payload = error_payload(e);
        return r;
    } catch (const std::exception& e) {
        r.tag.clear();
        r.ok = false;
        r.payload = json{{"code", "InternalError"}, {"message", e.what()}};
        return r;
    }
}

std::shared_ptr<Session> ServerCore::open_session(const std::string& path, bool strict) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(path, strict);
    auto it = handles_.find(key);
    if (it == handles_.end()) {
        it = handles_.emplace(key, std::make_shared<const ApiHandle>(
                                       ApiHandle::open(path, strict)))
                 .first;
    }
    return std::make_shared<Session>("s" + std::to_string(next_session_++), it->second);
}

json ServerCore::capabilities() {
    std::vector<std::string> methods(std::begin(kQueryMethods), std::end(kQueryMethods));
    methods.push_back("discard_tool_result");
    methods.push_back("capabilities");
    methods.push_back("open");
    std::sort(methods.begin(), methods.end());
    return json{{"version", kServerVersion},
                {"methods", methods},
                {"regex_dialect", "ecma-subset"}};
}

std::string handle_wire_line(ServerCore& core, std::shared_ptr<Session>& session,
                             const std::string& line) {
    json id;
    std::string tag;
    json payload;
    try {
        json req = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (req.is_discarded() || !req.is_object()) {
            fail("ParamValidation", "request is not a structured record");
        }
        id = req.value("id", json());
        if (!req.contains("method") || !req.at("method").is_string()) {
            fail("ParamValidation", "request needs a method name");
        }
        std::string method = req.at("method").get<std::string>();
        json params = req.value("params", json());
        if (method == "capabilities") {
            payload = ServerCore::capabilities();
        } else if (method == "open") {
            const json& p = params_object(params);
            session = core.open_session(req_string(p, "path"), opt_bool(p, "strict", false));
            payload = json{{"session_id", session->session_id()},
                           {"hash", session->api().payload().at("hash")},
                           {"strict", session->api().payload().at("strict")}};
        } else if (!session) {
            fail("ParamValidation", "no binary bound; send an open request first");
        } else {
            ToolResponse r = session->handle_call(method, params);
            tag = r.tag;
            payload = std::move(r.payload);
        }
    } catch (const Error& e) {
        tag.clear();
        payload = error_payload(e);
    } catch (const std::exception& e) {
        tag.clear();
        payload = json{{"code", "InternalError"}, {"message", e.what()}};
    }
    return json{{"id", std::move(id)}, {"tag", tag}, {"payload", std::move(payload)}}.dump();
}

int serve_stream(ServerCore& core, std::istream& in, std::ostream& out) {
    std::shared_ptr<Session> session;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out << handle_wire_line(core, session, line) << "\n" << std::flush;
    }
    return 0;
}

namespace {

void connection_loop(ServerCore& core, int fd) {
    std::shared_ptr<Session> session;
    std::string buf;
    char chunk[4096];
    for (;;) {
        auto pos = buf.find('\n');
        if (pos == std::string::npos) {
            ssize_t n = ::read(fd, chunk, sizeof chunk);
            if (n <= 0) break;
            buf.append(chunk, static_cast<size_t>(n));
            continue;
        }
        std::string line = buf.substr(0, pos);
        buf.erase(0, pos + 1);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::string reply = handle_wire_line(core, session, line) + "\n";
        size_t sent = 0;
        while (sent < reply.size()) {
            ssize_t n = ::send(fd, reply.data() + sent, reply.size() - sent, MSG_NOSIGNAL);
            if (n <= 0) { ::close(fd); return; }
            sent += static_cast<size_t>(n);
        }
    }
    ::close(fd);
}

} // namespace

int serve_tcp(const std::string& addr, int max_connections) {
    auto colon = addr.rfind(':');
    if (colon == std::string::npos) {
        std::cerr << "address must be host:port\n";
        return 2;
    }
    std::string host = addr.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(addr.substr(colon + 1));
    } catch (const std::exception&) {
        std::cerr << "bad port in address\n";
        return 2;
    }
    if (host.empty() || host == "localhost") host = "127.0.0.1";

    signal(SIGPIPE, SIG_IGN);
    int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) {
        std::cerr << "socket: " << std::strerror(errno) << "\n";
        return 1;
    }
    int one = 1;
    setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(static_cast<uint16_t>(port));
    if (inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1) {
        std::cerr << "bad host in address\n";
        ::close(listener);
        return 2;
    }
    if (::bind(listener, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0 ||
        ::listen(listener, 16) != 0) {
        std::cerr << "bind/listen: " << std::strerror(errno) << "\n";
        ::close(listener);
        return 1;
    }
    std::cerr << "listening on " << host << ":" << port << "\n";

    ServerCore core;
    int served = 0;
    while (max_connections < 0 || served < max_connections) {
        int fd = ::accept(listener, nullptr, nullptr);
        if (fd < 0) continue;
        if (max_connections < 0) {
            std::thread(connection_loop, std::ref(core), fd).detach();
        } else {
            connection_loop(core, fd); // bounded mode stays sequential
        }
        ++served;
    }
    ::close(listener);
    return 0;
}

namespace {

// Runs one method against one binary and prints the transcript form.
int run_one(const std::string& path, bool strict, const std::string& method,
            const json& params, std::ostream& out) {
    ServerCore core;
    try {
        std::shared_ptr<Session> session = core.open_session(path, strict);
        ToolResponse r = session->handle_call(method, params);
        out << r.envelope() << "\n";
        return r.ok ? 0 : 1;
    } catch (const Error& e) {
        out << error_payload(e).dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        out << json{{"code", "InternalError"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }
}

} // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"query engine for stripped x86-64 binaries"};
    app.require_subcommand(1);

    std::string path;
    bool strict = false;
    int64_t offset = 0, page_limit = 100, search_limit = 200;
    std::string name, needle, pattern, repr = "pcode";
    bool case_sensitive = false;
    std::string addr;
    bool stdio = false;

    auto add_binary = [&](CLI::App* cmd) {
        cmd->add_option("path", path, "binary to analyze")->required();
        cmd->add_flag("--strict", strict, "ignore symbol names, use sub_<va> only");
    };
    auto add_paging = [&](CLI::App* cmd) {
        cmd->add_option("--offset", offset, "start index");
        cmd->add_option("--limit", page_limit, "page size");
    };

    CLI::App* functions = app.add_subcommand("functions", "list discovered functions");
    add_binary(functions);
    add_paging(functions);
    CLI::App* imports = app.add_subcommand("imports", "list imported symbols");
    add_binary(imports);
    add_paging(imports);
    CLI::App* strings = app.add_subcommand("strings", "list string literals");
    add_binary(strings);
    add_paging(strings);

    CLI::App* callers_of = app.add_subcommand("callers-of", "functions calling an import");
    add_binary(callers_of);
    callers_of->add_option("import", name, "import name")->required();

    CLI::App* refs = app.add_subcommand("refs", "functions referencing a string");
    add_binary(refs);
    refs->add_option("text", needle, "substring to look for")->required();
    refs->add_flag("--case-sensitive", case_sensitive, "match case exactly");

    const char* unary[] = {"callees", "callers", "decompile", "pcode", "assembly", "cfg"};
    const char* unary_help[] = {
        "direct callees of a function",     "direct callers of a function",
        "pseudo-C for a function",          "SSA operation listing for a function",
        "assembly listing for a function",  "control flow graph for a function"};
    for (size_t i = 0; i < std::size(unary); ++i) {
        CLI::App* cmd = app.add_subcommand(unary[i], unary_help[i]);
        add_binary(cmd);
        cmd->add_option("function", name, "function name")->required();
    }

    CLI::App* search = app.add_subcommand("search", "regex search across one representation");
    add_binary(search);
    search->add_option("--repr", repr, "decompiled, pcode, or assembly")
        ->check(CLI::IsMember({"decompiled", "pcode", "assembly"}));
    search->add_option("--pattern", pattern, "regex (ecma-subset)")->required();
    search->add_option("--limit", search_limit, "match cap");

    CLI::App* caps = app.add_subcommand("capabilities", "report version and methods");
    CLI::App* serve = app.add_subcommand("serve", "run the line-delimited service");
    serve->add_option("--addr", addr, "host:port to listen on");
    serve->add_flag("--stdio", stdio, "serve one session over standard streams");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (caps->parsed()) {
        std::cout << ServerCore::capabilities().dump() << "\n";
        return 0;
    }
    if (serve->parsed()) {
        if (!addr.empty()) return serve_tcp(addr);
        if (!stdio) {
            std::cerr << "serve needs --addr or --stdio\n";
            return 2;
        }
        ServerCore core;
        return serve_stream(core, std::cin, std::cout);
    }

    std::string method;
    json params = json::object();
    if (functions->parsed()) {
        method = "list_functions";
        params = {{"offset", offset}, {"limit", page_limit}};
    } else if (imports->parsed()) {
        method = "get_imports";
        params = {{"offset", offset}, {"limit", page_limit}};
    } else if (strings->parsed()) {
        method = "get_strings";
        params = {{"offset", offset}, {"limit", page_limit}};
    } else if (callers_of->parsed()) {
        method = "find_callers_of_import";
        params = {{"name", name}};
    } else if (refs->parsed()) {
        method = "find_functions_referencing_string";
        params = {{"s", needle}, {"case_sensitive", case_sensitive}};
    } else if (search->parsed()) {
        method = "search_" + repr;
        params = {{"pattern", pattern}, {"limit", search_limit}};
    } else {
        const char* wire[] = {"get_callees", "get_callers", "decompile",
                              "get_pcode",   "get_assembly", "get_cfg"};
        for (size_t i = 0; i < std::size(unary); ++i) {
            if (app.get_subcommand(unary[i])->parsed()) {
                method = wire[i];
                params = {{"name", name}};
                break;
            }
        }
    }
    return run_one(path, strict, method, params, std::cout);
}

} // namespace binoracle

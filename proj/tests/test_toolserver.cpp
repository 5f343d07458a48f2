#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "binoracle/toolserver.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdlib>
#include <sstream>
#include <thread>

using namespace binoracle;
using nlohmann::json;

namespace {

struct CacheEnv {
    CacheEnv() {
        char tmpl[] = "/tmp/binoracle-test-srv-XXXXXX";
        setenv("BINORACLE_CACHE_DIR", mkdtemp(tmpl), 1);
    }
} cache_env;

std::string fixture_path(const std::string& name) {
    const char* dir = std::getenv("BINORACLE_FIXTURES");
    REQUIRE(dir != nullptr);
    return std::string(dir) + "/" + name;
}

// the ten-request conversation used for replay checks
std::vector<std::string> scripted_requests(const std::string& path) {
    json open_params = {{"path", path}};
    std::vector<json> reqs = {
        {{"id", 1}, {"method", "open"}, {"params", open_params}},
        {{"id", 2}, {"method", "capabilities"}},
        {{"id", 3}, {"method", "list_functions"}},
        {{"id", 4}, {"method", "get_imports"}, {"params", {{"limit", 2}}}},
        {{"id", 5}, {"method", "get_strings"}},
        {{"id", 6}, {"method", "decompile"}, {"params", {{"name", "exported_helper"}}}},
        {{"id", 7}, {"method", "get_cfg"}, {"params", {{"name", "sub_401012"}}}},
        {{"id", 8},
         {"method", "search_pcode"},
         {"params", {{"pattern", "CALL"}, {"limit", 50}}}},
        {{"id", 9}, {"method", "discard_tool_result"}, {"params", {{"tag", "t1"}}}},
        {{"id", 10}, {"method", "get_callees"}, {"params", {{"name", "sub_401012"}}}},
    };
    std::vector<std::string> lines;
    for (const json& r : reqs) lines.push_back(r.dump());
    return lines;
}

std::string run_transcript_in_process(const std::vector<std::string>& requests) {
    ServerCore core;
    std::shared_ptr<Session> session;
    std::string out;
    for (const std::string& line : requests) {
        out += handle_wire_line(core, session, line);
        out += "\n";
    }
    return out;
}

// minimal blocking client for the TCP replay check
std::string run_transcript_over_tcp(int port, const std::vector<std::string>& requests) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    REQUIRE(fd >= 0);
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(static_cast<uint16_t>(port));
    inet_pton(AF_INET, "127.0.0.1", &sa.sin_addr);
    int rc = -1;
    for (int attempt = 0; attempt < 100 && rc != 0; ++attempt) {
        rc = ::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa);
        if (rc != 0) std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    REQUIRE(rc == 0);

    std::string transcript;
    std::string buf;
    char chunk[4096];
    for (const std::string& req : requests) {
        std::string msg = req + "\n";
        REQUIRE(::send(fd, msg.data(), msg.size(), 0) ==
                static_cast<ssize_t>(msg.size()));
        while (buf.find('\n') == std::string::npos) {
            ssize_t n = ::read(fd, chunk, sizeof chunk);
            REQUIRE(n > 0);
            buf.append(chunk, static_cast<size_t>(n));
        }
        auto pos = buf.find('\n');
        transcript += buf.substr(0, pos + 1);
        buf.erase(0, pos + 1);
    }
    ::close(fd);
    return transcript;
}

int cli(std::initializer_list<const char*> args, std::string* out = nullptr) {
    std::vector<const char*> argv = {"binoracle"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::ostringstream captured;
    std::streambuf* old = std::cout.rdbuf(captured.rdbuf());
    int code = cli_main(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old);
    if (out) *out = captured.str();
    return code;
}

} // namespace

TEST_CASE("tags are issued in strictly increasing order") {
    ServerCore core;
    auto session = core.open_session(fixture_path("elf_calls.bin"));
    for (int i = 1; i <= 5; ++i) {
        ToolResponse r = session->handle_call("list_functions", json::object());
        CHECK(r.ok);
        CHECK(r.tag == "t" + std::to_string(i));
        CHECK(r.envelope().rfind("[tag=t" + std::to_string(i) + "] ", 0) == 0);
    }
    CHECK(session->issued_tags() == 5);
}

TEST_CASE("interleaved sessions keep independent tag counters") {
    ServerCore core;
    auto a = core.open_session(fixture_path("elf_calls.bin"));
    auto b = core.open_session(fixture_path("elf_ret.bin"));
    CHECK(a->session_id() != b->session_id());
    CHECK(a->handle_call("list_functions", {}).tag == "t1");
    CHECK(b->handle_call("list_functions", {}).tag == "t1");
    CHECK(a->handle_call("get_strings", {}).tag == "t2");
    CHECK(b->handle_call("get_imports", {}).tag == "t2");
    CHECK(a->handle_call("get_imports", {}).tag == "t3");
}

TEST_CASE("sessions on the same binary share one analysis handle") {
    ServerCore core;
    auto a = core.open_session(fixture_path("elf_calls.bin"));
    auto b = core.open_session(fixture_path("elf_calls.bin"));
    CHECK(&a->api() == &b->api());
    auto strict = core.open_session(fixture_path("elf_calls.bin"), true);
    CHECK(&strict->api() != &a->api());
}

TEST_CASE("method errors are payloads and consume no tag") {
    ServerCore core;
    auto session = core.open_session(fixture_path("elf_calls.bin"));
    ToolResponse bad = session->handle_call("decompile", {{"name", "nope"}});
    CHECK(!bad.ok);
    CHECK(bad.tag.empty());
    CHECK(bad.payload.at("code") == "UnknownName");
    CHECK(bad.payload.contains("message"));

    ToolResponse good = session->handle_call("decompile", {{"name", "sub_401000"}});
    CHECK(good.ok);
    CHECK(good.tag == "t1"); // the failure above did not advance the counter
}

TEST_CASE("unknown methods and malformed params are rejected by code") {
    ServerCore core;
    auto session = core.open_session(fixture_path("elf_calls.bin"));
    CHECK(session->handle_call("frobnicate", {}).payload.at("code") == "UnknownMethod");
    CHECK(session->handle_call("decompile", {}).payload.at("code") == "ParamValidation");
    CHECK(session->handle_call("decompile", {{"name", 7}}).payload.at("code") ==
          "ParamValidation");
    CHECK(session->handle_call("list_functions", {{"offset", "zero"}})
              .payload.at("code") == "ParamValidation");
    CHECK(session->handle_call("list_functions", json::array()).payload.at("code") ==
          "ParamValidation");
    // downstream codes pass through unchanged
    CHECK(session->handle_call("search_pcode", {{"pattern", "(?=x)"}})
              .payload.at("code") == "InvalidPattern");
    CHECK(session->handle_call("list_functions", {{"offset", -1}}).payload.at("code") ==
          "InvalidPage");
}

TEST_CASE("discard replaces the stored payload with the fixed placeholder") {
    ServerCore core;
    auto session = core.open_session(fixture_path("elf_strings.bin"));
    size_t before = session->outstanding_bytes();
    CHECK(before == 0);

    ToolResponse big = session->handle_call("get_strings", {});
    REQUIRE(big.ok);
    std::string original = big.envelope();
    size_t held = session->outstanding_bytes();
    CHECK(held == original.size());
    REQUIRE(session->stored("t1") != nullptr);
    CHECK(*session->stored("t1") == original);

    ToolResponse ack = session->handle_call("discard_tool_result", {{"tag", "t1"}});
    CHECK(ack.ok);
    CHECK(ack.tag.empty());
    CHECK(ack.payload.at("status") == "ok");
    CHECK(session->outstanding_bytes() == 0); // memory released, observable
    REQUIRE(session->stored("t1") != nullptr);
    CHECK(*session->stored("t1") == kDiscardedPlaceholder);
    CHECK(*session->stored("t1") != original); // unrecoverable

    ToolResponse again = session->handle_call("discard_tool_result", {{"tag", "t1"}});
    CHECK(again.ok); // idempotent
    CHECK(*session->stored("t1") == kDiscardedPlaceholder);
    CHECK(session->outstanding_bytes() == 0);

    ToolResponse never = session->handle_call("discard_tool_result", {{"tag", "t999"}});
    CHECK(!never.ok);
    CHECK(never.payload.at("code") == "UnknownTag");
    CHECK(session->handle_call("discard_tool_result", {}).payload.at("code") ==
          "ParamValidation");
}

TEST_CASE("discarding one result leaves the others intact") {
    ServerCore core;
    auto session = core.open_session(fixture_path("elf_calls.bin"));
    std::string first = session->handle_call("list_functions", {}).envelope();
    std::string second = session->handle_call("get_strings", {}).envelope();
    session->handle_call("discard_tool_result", {{"tag", "t1"}});
    CHECK(*session->stored("t1") == kDiscardedPlaceholder);
    CHECK(*session->stored("t2") == second);
    CHECK(session->outstanding_bytes() == second.size());
    (void)first;
}

TEST_CASE("capabilities report version, methods, and regex dialect") {
    json caps = ServerCore::capabilities();
    CHECK(caps.at("version") == kServerVersion);
    CHECK(caps.at("regex_dialect") == "ecma-subset");
    auto methods = caps.at("methods").get<std::vector<std::string>>();
    CHECK(std::is_sorted(methods.begin(), methods.end()));
    for (const char* m :
         {"list_functions", "get_imports", "get_strings", "find_callers_of_import",
          "find_functions_referencing_string", "get_callees", "get_callers", "decompile",
          "get_pcode", "get_assembly", "get_cfg", "search_decompiled", "search_pcode",
          "search_assembly", "discard_tool_result"}) {
        CAPTURE(m);
        CHECK(std::find(methods.begin(), methods.end(), m) != methods.end());
    }
}

TEST_CASE("wire sessions bind a binary before answering queries") {
    ServerCore core;
    std::shared_ptr<Session> session;
    json early = json::parse(
        handle_wire_line(core, session, R"({"id":1,"method":"list_functions"})"));
    CHECK(early.at("payload").at("code") == "ParamValidation");
    CHECK(session == nullptr);

    json opened = json::parse(handle_wire_line(
        core, session,
        json{{"id", 2},
             {"method", "open"},
             {"params", {{"path", fixture_path("elf_calls.bin")}}}}
            .dump()));
    REQUIRE(session != nullptr);
    CHECK(opened.at("id") == 2);
    CHECK(opened.at("tag") == "");
    CHECK(opened.at("payload").at("session_id") == session->session_id());
    CHECK(opened.at("payload").at("strict") == false);

    json listed = json::parse(
        handle_wire_line(core, session, R"({"id":3,"method":"list_functions"})"));
    CHECK(listed.at("id") == 3);
    CHECK(listed.at("tag") == "t1");
    CHECK(listed.at("payload").at("total") == 4);

    json garbage = json::parse(handle_wire_line(core, session, "{nope"));
    CHECK(garbage.at("id").is_null());
    CHECK(garbage.at("payload").at("code") == "ParamValidation");

    json nomethod = json::parse(handle_wire_line(core, session, R"({"id":9})"));
    CHECK(nomethod.at("payload").at("code") == "ParamValidation");
    CHECK(nomethod.at("id") == 9);
}

TEST_CASE("stream serving answers one line per request") {
    ServerCore core;
    std::string feed;
    for (const std::string& line : scripted_requests(fixture_path("elf_imports.bin"))) {
        feed += line + "\n";
    }
    std::istringstream in(feed);
    std::ostringstream out;
    CHECK(serve_stream(core, in, out) == 0);
    std::string text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 10);
    CHECK(text == run_transcript_in_process(scripted_requests(fixture_path("elf_imports.bin"))));
}

TEST_CASE("scripted transcripts replay byte-identically") {
    auto requests = scripted_requests(fixture_path("elf_imports.bin"));
    std::string first = run_transcript_in_process(requests);
    std::string second = run_transcript_in_process(requests);
    CHECK(first == second);
    CHECK(first.find("\"tag\":\"t1\"") != std::string::npos);
    CHECK(first.find("UnknownMethod") == std::string::npos);

    // and the same bytes again over TCP, twice, on fresh servers
    int port_a = 43711, port_b = 43712;
    std::thread server_a([&] { serve_tcp("127.0.0.1:" + std::to_string(port_a), 1); });
    std::string tcp_a = run_transcript_over_tcp(port_a, requests);
    server_a.join();
    std::thread server_b([&] { serve_tcp("127.0.0.1:" + std::to_string(port_b), 1); });
    std::string tcp_b = run_transcript_over_tcp(port_b, requests);
    server_b.join();
    CHECK(tcp_a == tcp_b);
    CHECK(tcp_a == first);
}

TEST_CASE("the CLI and the service produce identical payloads") {
    std::string via_cli;
    REQUIRE(cli({"functions", fixture_path("elf_calls.bin").c_str()}, &via_cli) == 0);

    ServerCore core;
    auto session = core.open_session(fixture_path("elf_calls.bin"));
    ToolResponse r = session->handle_call("list_functions", {});
    CHECK(via_cli == r.envelope() + "\n");
}

TEST_CASE("cli subcommands mirror the query methods") {
    std::string path = fixture_path("elf_imports.bin");
    std::string out;

    REQUIRE(cli({"imports", path.c_str(), "--limit", "2"}, &out) == 0);
    json imports = json::parse(out.substr(out.find(' ') + 1));
    CHECK(imports.at("items") == json({"free", "memcpy"}));
    CHECK(imports.at("next_offset") == 2);

    REQUIRE(cli({"callers-of", path.c_str(), "strlen"}, &out) == 0);
    CHECK(json::parse(out.substr(out.find(' ') + 1)) == json({"exported_helper"}));

    REQUIRE(cli({"decompile", path.c_str(), "exported_helper"}, &out) == 0);
    CHECK(out.rfind("[tag=t1] ", 0) == 0);
    CHECK(out.find("strlen(") != std::string::npos);

    REQUIRE(cli({"cfg", path.c_str(), "sub_401012"}, &out) == 0);
    json cfg = json::parse(out.substr(out.find(' ') + 1));
    CHECK(cfg.at("function") == "sub_401012");
    CHECK(cfg.at("entry_block") == "blk_0");

    REQUIRE(cli({"search", path.c_str(), "--repr", "pcode", "--pattern", "CALL memcpy"},
                &out) == 0);
    json found = json::parse(out.substr(out.find(' ') + 1));
    CHECK(found.at("total_match_count") == 1);

    REQUIRE(cli({"refs", fixture_path("elf_strings.bin").c_str(), "VERSION"}, &out) == 0);
    CHECK(json::parse(out.substr(out.find(' ') + 1)) == json({"sub_40100f"}));
    REQUIRE(cli({"refs", fixture_path("elf_strings.bin").c_str(), "VERSION",
                 "--case-sensitive"},
                &out) == 0);
    CHECK(json::parse(out.substr(out.find(' ') + 1)) == json::array());

    REQUIRE(cli({"functions", path.c_str(), "--strict"}, &out) == 0);
    json strict = json::parse(out.substr(out.find(' ') + 1));
    CHECK(strict.at("items").at(1).at("name") == "sub_401029");
}

TEST_CASE("cli exit codes separate method errors from usage errors") {
    std::string path = fixture_path("elf_calls.bin");
    std::string out;

    CHECK(cli({"search", path.c_str(), "--pattern", "(bad"}, &out) == 1);
    CHECK(out.find("InvalidPattern") != std::string::npos);

    CHECK(cli({"decompile", path.c_str(), "ghost"}, &out) == 1);
    CHECK(out.find("UnknownName") != std::string::npos);

    CHECK(cli({"functions", "/no/such/file"}, &out) == 1);
    CHECK(out.find("NotABinary") != std::string::npos);

    CHECK(cli({"bogus-subcommand"}) == 2);
    CHECK(cli({"functions"}) == 2);                      // missing path
    CHECK(cli({"search", path.c_str()}) == 2);           // missing --pattern
    CHECK(cli({"search", path.c_str(), "--repr", "emoji", "--pattern", "x"}) == 2);
    CHECK(cli({}) == 2);                                 // no subcommand
    CHECK(cli({"serve"}) == 2);                          // neither --addr nor --stdio
}

TEST_CASE("queries are read-only: repeated calls see identical analysis") {
    ServerCore core;
    auto session = core.open_session(fixture_path("elf_imports.bin"));
    std::string a = session->handle_call("get_pcode", {{"name", "sub_401012"}})
                        .payload.dump();
    session->handle_call("discard_tool_result", {{"tag", "t1"}});
    std::string b = session->handle_call("get_pcode", {{"name", "sub_401012"}})
                        .payload.dump();
    CHECK(a == b);
}

#pragma once

#include "binoracle/container.hpp"
#include "binoracle/flow.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace binoracle {

struct FunctionInfo {
    std::string name;
    std::string address; // hex text, "0x401000"
    uint64_t size_bytes = 0;
    int num_blocks = 0;
    bool operator==(const FunctionInfo&) const = default;
};

template <typename T>
struct Page {
    std::vector<T> items;
    int64_t total = 0;
    int64_t offset = 0;
    int64_t returned = 0;
    std::optional<int64_t> next_offset;
};

struct SearchMatch {
    std::string function;
    int line_number = 0; // 1-based within the rendered text
    std::string line_content;
    std::string match_text;
};

struct FunctionMatches {
    std::string function;
    int match_count = 0;
    std::vector<SearchMatch> matches;
};

struct SearchResults {
    std::vector<FunctionMatches> results;
    int total_match_count = 0;
    bool truncated = false;
    int64_t limit = 0;
};

// Rejects constructs outside the supported dialect (lookaround, backrefs,
// named groups) and anything std::regex cannot compile. Throws InvalidPattern.
void validate_pattern(const std::string& pattern);

// Cache location: BINORACLE_CACHE_DIR, else a binoracle-cache directory under
// the system temp path.
std::string cache_directory();

extern const int kAnalysisFormatVersion;

// Read-only query interface over one binary's cached analysis. All state is
// built (or loaded) at open; every method afterwards is a pure lookup, safe
// for concurrent readers.
class ApiHandle {
public:
    // strict=true ignores any surviving symbol names (synthetic names only)
    // and caches under a separate key.
    static ApiHandle open(const std::string& path, bool strict = false);

    Page<FunctionInfo> list_functions(int64_t offset = 0, int64_t limit = 100) const;
    Page<std::string> get_imports(int64_t offset = 0, int64_t limit = 100) const;
    Page<std::string> get_strings(int64_t offset = 0, int64_t limit = 100) const;

    std::vector<std::string> find_callers_of_import(const std::string& name) const;
    std::vector<std::string> find_functions_referencing_string(
        const std::string& needle, bool case_sensitive = false) const;

    std::vector<std::string> get_callees(const std::string& func) const;
    std::vector<std::string> get_callers(const std::string& func) const;

    std::string decompile(const std::string& func) const;
    std::string get_pcode(const std::string& func) const;
    std::string get_assembly(const std::string& func) const;
    Cfg get_cfg(const std::string& func) const;

    SearchResults search_decompiled(const std::string& pattern, int64_t limit = 200) const;
    SearchResults search_pcode(const std::string& pattern, int64_t limit = 200) const;
    SearchResults search_assembly(const std::string& pattern, int64_t limit = 200) const;

    bool loaded_from_cache() const { return from_cache_; }
    const nlohmann::json& payload() const { return payload_; }

private:
    SearchResults search(const std::string& repr, const std::string& pattern,
                         int64_t limit) const;
    const nlohmann::json& function_entry(const std::string& func) const;

    nlohmann::json payload_;
    bool from_cache_ = false;
};

} // namespace binoracle

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace binoracle::fuzzysim {

// Locality-sensitive digest over raw bytes: 5-byte sliding window feeding
// Pearson-mapped trigram buckets (128 effective), quartile-coded body,
// length/quartile-ratio header. Serialized form is 72 uppercase hex chars
// behind the "T1" version prefix; distances are interoperable with existing
// TLSH tooling.
struct FuzzyDigest {
    uint8_t checksum = 0;
    uint8_t lvalue = 0;     // log-bucketed input length
    uint8_t q1_ratio = 0;   // quartile ratios, 4 bits each
    uint8_t q2_ratio = 0;
    std::array<uint8_t, 32> code{}; // 128 two-bit bucket codes

    std::string hex() const;
    static FuzzyDigest from_hex(const std::string& text);

    bool operator==(const FuzzyDigest&) const = default;
};

// Errors: InputTooSmall (< 50 bytes), DegenerateInput (bucket quartiles
// collapse, e.g. all-identical bytes).
FuzzyDigest digest(const uint8_t* data, size_t len);
FuzzyDigest digest(const std::vector<uint8_t>& data);

// Header distance + weighted two-bit body distance; symmetric. By default the
// length component participates, matching common tooling.
int distance(const FuzzyDigest& a, const FuzzyDigest& b, bool include_length = true);

// Fraction of distances at or below the similarity threshold.
double threshold_fraction(const std::vector<int>& distances, int threshold = 100);

struct PairStats {
    double intra_mean = 0.0;
    double inter_mean = 0.0;
    double cohens_d = 0.0;
    // Symmetric; diagonal cells are intra-package fractions. Cells with too
    // little data are absent rather than zero.
    std::map<std::pair<std::string, std::string>, double> matrix;
};

PairStats package_mean_matrix(const std::map<std::string, std::vector<FuzzyDigest>>& corpus,
                              int threshold = 100);

// Standardized mean difference with size-pooled unbiased variances.
double cohens_d(const std::vector<double>& intra, const std::vector<double>& inter);

} // namespace binoracle::fuzzysim

#include "binoracle/fuzzysim.hpp"

#include "binoracle/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace binoracle::fuzzysim {
namespace {

// Pearson's sample random table.
constexpr uint8_t kPearson[256] = {
    1,   87,  49,  12,  176, 178, 102, 166, 121, 193, 6,   84,  249, 230, 44,  163,
    14,  197, 213, 181, 161, 85,  218, 80,  64,  239, 24,  226, 236, 142, 38,  200,
    110, 177, 104, 103, 141, 253, 255, 50,  77,  101, 81,  18,  45,  96,  31,  222,
    25,  107, 190, 70,  86,  237, 240, 34,  72,  242, 20,  214, 244, 227, 149, 235,
    97,  234, 57,  22,  60,  250, 82,  175, 208, 5,   127, 199, 111, 62,  135, 248,
    174, 169, 211, 58,  66,  154, 106, 195, 245, 171, 17,  187, 182, 179, 0,   243,
    132, 56,  148, 75,  128, 133, 158, 100, 130, 126, 91,  13,  153, 246, 216, 219,
    119, 68,  223, 78,  83,  88,  201, 99,  122, 11,  92,  32,  136, 114, 52,  10,
    138, 30,  48,  183, 156, 35,  61,  26,  143, 74,  251, 94,  129, 162, 63,  152,
    170, 7,   115, 167, 241, 206, 3,   150, 55,  59,  151, 220, 90,  53,  23,  131,
    125, 173, 15,  238, 79,  95,  89,  16,  105, 137, 225, 224, 217, 160, 37,  123,
    118, 73,  2,   157, 46,  116, 9,   145, 134, 228, 207, 212, 202, 215, 69,  229,
    27,  188, 67,  124, 168, 252, 42,  4,   29,  108, 21,  247, 19,  205, 39,  203,
    233, 40,  186, 147, 198, 192, 155, 33,  164, 191, 98,  204, 165, 180, 117, 76,
    140, 36,  210, 172, 41,  54,  159, 8,   185, 232, 113, 196, 231, 47,  146, 120,
    51,  65,  28,  144, 254, 221, 93,  189, 194, 139, 112, 43,  71,  109, 184, 209,
};

// b_mapping with the first table step precomputed into the salt.
inline uint8_t pearson_hash(uint8_t salt, uint8_t i, uint8_t j, uint8_t k) {
    uint8_t h = salt;
    h = kPearson[h ^ i];
    h = kPearson[h ^ j];
    h = kPearson[h ^ k];
    return h;
}

constexpr size_t kBuckets = 128; // effective buckets (256 computed, low half coded)
constexpr size_t kCodeSize = 32; // kBuckets / 4 bucket codes per byte
constexpr size_t kMinInput = 50;

// Bucketed length capture; boundaries grow ~10%/step beyond the dense start.
constexpr uint32_t kTopval[170] = {
    1,          2,          3,          5,          7,          11,         17,
    25,         38,         57,         86,         129,        194,        291,
    437,        656,        854,        1110,       1443,       1876,       2439,
    3171,       3475,       3823,       4205,       4626,       5088,       5597,
    6157,       6772,       7450,       8195,       9014,       9916,       10907,
    11998,      13198,      14518,      15970,      17567,      19323,      21256,
    23382,      25720,      28292,      31121,      34233,      37656,      41422,
    45564,      50121,      55133,      60646,      66711,      73382,      80721,
    88793,      97672,      107439,     118183,     130002,     143002,     157302,
    173032,     190335,     209369,     230306,     253337,     278670,     306538,
    337191,     370911,     408002,     448802,     493682,     543050,     597356,
    657091,     722800,     795081,     874589,     962048,     1058252,    1164078,
    1280486,    1408534,    1549388,    1704327,    1874759,    2062236,    2268459,
    2495305,    2744836,    3019320,    3321252,    3653374,    4018711,    4420582,
    4862641,    5348905,    5883796,    6472176,    7119394,    7831333,    8614467,
    9475909,    10423501,   11465851,   12612437,   13873681,   15261050,   16787154,
    18465870,   20312458,   22343706,   24578077,   27035886,   29739474,   32713425,
    35984770,   39583245,   43541573,   47895730,   52685306,   57953837,   63749221,
    70124148,   77136564,   84850228,   93335252,   102668779,  112935659,  124229227,
    136652151,  150317384,  165349128,  181884040,  200072456,  220079703,  242087671,
    266296456,  292926096,  322218735,  354440623,  389884688,  428873168,  471760495,
    518936559,  570830240,  627913311,  690704607,  759775136,  835752671,  919327967,
    1011260767, 1112386880, 1223623232, 1345985727, 1480584256, 1628642751, 1791507135,
    1970657856, 2167723648, 2384496256, 2622945920, 2885240448, 3173764736, 3491141248,
    3840255616, 4224281216,
};

uint8_t l_capturing(uint32_t len) {
    int bottom = 0;
    int top = 170;
    int idx = 85;
    for (;;) {
        if (idx == 0) return static_cast<uint8_t>(idx);
        if (len <= kTopval[idx] && len > kTopval[idx - 1]) return static_cast<uint8_t>(idx);
        if (len < kTopval[idx]) {
            top = idx - 1;
        } else {
            bottom = idx + 1;
        }
        idx = (bottom + top) / 2;
    }
}

inline uint8_t swap_nibbles(uint8_t c) {
    return static_cast<uint8_t>(((c & 0xF0) >> 4) | ((c & 0x0F) << 4));
}

int mod_diff(unsigned x, unsigned y, unsigned range) {
    unsigned dl = x > y ? x - y : y - x;
    unsigned dr = range - dl;
    return static_cast<int>(std::min(dl, dr));
}

// 2-bit code pair difference; opposite quartile extremes weigh 6.
int bit_pairs_diff(uint8_t a, uint8_t b) {
    static const int table[4][4] = {{0, 1, 2, 6}, {1, 0, 1, 2}, {2, 1, 0, 1}, {6, 2, 1, 0}};
    int total = 0;
    for (int shift = 0; shift < 8; shift += 2) {
        total += table[(a >> shift) & 3][(b >> shift) & 3];
    }
    return total;
}

char hex_digit(unsigned v) { return "0123456789ABCDEF"[v & 0xF]; }

unsigned parse_hex_digit(char c) {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    fail("VersionMismatch", "digest text contains a non-hex character");
}

void append_hex_byte(std::string& s, uint8_t b) {
    s.push_back(hex_digit(b >> 4));
    s.push_back(hex_digit(b & 0xF));
}

} // namespace

std::string FuzzyDigest::hex() const {
    std::string out = "T1";
    append_hex_byte(out, swap_nibbles(checksum));
    append_hex_byte(out, swap_nibbles(lvalue));
    append_hex_byte(out, static_cast<uint8_t>((q1_ratio << 4) | q2_ratio));
    for (size_t i = code.size(); i > 0; --i) append_hex_byte(out, code[i - 1]);
    return out;
}

FuzzyDigest FuzzyDigest::from_hex(const std::string& text) {
    if (text.size() != 72 || text[0] != 'T' || text[1] != '1') {
        fail("VersionMismatch", "expected a 72-char T1 digest, got \"" + text + "\"");
    }
    auto byte_at = [&](size_t pos) {
        return static_cast<uint8_t>((parse_hex_digit(text[pos]) << 4) |
                                    parse_hex_digit(text[pos + 1]));
    };
    FuzzyDigest d;
    d.checksum = swap_nibbles(byte_at(2));
    d.lvalue = swap_nibbles(byte_at(4));
    uint8_t qb = byte_at(6);
    d.q1_ratio = qb >> 4;
    d.q2_ratio = qb & 0x0F;
    for (size_t i = 0; i < d.code.size(); ++i) {
        d.code[d.code.size() - 1 - i] = byte_at(8 + 2 * i);
    }
    return d;
}

FuzzyDigest digest(const uint8_t* data, size_t len) {
    if (len < kMinInput) {
        fail("InputTooSmall",
             "need at least 50 bytes, got " + std::to_string(len));
    }

    std::array<uint32_t, 256> buckets{};
    uint8_t checksum = 0;
    // window[0..3] = previous four bytes, most recent first.
    uint8_t w1 = 0, w2 = 0, w3 = 0, w4 = 0;
    for (size_t pos = 0; pos < len; ++pos) {
        uint8_t b0 = data[pos];
        if (pos >= 4) {
            checksum = pearson_hash(1, b0, w1, checksum);
            ++buckets[pearson_hash(49, b0, w1, w2)];
            ++buckets[pearson_hash(12, b0, w1, w3)];
            ++buckets[pearson_hash(84, b0, w1, w4)];
            ++buckets[pearson_hash(178, b0, w2, w3)];
            ++buckets[pearson_hash(166, b0, w2, w4)];
            ++buckets[pearson_hash(230, b0, w3, w4)];
        }
        w4 = w3;
        w3 = w2;
        w2 = w1;
        w1 = b0;
    }

    std::array<uint32_t, kBuckets> sorted;
    std::copy_n(buckets.begin(), kBuckets, sorted.begin());
    std::sort(sorted.begin(), sorted.end());
    uint32_t q1 = sorted[kBuckets / 4 - 1];
    uint32_t q2 = sorted[kBuckets / 2 - 1];
    uint32_t q3 = sorted[kBuckets - kBuckets / 4 - 1];

    if (q3 == 0) {
        fail("DegenerateInput", "bucket quartiles collapsed (uniform or near-constant input)");
    }
    size_t nonzero = 0;
    for (size_t i = 0; i < kBuckets; ++i) {
        if (buckets[i] > 0) ++nonzero;
    }
    if (nonzero <= 2 * kCodeSize) {
        fail("DegenerateInput",
             "too few populated buckets (" + std::to_string(nonzero) + "/128)");
    }

    FuzzyDigest d;
    d.checksum = checksum;
    d.lvalue = l_capturing(static_cast<uint32_t>(len));
    // Truncating float division mirrors reference digests bit-for-bit.
    d.q1_ratio = static_cast<uint8_t>(
        static_cast<uint32_t>(static_cast<float>(q1 * 100) / static_cast<float>(q3)) % 16);
    d.q2_ratio = static_cast<uint8_t>(
        static_cast<uint32_t>(static_cast<float>(q2 * 100) / static_cast<float>(q3)) % 16);
    for (size_t i = 0; i < kCodeSize; ++i) {
        uint8_t h = 0;
        for (size_t j = 0; j < 4; ++j) {
            uint32_t count = buckets[4 * i + j];
            if (q3 < count) {
                h += 3 << (j * 2);
            } else if (q2 < count) {
                h += 2 << (j * 2);
            } else if (q1 < count) {
                h += 1 << (j * 2);
            }
        }
        d.code[i] = h;
    }
    return d;
}

FuzzyDigest digest(const std::vector<uint8_t>& data) {
    return digest(data.data(), data.size());
}

int distance(const FuzzyDigest& a, const FuzzyDigest& b, bool include_length) {
    int diff = 0;
    if (include_length) {
        int ldiff = mod_diff(a.lvalue, b.lvalue, 256);
        if (ldiff > 1) {
            diff = ldiff * 12;
        } else {
            diff = ldiff;
        }
    }
    int q1diff = mod_diff(a.q1_ratio, b.q1_ratio, 16);
    diff += q1diff <= 1 ? q1diff : (q1diff - 1) * 12;
    int q2diff = mod_diff(a.q2_ratio, b.q2_ratio, 16);
    diff += q2diff <= 1 ? q2diff : (q2diff - 1) * 12;
    if (a.checksum != b.checksum) diff += 1;
    for (size_t i = 0; i < a.code.size(); ++i) {
        diff += bit_pairs_diff(a.code[i], b.code[i]);
    }
    return diff;
}

double threshold_fraction(const std::vector<int>& distances, int threshold) {
    if (distances.empty()) fail("EmptySet", "threshold_fraction over zero pairs");
    size_t hits = 0;
    for (int d : distances) {
        if (d <= threshold) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(distances.size());
}

double cohens_d(const std::vector<double>& intra, const std::vector<double>& inter) {
    if (intra.size() < 2 || inter.size() < 2) {
        fail("DegenerateVariance", "cohens_d needs at least two samples per group");
    }
    auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    auto ssq = [](const std::vector<double>& v, double m) {
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return s;
    };
    double m1 = mean(intra);
    double m2 = mean(inter);
    double pooled_var = (ssq(intra, m1) + ssq(inter, m2)) /
                        static_cast<double>(intra.size() + inter.size() - 2);
    if (pooled_var <= 0.0) {
        fail("DegenerateVariance", "pooled standard deviation is zero");
    }
    return (m1 - m2) / std::sqrt(pooled_var);
}

PairStats package_mean_matrix(const std::map<std::string, std::vector<FuzzyDigest>>& corpus,
                              int threshold) {
    if (corpus.size() < 2) {
        fail("InsufficientData", "package matrix needs at least two packages");
    }
    PairStats stats;
    std::vector<double> intra_scores;
    std::vector<double> inter_scores;
    for (auto a = corpus.begin(); a != corpus.end(); ++a) {
        for (auto b = a; b != corpus.end(); ++b) {
            std::vector<int> dists;
            if (a == b) {
                const auto& ds = a->second;
                for (size_t i = 0; i < ds.size(); ++i) {
                    for (size_t j = i + 1; j < ds.size(); ++j) {
                        dists.push_back(distance(ds[i], ds[j]));
                    }
                }
            } else {
                for (const auto& da : a->second) {
                    for (const auto& db : b->second) {
                        dists.push_back(distance(da, db));
                    }
                }
            }
            if (dists.empty()) continue; // cell absent, not zero
            double frac = threshold_fraction(dists, threshold);
            stats.matrix[{a->first, b->first}] = frac;
            stats.matrix[{b->first, a->first}] = frac;
            auto& sink = (a == b) ? intra_scores : inter_scores;
            for (int d : dists) sink.push_back(d <= threshold ? 1.0 : 0.0);
        }
    }
    auto mean_of = [](const std::vector<double>& v) {
        return v.empty() ? 0.0
                         : std::accumulate(v.begin(), v.end(), 0.0) /
                               static_cast<double>(v.size());
    };
    stats.intra_mean = mean_of(intra_scores);
    stats.inter_mean = mean_of(inter_scores);
    stats.cohens_d = cohens_d(intra_scores, inter_scores);
    return stats;
}

} // namespace binoracle::fuzzysim

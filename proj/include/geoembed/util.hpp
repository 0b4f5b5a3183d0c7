#ifndef GEOEMBED_UTIL_HPP
#define GEOEMBED_UTIL_HPP

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace geoembed {

// Input/config validation problems. The CLI maps these to exit code 2.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A required upstream artifact is absent. The CLI maps these to exit code 3.
struct MissingArtifactError : std::runtime_error {
    explicit MissingArtifactError(const std::string& msg) : std::runtime_error(msg) {}
};

std::vector<std::string> split(std::string_view s, char delim);

// Unicode-aware lowercase + whitespace trim for tag normalization.
// ASCII fast path; multi-byte UTF-8 is lowercased for Latin-1 supplement
// and passed through otherwise.
std::string normalize_tag(std::string_view raw);

// Round-trippable double formatting, used everywhere a number is written to
// an artifact so that reruns are byte-identical.
std::string fmt_double(double v);

bool parse_double(std::string_view s, double& out);
bool parse_long(std::string_view s, long& out);

// FNV-1a, used for config hashes embedded in artifact headers.
std::uint64_t fnv1a(std::string_view data);

std::string read_text_file(const std::string& path);

}  // namespace geoembed

#endif

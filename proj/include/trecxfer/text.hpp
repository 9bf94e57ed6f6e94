#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace trecxfer::text {

/// Lowercases ASCII letters and splits on every run of non-alphanumeric ASCII.
/// Bytes >= 0x80 count as word characters so UTF-8 words stay whole.
inline std::vector<std::string> tokenize(std::string_view s)
{
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : s) {
        auto c = static_cast<unsigned char>(ch);
        bool word = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
        if (word) {
            cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) {
        tokens.push_back(std::move(cur));
    }
    return tokens;
}

/// Calls fn(ngram) for every contiguous n-gram with 1 <= n <= n_max, tokens joined by one space.
template <class Fn>
void for_each_ngram(const std::vector<std::string>& tokens, int n_max, Fn&& fn)
{
    std::string gram;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        gram.clear();
        for (int n = 1; n <= n_max && i + static_cast<std::size_t>(n) <= tokens.size(); ++n) {
            if (n > 1) {
                gram.push_back(' ');
            }
            gram += tokens[i + static_cast<std::size_t>(n) - 1];
            fn(std::string_view(gram));
        }
    }
}

/// 64-bit FNV-1a; stable across platforms and runs.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL)
{
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace trecxfer::text

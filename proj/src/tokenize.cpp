#include <array>

#include "sentpool/data.hpp"

namespace sentpool {

namespace {

bool is_word_byte(unsigned char c) noexcept {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

bool is_space(unsigned char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_punct(unsigned char c) noexcept {
    return c >= 0x21 && c <= 0x7e && !is_word_byte(c);
}

constexpr std::array<std::string_view, 6> kClitics = {"s", "ve", "re", "d", "ll", "m"};

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::string lower(text);
    for (auto& c : lower) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    const std::string_view s = lower;
    const std::size_t n = s.size();
    auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };

    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < n) {
        const unsigned char c = byte(i);
        if (is_space(c)) {
            ++i;
        } else if (is_word_byte(c)) {
            std::size_t j = i;
            while (j < n && is_word_byte(byte(j))) ++j;
            const bool negation = s[j - 1] == 'n' && j + 1 < n && s[j] == '\'' && s[j + 1] == 't' &&
                                  (j + 2 >= n || !is_word_byte(byte(j + 2)));
            if (negation) {
                if (j - 1 > i) tokens.emplace_back(s.substr(i, j - 1 - i));
                tokens.emplace_back("n't");
                i = j + 2;
            } else {
                tokens.emplace_back(s.substr(i, j - i));
                i = j;
            }
        } else if (c == '\'') {
            std::size_t j = i + 1;
            while (j < n && is_word_byte(byte(j))) ++j;
            const std::string_view suffix = s.substr(i + 1, j - i - 1);
            bool clitic = false;
            for (auto k : kClitics) clitic = clitic || suffix == k;
            if (clitic) {
                tokens.emplace_back(s.substr(i, j - i));
                i = j;
            } else {
                tokens.emplace_back("'");
                ++i;
            }
        } else {
            if (is_punct(c)) tokens.emplace_back(1, static_cast<char>(c));
            ++i;
        }
    }
    return tokens;
}

std::pair<std::string, std::size_t> sanitize_utf8(std::string_view raw) {
    static constexpr std::string_view kReplacement = "\xEF\xBF\xBD";
    std::string out;
    out.reserve(raw.size());
    std::size_t replaced = 0;
    const std::size_t n = raw.size();
    auto byte = [&](std::size_t i) { return static_cast<unsigned char>(raw[i]); };
    auto cont = [&](std::size_t i) { return i < n && (byte(i) & 0xC0) == 0x80; };

    std::size_t i = 0;
    while (i < n) {
        const unsigned char c = byte(i);
        std::size_t len = 0;
        if (c < 0x80) {
            len = 1;
        } else if (c >= 0xC2 && c <= 0xDF) {
            len = cont(i + 1) ? 2 : 0;
        } else if (c >= 0xE0 && c <= 0xEF) {
            if (cont(i + 1) && cont(i + 2)) {
                const unsigned char c1 = byte(i + 1);
                const bool overlong = c == 0xE0 && c1 < 0xA0;
                const bool surrogate = c == 0xED && c1 >= 0xA0;
                len = overlong || surrogate ? 0 : 3;
            }
        } else if (c >= 0xF0 && c <= 0xF4) {
            if (cont(i + 1) && cont(i + 2) && cont(i + 3)) {
                const unsigned char c1 = byte(i + 1);
                const bool overlong = c == 0xF0 && c1 < 0x90;
                const bool too_big = c == 0xF4 && c1 >= 0x90;
                len = overlong || too_big ? 0 : 4;
            }
        }
        if (len == 0) {
            out += kReplacement;
            ++replaced;
            ++i;
        } else {
            out.append(raw.substr(i, len));
            i += len;
        }
    }
    return {std::move(out), replaced};
}

}  // namespace sentpool

#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace schemalink {

inline bool ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool ascii_alnum(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

inline char ascii_lower_char(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

inline std::string ascii_lower(std::string_view text) {
    std::string out(text);
    for (char& c : out) c = ascii_lower_char(c);
    return out;
}

inline std::string_view trim(std::string_view text) {
    while (!text.empty() && ascii_space(text.front())) text.remove_prefix(1);
    while (!text.empty() && ascii_space(text.back())) text.remove_suffix(1);
    return text;
}

/// Splits on any non-alphanumeric byte, dropping empty pieces.
inline std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::string current;
    for (char c : text) {
        if (ascii_alnum(c)) {
            current.push_back(ascii_lower_char(c));
        } else if (!current.empty()) {
            words.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

}  // namespace schemalink

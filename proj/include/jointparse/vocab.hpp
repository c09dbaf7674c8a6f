#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <unordered_map>
#include <vector>

namespace jointparse {

inline std::string lowercased(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

// Splits a UTF-8 string into codepoint substrings; malformed bytes fall back
// to single-byte pieces.
inline std::vector<std::string> utf8_chars(const std::string& s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        std::size_t len = 1;
        if ((c & 0x80u) == 0) len = 1;
        else if ((c & 0xE0u) == 0xC0u) len = 2;
        else if ((c & 0xF0u) == 0xE0u) len = 3;
        else if ((c & 0xF8u) == 0xF0u) len = 4;
        if (i + len > s.size()) len = 1;
        out.push_back(s.substr(i, len));
        i += len;
    }
    return out;
}

// Insertion-ordered string <-> dense id map.
class StrMap {
public:
    int add(const std::string& s) {
        auto it = ids_.find(s);
        if (it != ids_.end()) return it->second;
        const int id = static_cast<int>(strings_.size());
        strings_.push_back(s);
        ids_.emplace(s, id);
        return id;
    }

    int find(const std::string& s) const {
        auto it = ids_.find(s);
        return it == ids_.end() ? -1 : it->second;
    }

    const std::string& str(int id) const { return strings_.at(id); }
    int size() const { return static_cast<int>(strings_.size()); }
    const std::vector<std::string>& strings() const { return strings_; }

private:
    std::vector<std::string> strings_;
    std::unordered_map<std::string, int> ids_;
};

// Inventories built from a training corpus. Word and character maps reserve
// id 0 for unknowns; tag and label inventories need no unknown entry because
// the classifiers only ever emit ids from the training inventory.
struct Vocab {
    static constexpr const char* kUnknown = "<unk>";
    static constexpr int kUnknownId = 0;

    StrMap words;   // lowercased forms
    StrMap tags;
    StrMap labels;
    StrMap chars;   // UTF-8 codepoints of the original forms
    std::vector<long> word_freq;  // by word id
    int min_word_count = 1;

    Vocab() {
        words.add(kUnknown);
        chars.add(kUnknown);
        word_freq.push_back(0);
    }

    // Lookup with the unknown fallback; rare words (corpus frequency below
    // min_word_count) also fall back so their embeddings are never trained.
    int word_id(const std::string& form) const {
        const int id = words.find(lowercased(form));
        if (id < 0) return kUnknownId;
        if (id != kUnknownId && word_freq[id] < min_word_count) return kUnknownId;
        return id;
    }

    int char_id(const std::string& cp) const {
        const int id = chars.find(cp);
        return id < 0 ? kUnknownId : id;
    }

    long frequency(const std::string& form) const {
        const int id = words.find(lowercased(form));
        return id < 0 ? 0 : word_freq[id];
    }
};

}  // namespace jointparse

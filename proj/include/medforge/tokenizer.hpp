#pragma once

// Pluggable tokenization. The default tokenizer lowercases ASCII letters and
// splits on non-alphanumeric ASCII; any non-ASCII UTF-8 sequence counts as
// word material so multibyte characters are never split. A subword tokenizer
// can be registered under its own id to match an external setup.

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "medforge/util.hpp"

namespace medforge {

class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
    virtual std::string id() const = 0;
};

class DefaultTokenizer final : public Tokenizer {
public:
    static constexpr const char* kId = "lower-alnum/1";

    std::vector<std::string> tokenize(std::string_view text) const override {
        std::vector<std::string> out;
        std::string cur;
        auto flush = [&] {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        };
        size_t i = 0;
        while (i < text.size()) {
            unsigned char c = static_cast<unsigned char>(text[i]);
            if (c < 0x80) {
                if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
                    cur.push_back(static_cast<char>(c));
                } else if (c >= 'A' && c <= 'Z') {
                    cur.push_back(static_cast<char>(c - 'A' + 'a'));
                } else {
                    flush();
                }
                ++i;
            } else {
                size_t len = utf8_len(c);
                if (len == 0) {
                    flush();  // stray continuation byte, treat as separator
                    ++i;
                } else {
                    len = std::min(len, text.size() - i);
                    cur.append(text.substr(i, len));
                    i += len;
                }
            }
        }
        flush();
        return out;
    }

    std::string id() const override { return kId; }

private:
    static size_t utf8_len(unsigned char lead) {
        if ((lead & 0xE0) == 0xC0) return 2;
        if ((lead & 0xF0) == 0xE0) return 3;
        if ((lead & 0xF8) == 0xF0) return 4;
        return 0;
    }
};

inline std::shared_ptr<const Tokenizer> make_tokenizer(const std::string& id) {
    if (id == DefaultTokenizer::kId || id.empty()) {
        return std::make_shared<DefaultTokenizer>();
    }
    throw Error("unknown tokenizer id: " + id);
}

}  // namespace medforge

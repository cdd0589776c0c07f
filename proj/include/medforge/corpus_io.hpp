#pragma once

// Line-delimited JSON persistence: one record per line, UTF-8, LF endings.
// Readers and writers stream; memory use does not grow with corpus length
// (apart from the duplicate-id guard).

#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "medforge/chat_record.hpp"
#include "medforge/util.hpp"

namespace medforge {

class CorpusError : public Error {
public:
    CorpusError(const std::string& what, size_t line) : Error(what), line_(line) {}
    size_t line() const { return line_; }

private:
    size_t line_ = 0;
};

class CorpusReader {
public:
    explicit CorpusReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_.is_open()) throw Error("cannot open corpus: " + path);
    }

    // Next record in file order; nullopt at end. Blank lines are skipped.
    std::optional<ChatRecord> next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim_view(line).empty()) continue;
            ChatRecord r;
            try {
                r = record_from_json(Json::parse(line));
            } catch (const Json::parse_error& e) {
                throw CorpusError(path_ + ":" + std::to_string(line_) + ": invalid JSON: " + e.what(), line_);
            } catch (const Error& e) {
                throw CorpusError(path_ + ":" + std::to_string(line_) + ": " + e.what(), line_);
            }
            if (!seen_ids_.insert(r.id).second) {
                throw CorpusError(path_ + ":" + std::to_string(line_) + ": duplicate id '" + r.id + "'", line_);
            }
            return r;
        }
        return std::nullopt;
    }

    size_t line_number() const { return line_; }

private:
    std::string path_;
    std::ifstream in_;
    size_t line_ = 0;
    std::unordered_set<std::string> seen_ids_;
};

class CorpusWriter {
public:
    explicit CorpusWriter(const std::string& path) : path_(path), tmp_path_(path + ".tmp") {
        std::filesystem::path parent = std::filesystem::path(path).parent_path();
        if (!parent.empty()) {
            std::error_code ec;
            std::filesystem::create_directories(parent, ec);
        }
        out_.open(tmp_path_, std::ios::binary | std::ios::trunc);
        if (!out_.is_open()) throw Error("cannot open corpus for writing: " + tmp_path_);
    }

    ~CorpusWriter() {
        if (!committed_) {
            out_.close();
            std::error_code ec;
            std::filesystem::remove(tmp_path_, ec);
        }
    }

    void write(const ChatRecord& r) {
        if (auto bad = violated_invariant(r)) {
            throw Error("record '" + r.id + "' violates invariant: " + *bad);
        }
        if (!seen_ids_.insert(r.id).second) {
            throw Error("record '" + r.id + "' violates invariant: duplicate id");
        }
        out_ << record_to_json(r).dump() << '\n';
        if (!out_.good()) throw Error("write failed: " + tmp_path_);
        ++count_;
    }

    // Flushes and renames the temp file over the target path.
    size_t commit() {
        out_.close();
        std::error_code ec;
        std::filesystem::rename(tmp_path_, path_, ec);
        if (ec) throw Error("rename failed for " + path_ + ": " + ec.message());
        committed_ = true;
        return count_;
    }

    size_t count() const { return count_; }

private:
    std::string path_;
    std::string tmp_path_;
    std::ofstream out_;
    size_t count_ = 0;
    bool committed_ = false;
    std::unordered_set<std::string> seen_ids_;
};

inline std::vector<ChatRecord> read_corpus(const std::string& path) {
    CorpusReader reader(path);
    std::vector<ChatRecord> out;
    while (auto r = reader.next()) out.push_back(std::move(*r));
    return out;
}

inline size_t for_each_record(const std::string& path,
                              const std::function<void(ChatRecord&&)>& fn) {
    CorpusReader reader(path);
    size_t n = 0;
    while (auto r = reader.next()) {
        fn(std::move(*r));
        ++n;
    }
    return n;
}

template <class Range>
size_t write_corpus(const Range& records, const std::string& path) {
    CorpusWriter writer(path);
    for (const ChatRecord& r : records) writer.write(r);
    return writer.commit();
}

// ---------------------------------------------------------------------------
// Guideline document files share the line-delimited layout.

inline std::vector<GuidelineDoc> read_guideline_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) throw Error("cannot open guideline corpus: " + path);
    std::vector<GuidelineDoc> out;
    std::string line;
    size_t line_no = 0;
    std::unordered_set<std::string> ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim_view(line).empty()) continue;
        try {
            out.push_back(guideline_from_json(Json::parse(line)));
        } catch (const Json::parse_error& e) {
            throw CorpusError(path + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what(), line_no);
        } catch (const Error& e) {
            throw CorpusError(path + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
        }
        if (!ids.insert(out.back().id).second) {
            throw CorpusError(path + ":" + std::to_string(line_no) + ": duplicate id '" + out.back().id + "'", line_no);
        }
    }
    return out;
}

template <class Range>
size_t write_guideline_corpus(const Range& docs, const std::string& path) {
    std::string tmp = path + ".tmp";
    {
        std::filesystem::path parent = std::filesystem::path(path).parent_path();
        if (!parent.empty()) {
            std::error_code ec;
            std::filesystem::create_directories(parent, ec);
        }
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out.is_open()) throw Error("cannot open guideline corpus for writing: " + tmp);
        for (const GuidelineDoc& d : docs) {
            if (d.text.empty()) throw Error("guideline '" + d.id + "' has empty text");
            out << guideline_to_json(d).dump() << '\n';
        }
        if (!out.good()) throw Error("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("rename failed for " + path + ": " + ec.message());
    size_t n = 0;
    for ([[maybe_unused]] const GuidelineDoc& d : docs) ++n;
    return n;
}

}  // namespace medforge

#pragma once

#include <string>
#include <vector>

namespace ptk {

struct Document {
    std::string id;
    std::string text;
    std::string source;    // blend leaf
    std::string category;  // blend category

    friend bool operator==(const Document&, const Document&) = default;
};

/// One JSON object per line: {"id", "text", "source", "category"}. Missing ids
/// become "doc-<line>"; blank lines are skipped. Duplicate ids are an InputError.
std::vector<Document> read_jsonl_documents(const std::string& path);
std::vector<Document> parse_jsonl_documents(const std::string& text);
void write_jsonl_documents(const std::string& path, const std::vector<Document>& docs);

}  // namespace ptk

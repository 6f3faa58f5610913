#include "ptk/corpus/document.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "ptk/util/errors.hpp"

namespace ptk {

std::vector<Document> parse_jsonl_documents(const std::string& text) {
    std::vector<Document> docs;
    std::unordered_set<std::string> ids;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw InputError("JSONL line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("text") || !j["text"].is_string())
            throw InputError("JSONL line " + std::to_string(lineno) + ": missing string field 'text'");
        Document d;
        d.text = j["text"].get<std::string>();
        d.id = j.contains("id") ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump())
                                : "doc-" + std::to_string(lineno);
        d.source = j.value("source", std::string{});
        d.category = j.value("category", std::string{});
        if (!ids.insert(d.id).second) throw InputError("duplicate document id: " + d.id);
        docs.push_back(std::move(d));
    }
    return docs;
}

std::vector<Document> read_jsonl_documents(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open corpus: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_jsonl_documents(ss.str());
}

void write_jsonl_documents(const std::string& path, const std::vector<Document>& docs) {
    std::ofstream out(path);
    if (!out) throw PipelineError("cannot write: " + path);
    for (const auto& d : docs) {
        nlohmann::ordered_json j;
        j["id"] = d.id;
        j["text"] = d.text;
        j["source"] = d.source;
        j["category"] = d.category;
        out << j.dump() << '\n';
    }
}

}  // namespace ptk

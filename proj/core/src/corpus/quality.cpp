#include "ptk/corpus/quality.hpp"

#include <algorithm>
#include <string_view>
#include <unordered_map>

namespace ptk {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

std::size_t count_code_points(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
}

std::size_t count_substr(std::string_view s, std::string_view needle) {
    std::size_t n = 0;
    for (std::size_t pos = s.find(needle); pos != std::string_view::npos; pos = s.find(needle, pos + needle.size()))
        ++n;
    return n;
}

bool starts_with_bullet(std::string_view line) {
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) return false;
    line.remove_prefix(first);
    return line.starts_with("- ") || line.starts_with("* ") || line.starts_with("•") ||
           line.starts_with("·") || line == "-" || line == "*";
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

}  // namespace

DocStats compute_doc_stats(const std::string& text) {
    DocStats st;
    std::size_t total_len = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        if (j > i) {
            ++st.words;
            total_len += count_code_points(std::string_view(text).substr(i, j - i));
        }
        i = j;
    }
    if (st.words > 0) {
        const double w = static_cast<double>(st.words);
        st.mean_word_length = static_cast<double>(total_len) / w;
        st.hash_ratio = static_cast<double>(std::count(text.begin(), text.end(), '#')) / w;
        st.ellipsis_ratio = static_cast<double>(count_substr(text, "...") + count_substr(text, "…")) / w;
    }

    std::vector<std::string_view> lines;
    std::string_view rest(text);
    while (!rest.empty()) {
        const auto nl = rest.find('\n');
        auto line = trim(rest.substr(0, nl));
        if (!line.empty()) lines.push_back(line);
        if (nl == std::string_view::npos) break;
        rest.remove_prefix(nl + 1);
    }
    st.lines = lines.size();
    if (!lines.empty()) {
        std::unordered_map<std::string_view, std::size_t> freq;
        std::size_t bullets = 0;
        for (auto l : lines) {
            ++freq[l];
            bullets += starts_with_bullet(l);
        }
        std::size_t dup = 0;
        for (auto l : lines) dup += freq[l] > 1;
        const double n = static_cast<double>(lines.size());
        st.bullet_line_fraction = static_cast<double>(bullets) / n;
        st.duplicate_line_fraction = static_cast<double>(dup) / n;
    }
    return st;
}

std::vector<QualityRule> default_quality_rules(const QualityThresholds& t) {
    return {
        {"min-words", [t](const DocStats& s) { return s.words < t.min_words; }},
        {"max-words", [t](const DocStats& s) { return s.words > t.max_words; }},
        {"mean-word-length",
         [t](const DocStats& s) {
             return s.words > 0 && (s.mean_word_length < t.min_mean_word_length ||
                                    s.mean_word_length > t.max_mean_word_length);
         }},
        {"symbol-ratio",
         [t](const DocStats& s) { return s.hash_ratio > t.max_symbol_ratio || s.ellipsis_ratio > t.max_symbol_ratio; }},
        {"bullet-lines", [t](const DocStats& s) { return s.bullet_line_fraction > t.max_bullet_line_fraction; }},
        {"duplicate-lines",
         [t](const DocStats& s) { return s.duplicate_line_fraction > t.max_duplicate_line_fraction; }},
    };
}

QualityVerdict quality_filter(const Document& doc, std::span<const QualityRule> rules) {
    const DocStats stats = compute_doc_stats(doc.text);
    QualityVerdict v;
    for (const auto& rule : rules)
        if (rule.fires(stats)) v.fired.push_back(rule.name);
    std::sort(v.fired.begin(), v.fired.end());
    v.keep = v.fired.empty();
    return v;
}

}  // namespace ptk

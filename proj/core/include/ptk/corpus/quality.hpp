#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ptk/corpus/document.hpp"

namespace ptk {

/// Per-document statistics every heuristic rule reads from.
struct DocStats {
    std::size_t words = 0;
    double mean_word_length = 0.0;  // in code points
    double hash_ratio = 0.0;        // '#' per word
    double ellipsis_ratio = 0.0;    // "..." or U+2026 per word
    std::size_t lines = 0;          // non-blank lines
    double bullet_line_fraction = 0.0;
    double duplicate_line_fraction = 0.0;
};

DocStats compute_doc_stats(const std::string& text);

struct QualityRule {
    std::string name;
    std::function<bool(const DocStats&)> fires;
};

struct QualityThresholds {
    std::size_t min_words = 50;
    std::size_t max_words = 100000;
    double min_mean_word_length = 3.0;
    double max_mean_word_length = 10.0;
    double max_symbol_ratio = 0.1;
    double max_bullet_line_fraction = 0.3;
    double max_duplicate_line_fraction = 0.9;
};

/// min-words, max-words, mean-word-length, symbol-ratio, bullet-lines, duplicate-lines.
std::vector<QualityRule> default_quality_rules(const QualityThresholds& t = {});

struct QualityVerdict {
    bool keep = true;
    std::vector<std::string> fired;  // sorted by name
};

/// Drops the document iff any rule fires. The verdict does not depend on rule order.
QualityVerdict quality_filter(const Document& doc, std::span<const QualityRule> rules);

}  // namespace ptk

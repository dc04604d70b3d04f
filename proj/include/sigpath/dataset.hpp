#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigpath/embed.hpp"
#include "sigpath/learn.hpp"
#include "sigpath/window.hpp"

namespace sigpath {

/// Bad input file; the message carries the 1-based line number.
class DatasetError : public std::runtime_error {
public:
    DatasetError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct Record {
    std::string id;
    Stream stream;  // target holds the label when present
};

/// Newline-delimited JSON, one object per line:
///   {"id": "a", "label": 3, "channels": [[...], [...]], "strokes": [1, 1, 2]}
/// label and strokes are optional; blank lines are skipped.
std::vector<Record> read_dataset(std::istream& in);
void write_dataset(const std::vector<Record>& records, std::ostream& out);

/// Feature rows keyed by record id, with optional labels.
struct FeatureTable {
    std::vector<std::string> ids;
    std::vector<std::optional<double>> labels;
    FeatureMatrix features;
};

/// Header id,label,f_0..f_{P-1}; empty label cell when absent.
void write_feature_csv(const FeatureTable& table, std::ostream& out);
FeatureTable read_feature_csv(std::istream& in);

struct FeaturizeOptions {
    EmbeddingSpec embedding;
    WindowSpec window;
    bool include_constant = false;
    std::size_t jobs = 1;
    std::size_t feature_cap = 1'000'000;  // per row
};

/// Embeds, signs and windows every record; rows keep input order.
FeatureTable featurize(const std::vector<Record>& records, const FeaturizeOptions& options);

}  // namespace sigpath

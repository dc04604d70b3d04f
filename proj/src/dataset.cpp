#include "sigpath/dataset.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "sigpath/parallel.hpp"
#include "sigpath/signature.hpp"

namespace sigpath {

namespace {

using json = nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

Record parse_record(const std::string& line, std::size_t lineno) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw DatasetError(lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object())
        throw DatasetError(lineno, "record must be a JSON object");

    auto id_it = obj.find("id");
    if (id_it == obj.end() || !id_it->is_string())
        throw DatasetError(lineno, "record needs a string \"id\"");

    std::optional<double> label;
    if (auto it = obj.find("label"); it != obj.end() && !it->is_null()) {
        if (!it->is_number())
            throw DatasetError(lineno, "\"label\" must be a number");
        label = it->get<double>();
    }

    auto ch_it = obj.find("channels");
    if (ch_it == obj.end() || !ch_it->is_array() || ch_it->empty())
        throw DatasetError(lineno, "record needs a non-empty \"channels\" array");
    std::vector<std::vector<double>> channels;
    for (const auto& ch : *ch_it) {
        if (!ch.is_array())
            throw DatasetError(lineno, "each channel must be an array of numbers");
        std::vector<double> values;
        values.reserve(ch.size());
        for (const auto& v : ch) {
            if (!v.is_number())
                throw DatasetError(lineno, "channel values must be numbers");
            values.push_back(v.get<double>());
        }
        channels.push_back(std::move(values));
    }

    std::optional<std::vector<int>> strokes;
    if (auto it = obj.find("strokes"); it != obj.end() && !it->is_null()) {
        if (!it->is_array())
            throw DatasetError(lineno, "\"strokes\" must be an array of integers");
        std::vector<int> s;
        for (const auto& v : *it) {
            if (!v.is_number_integer())
                throw DatasetError(lineno, "\"strokes\" must be an array of integers");
            s.push_back(v.get<int>());
        }
        strokes = std::move(s);
    }

    try {
        return {id_it->get<std::string>(), Stream(std::move(channels), std::move(strokes), label)};
    } catch (const std::invalid_argument& e) {
        throw DatasetError(lineno, e.what());
    }
}

std::string quote_csv(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos)
        return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

// Splits one CSV line; only the first field may be quoted.
std::vector<std::string> split_csv(const std::string& line, std::size_t lineno) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    if (!line.empty() && line[0] == '"') {
        std::string field;
        pos = 1;
        while (true) {
            if (pos >= line.size())
                throw DatasetError(lineno, "unterminated quoted field");
            if (line[pos] == '"') {
                if (pos + 1 < line.size() && line[pos + 1] == '"') {
                    field += '"';
                    pos += 2;
                    continue;
                }
                ++pos;
                break;
            }
            field += line[pos++];
        }
        fields.push_back(std::move(field));
        if (pos == line.size())
            return fields;
        if (line[pos] != ',')
            throw DatasetError(lineno, "expected ',' after quoted field");
        ++pos;
    }
    while (true) {
        const auto comma = line.find(',', pos);
        fields.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        if (comma == std::string::npos)
            break;
        pos = comma + 1;
    }
    return fields;
}

double parse_double(const std::string& s, std::size_t lineno) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw DatasetError(lineno, "invalid number '" + s + "'");
    return v;
}

}  // namespace

std::vector<Record> read_dataset(std::istream& in) {
    std::vector<Record> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos)
            continue;
        records.push_back(parse_record(line, lineno));
    }
    return records;
}

void write_dataset(const std::vector<Record>& records, std::ostream& out) {
    for (const auto& rec : records) {
        json obj;
        obj["id"] = rec.id;
        if (rec.stream.target())
            obj["label"] = *rec.stream.target();
        json channels = json::array();
        for (std::size_t c = 0; c < rec.stream.dim(); ++c) {
            const auto ch = rec.stream.channel(c);
            channels.push_back(std::vector<double>(ch.begin(), ch.end()));
        }
        obj["channels"] = std::move(channels);
        if (rec.stream.strokes())
            obj["strokes"] = *rec.stream.strokes();
        out << obj.dump() << '\n';
    }
}

void write_feature_csv(const FeatureTable& table, std::ostream& out) {
    out << "id,label";
    for (Eigen::Index j = 0; j < table.features.cols(); ++j)
        out << ",f_" << j;
    out << '\n';
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
        out << quote_csv(table.ids[i]) << ',';
        if (table.labels[i])
            out << format_double(*table.labels[i]);
        for (Eigen::Index j = 0; j < table.features.cols(); ++j)
            out << ',' << format_double(table.features(static_cast<Eigen::Index>(i), j));
        out << '\n';
    }
}

FeatureTable read_feature_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw DatasetError(1, "empty feature file");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    const auto header = split_csv(line, 1);
    if (header.size() < 2 || header[0] != "id" || header[1] != "label")
        throw DatasetError(1, "feature header must start with id,label");
    const std::size_t p = header.size() - 2;
    for (std::size_t j = 0; j < p; ++j)
        if (header[j + 2] != "f_" + std::to_string(j))
            throw DatasetError(1, "unexpected feature column '" + header[j + 2] + "'");

    FeatureTable table;
    std::vector<double> values;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto fields = split_csv(line, lineno);
        if (fields.size() != p + 2)
            throw DatasetError(lineno, "expected " + std::to_string(p + 2) + " fields, got " +
                                           std::to_string(fields.size()));
        table.ids.push_back(fields[0]);
        table.labels.push_back(fields[1].empty() ? std::nullopt
                                                 : std::optional(parse_double(fields[1], lineno)));
        for (std::size_t j = 0; j < p; ++j)
            values.push_back(parse_double(fields[j + 2], lineno));
    }
    const auto n = static_cast<Eigen::Index>(table.ids.size());
    table.features = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), n, static_cast<Eigen::Index>(p));
    return table;
}

FeatureTable featurize(const std::vector<Record>& records, const FeaturizeOptions& options) {
    FeatureTable table;
    if (records.empty()) {
        table.features.resize(0, 0);
        return table;
    }
    const std::size_t channels = records.front().stream.dim();
    for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].stream.dim() != channels)
            throw std::invalid_argument("record '" + records[i].id + "' has " +
                                        std::to_string(records[i].stream.dim()) +
                                        " channels, expected " + std::to_string(channels));
    const auto kind = options.embedding.kind;
    if (kind == EmbeddingKind::StrokeV1 || kind == EmbeddingKind::StrokeV2 ||
        kind == EmbeddingKind::StrokeV3)
        for (const auto& rec : records)
            if (!rec.stream.strokes())
                throw std::invalid_argument("embedding " + to_string(options.embedding) +
                                            " needs strokes, record '" + rec.id + "' has none");
    const std::size_t dim = embedded_dim(options.embedding, channels);
    const std::size_t width = dyadic_feature_count(dim, options.window, options.include_constant);
    if (width > options.feature_cap)
        throw std::invalid_argument(std::to_string(width) + " features per row exceed the cap of " +
                                    std::to_string(options.feature_cap) +
                                    " (lower --order or --dyadic-order, or raise --cap)");

    table.ids.reserve(records.size());
    table.labels.reserve(records.size());
    for (const auto& rec : records) {
        table.ids.push_back(rec.id);
        table.labels.push_back(rec.stream.target());
    }
    table.features.resize(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(width));
    parallel_for(records.size(), options.jobs, [&](std::size_t i) {
        const Polyline path = embed(records[i].stream, options.embedding);
        const auto row = dyadic_features(path, options.window, options.include_constant);
        table.features.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::RowVectorXd>(row.data(), static_cast<Eigen::Index>(row.size()));
    });
    return table;
}

}  // namespace sigpath

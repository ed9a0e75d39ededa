#pragma once
// Dataset containers, validation and CSV / JSON-lines I/O.
//
// File formats
//   labels / truth CSV : id,label_0,...,label_{K-1}   values 0/1
//   probs CSV          : id,prob_0,...,prob_{K-1}     %.17g decimals
//   features CSV       : id,f_0,...,f_{D-1}           non-negative reals
//   scores CSV         : id,score[,flagged]
//   JSON lines         : {"id": ..., "labels": [0,1,..], "probs": [..]} per line

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "mlerr/matrix.hpp"

namespace mlerr {

/// Malformed or inconsistent input data (files, shapes, ids).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Out-of-range method or model parameter.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct MultiLabelDataset {
    LabelMatrix given_labels;
    std::optional<LabelMatrix> true_labels;
    std::optional<FeatureMatrix> features;
    std::vector<std::string> example_ids;

    std::size_t n_examples() const noexcept { return given_labels.rows(); }
    std::size_t n_classes() const noexcept { return given_labels.cols(); }
};

/// Sequential ids "0", "1", ... used when a dataset is built in memory.
inline std::vector<std::string> default_ids(std::size_t n) {
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i);
    return ids;
}

// ---------------------------------------------------------------------------
// Validation

enum class Severity { Error, Warning };

enum class ViolationKind {
    ShapeMismatch,
    LabelOutOfDomain,
    ProbabilityOutOfRange,
    NotFinite,
    NegativeFeature,
    IdCount,
    DuplicateId,
    NoPositives,
    NoNegatives,
};

struct Violation {
    Severity severity;
    ViolationKind kind;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    /// True when no Error-severity violation was recorded; warnings are allowed.
    bool ok() const noexcept {
        for (const auto& v : violations)
            if (v.severity == Severity::Error) return false;
        return true;
    }
    std::size_t error_count() const noexcept {
        std::size_t n = 0;
        for (const auto& v : violations) n += v.severity == Severity::Error;
        return n;
    }
    bool has(ViolationKind kind) const noexcept {
        for (const auto& v : violations)
            if (v.kind == kind) return true;
        return false;
    }
};

namespace detail {

inline std::string at(std::size_t i, std::size_t k) {
    return "(" + std::to_string(i) + "," + std::to_string(k) + ")";
}

inline void check_labels(const LabelMatrix& m, std::string_view what, ValidationReport& report) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t k = 0; k < m.cols(); ++k)
            if (m(i, k) > 1)
                report.violations.push_back({Severity::Error, ViolationKind::LabelOutOfDomain,
                                             std::string(what) + " value not in {0,1} at " + at(i, k)});
}

}  // namespace detail

/// Checks a dataset on its own: label domain, optional matrices, ids, class balance warnings.
inline ValidationReport validate(const MultiLabelDataset& ds) {
    ValidationReport report;
    const auto n = ds.n_examples();
    const auto k = ds.n_classes();
    detail::check_labels(ds.given_labels, "label", report);

    if (ds.true_labels) {
        if (!ds.true_labels->same_shape(ds.given_labels))
            report.violations.push_back({Severity::Error, ViolationKind::ShapeMismatch,
                                         "shape mismatch: true_labels vs given_labels"});
        else
            detail::check_labels(*ds.true_labels, "true label", report);
    }
    if (ds.features) {
        const auto& f = *ds.features;
        if (f.rows() != n)
            report.violations.push_back({Severity::Error, ViolationKind::ShapeMismatch,
                                         "shape mismatch: features rows vs labels rows"});
        for (std::size_t i = 0; i < f.rows(); ++i)
            for (std::size_t j = 0; j < f.cols(); ++j) {
                if (!std::isfinite(f(i, j)))
                    report.violations.push_back({Severity::Error, ViolationKind::NotFinite,
                                                 "feature not finite at " + detail::at(i, j)});
                else if (f(i, j) < 0.0)
                    report.violations.push_back({Severity::Error, ViolationKind::NegativeFeature,
                                                 "negative feature at " + detail::at(i, j)});
            }
    }
    if (ds.example_ids.size() != n) {
        report.violations.push_back({Severity::Error, ViolationKind::IdCount,
                                     "shape mismatch: " + std::to_string(ds.example_ids.size()) +
                                         " ids for " + std::to_string(n) + " examples"});
    } else {
        std::unordered_set<std::string> seen;
        for (const auto& id : ds.example_ids)
            if (!seen.insert(id).second)
                report.violations.push_back(
                    {Severity::Error, ViolationKind::DuplicateId, "duplicate example id '" + id + "'"});
    }

    for (std::size_t c = 0; c < k; ++c) {
        std::size_t pos = 0;
        for (std::size_t i = 0; i < n; ++i) pos += ds.given_labels(i, c) == 1;
        if (pos == 0)
            report.violations.push_back({Severity::Warning, ViolationKind::NoPositives,
                                         "class " + std::to_string(c) + " has zero positive examples"});
        if (pos == n)
            report.violations.push_back({Severity::Warning, ViolationKind::NoNegatives,
                                         "class " + std::to_string(c) + " has zero negative examples"});
    }
    return report;
}

/// Checks a probability matrix on its own: every entry finite and within [0,1].
inline ValidationReport validate(const ProbMatrix& probs) {
    ValidationReport report;
    for (std::size_t i = 0; i < probs.rows(); ++i)
        for (std::size_t k = 0; k < probs.cols(); ++k) {
            const double p = probs(i, k);
            if (std::isnan(p) || std::isinf(p))
                report.violations.push_back({Severity::Error, ViolationKind::NotFinite,
                                             "probability not finite at " + detail::at(i, k)});
            else if (p < 0.0 || p > 1.0)
                report.violations.push_back({Severity::Error, ViolationKind::ProbabilityOutOfRange,
                                             "probability out of [0,1] at " + detail::at(i, k)});
        }
    return report;
}

/// Full check of a dataset against its predicted probabilities. Never mutates or throws.
inline ValidationReport validate(const MultiLabelDataset& ds, const ProbMatrix& probs) {
    ValidationReport report = validate(ds);
    if (!probs.same_shape(ds.given_labels))
        report.violations.push_back({Severity::Error, ViolationKind::ShapeMismatch,
                                     "shape mismatch: labels " + std::to_string(ds.n_examples()) + "x" +
                                         std::to_string(ds.n_classes()) + " vs probs " +
                                         std::to_string(probs.rows()) + "x" + std::to_string(probs.cols())});
    auto p = validate(probs);
    report.violations.insert(report.violations.end(), p.violations.begin(), p.violations.end());
    return report;
}

/// Throws DataError carrying every Error-severity message.
inline void require_valid(const ValidationReport& report) {
    if (report.ok()) return;
    std::string msg = "invalid input:";
    for (const auto& v : report.violations)
        if (v.severity == Severity::Error) msg += "\n  " + v.message;
    throw DataError(msg);
}

// ---------------------------------------------------------------------------
// CSV

/// Ids plus a numeric block, as read from any of the CSV formats above.
struct IdTable {
    std::vector<std::string> ids;
    Matrix<double> values;
};

/// Probabilities with the ids they were written against.
using ProbTable = IdTable;

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(std::string_view cell, const std::string& where) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (!cell.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || cell.empty())
        throw DataError(where + ": cannot parse '" + std::string(cell) + "' as a number");
    return v;
}

inline void check_id(const std::string& id) {
    if (id.find_first_of(",\n\r") != std::string::npos)
        throw DataError("example id '" + id + "' contains a comma or newline");
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    return out;
}

}  // namespace detail

/// Reads `id,<prefix>0,...,<prefix>{W-1}` into an IdTable. Errors name file, row and column.
inline IdTable read_id_csv(const std::string& path, std::string_view prefix) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file, expected a header");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = detail::split_commas(line);
    if (header.empty() || header[0] != "id") throw DataError(path + ": header must start with 'id'");
    const std::size_t width = header.size() - 1;
    for (std::size_t c = 0; c < width; ++c) {
        const std::string expect = std::string(prefix) + std::to_string(c);
        if (header[c + 1] != expect)
            throw DataError(path + ": header column " + std::to_string(c + 1) + " is '" +
                            std::string(header[c + 1]) + "', expected '" + expect + "'");
    }

    IdTable table;
    std::vector<double> flat;
    std::unordered_set<std::string> seen;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = detail::split_commas(line);
        const std::string where_row = path + ":" + std::to_string(row + 1);
        if (cells.size() != width + 1)
            throw DataError(where_row + ": expected " + std::to_string(width + 1) + " fields, found " +
                            std::to_string(cells.size()));
        std::string id(cells[0]);
        if (!seen.insert(id).second) throw DataError(where_row + ": duplicate example id '" + id + "'");
        table.ids.push_back(std::move(id));
        for (std::size_t c = 0; c < width; ++c)
            flat.push_back(detail::parse_double(
                cells[c + 1], where_row + " column '" + std::string(header[c + 1]) + "'"));
    }
    table.values = Matrix<double>(table.ids.size(), width);
    std::copy(flat.begin(), flat.end(), table.values.data().begin());
    return table;
}

inline LabelMatrix to_labels(const IdTable& table, const std::string& path) {
    LabelMatrix labels(table.values.rows(), table.values.cols());
    for (std::size_t i = 0; i < labels.rows(); ++i)
        for (std::size_t k = 0; k < labels.cols(); ++k) {
            const double v = table.values(i, k);
            if (v != 0.0 && v != 1.0)
                throw DataError(path + ":" + std::to_string(i + 2) + " column 'label_" + std::to_string(k) +
                                "': label value " + detail::format_double(v) + " is not 0 or 1");
            labels(i, k) = static_cast<std::uint8_t>(v);
        }
    return labels;
}

inline void write_labels_csv(const std::string& path, std::span<const std::string> ids, const LabelMatrix& labels) {
    if (ids.size() != labels.rows()) throw DataError("write_labels_csv: id count does not match rows");
    auto out = detail::open_out(path);
    out << "id";
    for (std::size_t k = 0; k < labels.cols(); ++k) out << ",label_" << k;
    out << '\n';
    for (std::size_t i = 0; i < labels.rows(); ++i) {
        detail::check_id(ids[i]);
        out << ids[i];
        for (std::size_t k = 0; k < labels.cols(); ++k) out << ',' << static_cast<int>(labels(i, k));
        out << '\n';
    }
}

inline void write_real_csv(const std::string& path, std::span<const std::string> ids, const Matrix<double>& values,
                           std::string_view prefix) {
    if (ids.size() != values.rows()) throw DataError("write_real_csv: id count does not match rows");
    auto out = detail::open_out(path);
    out << "id";
    for (std::size_t k = 0; k < values.cols(); ++k) out << ',' << prefix << k;
    out << '\n';
    for (std::size_t i = 0; i < values.rows(); ++i) {
        detail::check_id(ids[i]);
        out << ids[i];
        for (std::size_t k = 0; k < values.cols(); ++k) out << ',' << detail::format_double(values(i, k));
        out << '\n';
    }
}

enum class Format { Csv, JsonLines };

/// JSON-lines: one object per line with `id`, `labels` and optionally `probs`.
struct JsonLinesData {
    MultiLabelDataset dataset;
    std::optional<ProbTable> probs;
};

inline JsonLinesData load_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::vector<std::string> ids;
    std::vector<std::uint8_t> labels;
    std::vector<double> probs;
    std::size_t width = 0;
    bool have_probs = false;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const std::string where = path + ":" + std::to_string(lineno);
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + ": " + e.what());
        }
        if (!obj.is_object() || !obj.contains("id") || !obj.contains("labels") || !obj["labels"].is_array())
            throw DataError(where + ": expected an object with 'id' and 'labels'");
        std::string id = obj["id"].is_string() ? obj["id"].get<std::string>() : obj["id"].dump();
        if (!seen.insert(id).second) throw DataError(where + ": duplicate example id '" + id + "'");
        const auto& lab = obj["labels"];
        if (ids.empty()) {
            width = lab.size();
            have_probs = obj.contains("probs");
        }
        if (lab.size() != width) throw DataError(where + ": 'labels' width differs from the first line");
        for (std::size_t k = 0; k < width; ++k) {
            if (!lab[k].is_number_integer() || (lab[k].get<int>() != 0 && lab[k].get<int>() != 1))
                throw DataError(where + ": labels[" + std::to_string(k) + "] is not 0 or 1");
            labels.push_back(static_cast<std::uint8_t>(lab[k].get<int>()));
        }
        if (obj.contains("probs") != have_probs) throw DataError(where + ": 'probs' present on some lines only");
        if (have_probs) {
            const auto& pr = obj["probs"];
            if (!pr.is_array() || pr.size() != width)
                throw DataError(where + ": 'probs' must be an array of the same width as 'labels'");
            for (std::size_t k = 0; k < width; ++k) {
                if (!pr[k].is_number()) throw DataError(where + ": probs[" + std::to_string(k) + "] is not a number");
                probs.push_back(pr[k].get<double>());
            }
        }
        ids.push_back(std::move(id));
    }
    JsonLinesData out;
    out.dataset.given_labels = LabelMatrix(ids.size(), width);
    std::copy(labels.begin(), labels.end(), out.dataset.given_labels.data().begin());
    out.dataset.example_ids = ids;
    if (have_probs) {
        ProbTable t{ids, ProbMatrix(ids.size(), width)};
        std::copy(probs.begin(), probs.end(), t.values.data().begin());
        out.probs = std::move(t);
    }
    return out;
}

inline void save_jsonl(const std::string& path, const MultiLabelDataset& ds, const ProbMatrix* probs = nullptr) {
    if (probs && !probs->same_shape(ds.given_labels)) throw DataError("save_jsonl: probs shape mismatch");
    auto out = detail::open_out(path);
    for (std::size_t i = 0; i < ds.n_examples(); ++i) {
        nlohmann::json obj;
        obj["id"] = ds.example_ids.at(i);
        std::vector<int> lab(ds.given_labels.row(i).begin(), ds.given_labels.row(i).end());
        obj["labels"] = lab;
        if (probs) obj["probs"] = std::vector<double>(probs->row(i).begin(), probs->row(i).end());
        out << obj.dump() << '\n';
    }
}

/// Loads given labels (ids + label matrix). Features and truth are attached separately.
inline MultiLabelDataset load_dataset(const std::string& path, Format format = Format::Csv) {
    if (format == Format::JsonLines) return load_jsonl(path).dataset;
    auto table = read_id_csv(path, "label_");
    MultiLabelDataset ds;
    ds.given_labels = to_labels(table, path);
    ds.example_ids = std::move(table.ids);
    return ds;
}

inline void save_dataset(const std::string& path, const MultiLabelDataset& ds) {
    write_labels_csv(path, ds.example_ids, ds.given_labels);
}

inline ProbTable load_probs(const std::string& path, Format format = Format::Csv) {
    if (format == Format::JsonLines) {
        auto data = load_jsonl(path);
        if (!data.probs) throw DataError(path + ": no 'probs' field");
        return std::move(*data.probs);
    }
    return read_id_csv(path, "prob_");
}

inline void save_probs(const std::string& path, std::span<const std::string> ids, const ProbMatrix& probs) {
    write_real_csv(path, ids, probs, "prob_");
}

inline FeatureMatrix load_features(const std::string& path, std::vector<std::string>* ids = nullptr) {
    auto table = read_id_csv(path, "f_");
    if (ids) *ids = std::move(table.ids);
    return std::move(table.values);
}

inline void save_features(const std::string& path, std::span<const std::string> ids, const FeatureMatrix& f) {
    write_real_csv(path, ids, f, "f_");
}

/// Throws DataError unless both id lists are identical row by row.
inline void require_aligned(std::span<const std::string> a, std::span<const std::string> b, std::string_view what) {
    if (a.size() != b.size())
        throw DataError(std::string(what) + ": row count mismatch (" + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + ")");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i])
            throw DataError(std::string(what) + ": id mismatch at row " + std::to_string(i + 1) + " ('" + a[i] +
                            "' vs '" + b[i] + "')");
}

/// Writes `id,score` (plus `flagged` when flags are given).
inline void save_scores(const std::string& path, std::span<const std::string> ids, std::span<const double> scores,
                        const std::vector<bool>& flags = {}) {
    if (ids.size() != scores.size()) throw DataError("save_scores: id count does not match score count");
    if (!flags.empty() && flags.size() != scores.size()) throw DataError("save_scores: flag count mismatch");
    auto out = detail::open_out(path);
    out << (flags.empty() ? "id,score\n" : "id,score,flagged\n");
    for (std::size_t i = 0; i < ids.size(); ++i) {
        detail::check_id(ids[i]);
        out << ids[i] << ',' << detail::format_double(scores[i]);
        if (!flags.empty()) out << ',' << (flags[i] ? 1 : 0);
        out << '\n';
    }
}

/// Reads a scores CSV back; flags (if the column exists) are returned through `flags`.
inline std::vector<double> load_scores(const std::string& path, std::vector<std::string>* ids = nullptr,
                                       std::vector<bool>* flags = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const bool with_flags = line == "id,score,flagged";
    if (!with_flags && line != "id,score") throw DataError(path + ": expected header 'id,score[,flagged]'");
    std::vector<double> scores;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = detail::split_commas(line);
        const std::string where = path + ":" + std::to_string(row);
        if (cells.size() != (with_flags ? 3u : 2u)) throw DataError(where + ": wrong field count");
        if (ids) ids->emplace_back(cells[0]);
        scores.push_back(detail::parse_double(cells[1], where + " column 'score'"));
        if (with_flags && flags) flags->push_back(cells[2] == "1");
    }
    return scores;
}

}  // namespace mlerr

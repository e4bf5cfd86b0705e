#include "hedlm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hedlm::dataset {

namespace {

std::string expected_header() {
    std::string h = "user_id,label";
    for (std::size_t i = 0; i < kSamplesPerRecord; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), ",t%03zu", i);
        h += buf;
    }
    return h;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_sample(const std::string& field, std::size_t row, std::size_t col) {
    const char* begin = field.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
        throw Error("dataset", "row " + std::to_string(row) + ": column t" + std::to_string(col) +
                                   " is not a number: '" + field + "'");
    }
    if (!std::isfinite(v)) {
        throw Error("dataset",
                    "row " + std::to_string(row) + ": non-finite sample in column t" + std::to_string(col));
    }
    return v;
}

}  // namespace

std::vector<SignalRecord> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("dataset", "cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw Error("dataset", "'" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected_header()) {
        throw Error("dataset", "'" + path + "' header does not match the canonical schema "
                               "user_id,label,t000,...,t179");
    }

    std::vector<SignalRecord> records;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;

        const auto fields = split_csv_line(line);
        if (fields.size() != 2 + kSamplesPerRecord) {
            throw Error("dataset", "row " + std::to_string(row) + ": expected " +
                                       std::to_string(2 + kSamplesPerRecord) + " columns, got " +
                                       std::to_string(fields.size()));
        }

        SignalRecord rec;
        rec.user_id = fields[0];
        rec.row_index = row - 1;
        if (rec.user_id.empty()) {
            throw Error("dataset", "row " + std::to_string(row) + ": empty user_id");
        }
        if (!fields[1].empty()) {
            try {
                rec.label = label_from_token(fields[1]);
            } catch (const Error&) {
                throw Error("dataset",
                            "row " + std::to_string(row) + ": unknown label token '" + fields[1] + "'");
            }
        }
        rec.samples.reserve(kSamplesPerRecord);
        for (std::size_t i = 0; i < kSamplesPerRecord; ++i) {
            rec.samples.push_back(parse_sample(fields[2 + i], row, i));
        }
        records.push_back(std::move(rec));
    }
    return records;
}

UserSubset user_slice(const std::vector<SignalRecord>& records, const std::string& user_id) {
    UserSubset subset;
    subset.user_id = user_id;
    for (const auto& rec : records) {
        if (rec.user_id == user_id) subset.records.push_back(rec);
    }
    if (subset.records.empty()) {
        throw Error("dataset", "unknown user_id '" + user_id + "'");
    }
    subset.source_range = {subset.records.front().row_index, subset.records.back().row_index};
    return subset;
}

std::vector<SignalRecord> support_pool(const UserSubset& subset, const SignalRecord& target) {
    const bool present = std::any_of(subset.records.begin(), subset.records.end(),
                                     [&](const SignalRecord& r) { return r.row_index == target.row_index; });
    if (!present) {
        throw Error("dataset", "target row " + std::to_string(target.row_index) +
                                   " does not belong to the subset of user '" + subset.user_id + "'");
    }
    std::vector<SignalRecord> pool;
    pool.reserve(subset.records.size() - 1);
    for (const auto& rec : subset.records) {
        if (rec.row_index == target.row_index) continue;
        if (!rec.label) {
            throw Error("dataset", "support pool of user '" + subset.user_id + "' contains unlabeled row " +
                                       std::to_string(rec.row_index));
        }
        pool.push_back(rec);
    }
    return pool;
}

std::vector<std::string> user_ids(const std::vector<SignalRecord>& records) {
    std::vector<std::string> ids;
    for (const auto& rec : records) {
        if (std::find(ids.begin(), ids.end(), rec.user_id) == ids.end()) ids.push_back(rec.user_id);
    }
    return ids;
}

}  // namespace hedlm::dataset

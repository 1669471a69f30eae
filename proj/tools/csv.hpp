// CSV ingestion for station records and metadata logs.
// Series format:   header "year,month,tmax[,tmin]", consecutive months.
// Metadata format: header "year,month".

#ifndef BMDL_TOOLS_CSV_HPP
#define BMDL_TOOLS_CSV_HPP

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cli {

class InputError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

struct StationRecord {
    std::int64_t n = 0;
    int components = 1;
    std::vector<double> values;  // column-major, component 0 first
    int start_year = 0;
    int start_month = 1;

    std::int64_t index_of(int year, int month) const {
        return 12 * static_cast<std::int64_t>(year - start_year) + (month - start_month) + 1;
    }
    void year_month_of(std::int64_t t, int* year, int* month) const {
        const std::int64_t zero = 12 * static_cast<std::int64_t>(start_year) + (start_month - 1) +
                                  (t - 1);
        *year = static_cast<int>(zero / 12);
        *month = static_cast<int>(zero % 12) + 1;
    }
    std::string label_of(std::int64_t t) const {
        static const char* names[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
        int year = 0, month = 0;
        year_month_of(t, &year, &month);
        return std::to_string(year) + " " + names[month - 1];
    }
};

inline double parse_value(const std::string& field, std::size_t row, const std::string& name) {
    if (field.empty()) {
        throw InputError("row " + std::to_string(row) + ": missing " + name + " value");
    }
    std::size_t consumed = 0;
    double v = 0.0;
    try {
        v = std::stod(field, &consumed);
    } catch (const std::exception&) {
        throw InputError("row " + std::to_string(row) + ": cannot parse " + name + " value '" +
                         field + "'");
    }
    if (consumed != field.size() || !std::isfinite(v)) {
        throw InputError("row " + std::to_string(row) + ": cannot parse " + name + " value '" +
                         field + "'");
    }
    return v;
}

inline long parse_int(const std::string& field, std::size_t row, const std::string& name) {
    if (field.empty()) {
        throw InputError("row " + std::to_string(row) + ": missing " + name);
    }
    std::size_t consumed = 0;
    long v = 0;
    try {
        v = std::stol(field, &consumed);
    } catch (const std::exception&) {
        throw InputError("row " + std::to_string(row) + ": cannot parse " + name + " '" + field +
                         "'");
    }
    if (consumed != field.size()) {
        throw InputError("row " + std::to_string(row) + ": cannot parse " + name + " '" + field +
                         "'");
    }
    return v;
}

inline StationRecord read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open series file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw InputError(path + ": empty file");
    const auto header = split_csv_line(line);
    const bool bivariate = header.size() == 4;
    if (!((header.size() == 3 || header.size() == 4) && lower(header[0]) == "year" &&
          lower(header[1]) == "month")) {
        throw InputError(path + ": header must be year,month,tmax[,tmin]");
    }

    StationRecord record;
    record.components = bivariate ? 2 : 1;
    std::vector<double> col1, col2;
    std::vector<std::size_t> row_of_index;  // duplicate diagnostics
    std::size_t row = 1;
    std::int64_t prev_index = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw InputError("row " + std::to_string(row) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        }
        const long year = parse_int(fields[0], row, "year");
        const long month = parse_int(fields[1], row, "month");
        if (month < 1 || month > 12) {
            throw InputError("row " + std::to_string(row) + ": month " + std::to_string(month) +
                             " outside 1..12");
        }
        if (col1.empty()) {
            record.start_year = static_cast<int>(year);
            record.start_month = static_cast<int>(month);
        }
        const std::int64_t index = record.index_of(static_cast<int>(year),
                                                   static_cast<int>(month));
        if (!col1.empty()) {
            if (index >= 1 && index <= prev_index) {
                throw InputError("row " + std::to_string(row) + ": duplicate (" +
                                 std::to_string(year) + "," + std::to_string(month) +
                                 ") of row " +
                                 std::to_string(row_of_index[static_cast<std::size_t>(index - 1)]));
            }
            if (index != prev_index + 1) {
                throw InputError("row " + std::to_string(row) + ": gap in the record before " +
                                 std::to_string(year) + "-" + std::to_string(month));
            }
        }
        prev_index = index;
        row_of_index.push_back(row);
        col1.push_back(parse_value(fields[2], row, header[2]));
        if (bivariate) col2.push_back(parse_value(fields[3], row, header[3]));
    }
    if (col1.empty()) throw InputError(path + ": no data rows");

    record.n = static_cast<std::int64_t>(col1.size());
    record.values = std::move(col1);
    record.values.insert(record.values.end(), col2.begin(), col2.end());
    return record;
}

struct MetadataEntry {
    std::int64_t index;
    std::size_t row;
    int year;
    int month;
};

inline std::vector<MetadataEntry> read_metadata_csv(const std::string& path,
                                                    const StationRecord& record) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open metadata file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw InputError(path + ": empty file");
    const auto header = split_csv_line(line);
    if (header.size() < 2 || lower(header[0]) != "year" || lower(header[1]) != "month") {
        throw InputError(path + ": header must be year,month");
    }
    std::vector<MetadataEntry> entries;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() < 2) {
            throw InputError("row " + std::to_string(row) + ": expected year,month");
        }
        const long year = parse_int(fields[0], row, "year");
        const long month = parse_int(fields[1], row, "month");
        if (month < 1 || month > 12) {
            throw InputError("row " + std::to_string(row) + ": month " + std::to_string(month) +
                             " outside 1..12");
        }
        entries.push_back({record.index_of(static_cast<int>(year), static_cast<int>(month)), row,
                           static_cast<int>(year), static_cast<int>(month)});
    }
    return entries;
}

}  // namespace cli

#endif

#include "rmst/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace rmst {

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

bool missing(const std::string& s) { return s.empty() || s == "NA" || s == "na"; }

struct Loc {
    const std::string& name;
    int row;  // 1-based data row
    const std::string& column;
};

[[noreturn]] void fail(const Loc& loc, const std::string& what) {
    throw std::runtime_error(loc.name + ": row " + std::to_string(loc.row) + ", column '" +
                             loc.column + "': " + what);
}

double parse_number(const std::string& raw, const Loc& loc) {
    try {
        std::size_t used = 0;
        const double v = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        fail(loc, "unparseable number '" + raw + "'");
    }
}

}  // namespace

Dataset load_dataset_text(const std::string& text, const std::string& name,
                          const DatasetSchema& schema) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(name + ": no data rows");
    const std::vector<std::string> header = split_csv_row(line);

    const auto column_index = [&](const std::string& col) {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (trim(header[j]) == col) return j;
        throw std::runtime_error(name + ": missing column '" + col + "'");
    };

    const std::size_t time_ix = column_index(schema.time_column);
    const std::size_t event_ix = column_index(schema.event_column);
    const std::size_t group_ix = column_index(schema.group_column);
    const std::size_t id_ix =
        schema.id_column.empty() ? static_cast<std::size_t>(-1) : column_index(schema.id_column);
    std::vector<std::size_t> cov_ix;
    for (const auto& spec : schema.covariates) cov_ix.push_back(column_index(spec.column));

    std::vector<std::vector<std::string>> rows;
    int row_no = 0;
    std::vector<int> missing_rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row_no;
        auto fields = split_csv_row(line);
        if (fields.size() != header.size())
            throw std::runtime_error(name + ": row " + std::to_string(row_no) + ": has " +
                                     std::to_string(fields.size()) + " fields, header has " +
                                     std::to_string(header.size()));
        for (auto& f : fields) f = trim(f);
        bool any_missing = false;
        const auto check = [&](std::size_t ix) {
            if (ix != static_cast<std::size_t>(-1) && missing(fields[ix])) any_missing = true;
        };
        check(time_ix);
        check(event_ix);
        check(group_ix);
        for (const auto ix : cov_ix) check(ix);
        if (any_missing) missing_rows.push_back(row_no);
        rows.push_back(std::move(fields));
    }
    if (rows.empty()) throw std::runtime_error(name + ": no data rows");
    if (!missing_rows.empty()) {
        std::string list;
        for (std::size_t k = 0; k < missing_rows.size() && k < 20; ++k)
            list += (k ? ", " : "") + std::to_string(missing_rows[k]);
        if (missing_rows.size() > 20) list += ", ...";
        throw std::runtime_error(name + ": missing values in used columns at rows " + list);
    }

    // Level discovery for categorical covariates (dummy order: sorted levels).
    std::vector<std::vector<std::string>> levels(schema.covariates.size());
    for (std::size_t c = 0; c < schema.covariates.size(); ++c) {
        if (schema.covariates[c].kind != CovariateKind::categorical) continue;
        std::set<std::string> seen;
        for (const auto& r : rows) seen.insert(r[cov_ix[c]]);
        if (!seen.count(schema.covariates[c].reference_level))
            throw std::runtime_error(name + ": reference level '" +
                                     schema.covariates[c].reference_level +
                                     "' absent from column '" + schema.covariates[c].column +
                                     "'");
        seen.erase(schema.covariates[c].reference_level);
        levels[c].assign(seen.begin(), seen.end());
    }

    Dataset out;
    for (std::size_t c = 0; c < schema.covariates.size(); ++c) {
        const auto& spec = schema.covariates[c];
        if (spec.kind == CovariateKind::numeric) {
            out.covariate_names.push_back(spec.column);
        } else {
            for (const auto& lvl : levels[c])
                out.covariate_names.push_back(spec.column + "(" + lvl + ")");
        }
    }

    for (std::size_t r = 0; r < rows.size(); ++r) {
        const int row = static_cast<int>(r) + 1;
        const auto& f = rows[r];
        SurvivalSample s;
        s.id = id_ix == static_cast<std::size_t>(-1) ? std::to_string(row) : f[id_ix];
        s.time = parse_number(f[time_ix], {name, row, schema.time_column});
        if (s.time < 0.0) fail({name, row, schema.time_column}, "negative time");
        s.event = f[event_ix] == schema.event_true_value;
        s.group = f[group_ix] == schema.group_treatment_value ? Arm::treatment : Arm::control;
        for (std::size_t c = 0; c < schema.covariates.size(); ++c) {
            const auto& spec = schema.covariates[c];
            const auto& cell = f[cov_ix[c]];
            if (spec.kind == CovariateKind::numeric) {
                s.covariates.push_back(parse_number(cell, {name, row, spec.column}));
            } else {
                if (cell != spec.reference_level &&
                    std::find(levels[c].begin(), levels[c].end(), cell) == levels[c].end())
                    fail({name, row, spec.column}, "unknown categorical level '" + cell + "'");
                for (const auto& lvl : levels[c]) s.covariates.push_back(cell == lvl ? 1.0 : 0.0);
            }
        }
        out.samples.push_back(std::move(s));
    }
    return out;
}

Dataset load_dataset(const std::string& path, const DatasetSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_dataset_text(buf.str(), path, schema);
}

void write_samples_csv(std::ostream& out, std::span<const SurvivalSample> samples,
                       std::span<const std::string> covariate_names) {
    out << "id,time,event,group";
    for (const auto& c : covariate_names) out << ',' << c;
    out << '\n';
    char buf[64];
    for (const auto& s : samples) {
        out << s.id << ',';
        std::snprintf(buf, sizeof buf, "%.17g", s.time);
        out << buf << ',' << (s.event ? 1 : 0) << ',' << arm_name(s.group);
        for (const double v : s.covariates) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ',' << buf;
        }
        out << '\n';
    }
}

DatasetSchema canonical_schema(std::span<const std::string> covariate_names) {
    DatasetSchema schema;
    schema.id_column = "id";
    schema.time_column = "time";
    schema.event_column = "event";
    schema.event_true_value = "1";
    schema.group_column = "group";
    schema.group_treatment_value = "treatment";
    for (const auto& c : covariate_names)
        schema.covariates.push_back({c, CovariateKind::numeric, ""});
    return schema;
}

}  // namespace rmst

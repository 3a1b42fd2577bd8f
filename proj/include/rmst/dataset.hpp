#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rmst/types.hpp"

namespace rmst {

enum class CovariateKind { numeric, categorical };

struct CovariateSpec {
    std::string column;
    CovariateKind kind = CovariateKind::numeric;
    std::string reference_level;  // categorical only
};

/// Column mapping for delimited ingestion. `event_true_value` is the literal
/// that marks an observed event (so a `Censor` column with values Yes/No maps
/// through event_true_value = "No"). Categorical covariates are dummy-coded
/// against the reference level; dummy columns are ordered by level string.
struct DatasetSchema {
    std::string id_column;  // empty: use the 1-based data row number
    std::string time_column;
    std::string event_column;
    std::string event_true_value;
    std::string group_column;
    std::string group_treatment_value;
    std::vector<CovariateSpec> covariates;
};

struct Dataset {
    std::vector<SurvivalSample> samples;
    std::vector<std::string> covariate_names;  // dummy-expanded, design order
};

/// Comma-delimited text with a header row. Errors name the file, row, and
/// column. Rows with missing values (empty or NA) in any used column abort
/// the load with the offending row numbers.
Dataset load_dataset(const std::string& path, const DatasetSchema& schema);

/// Same parser over an already-read document (diagnostics use `name`).
Dataset load_dataset_text(const std::string& text, const std::string& name,
                          const DatasetSchema& schema);

/// Canonical sample export: `id,time,event,group` plus one column per
/// covariate, full decimal precision. Re-ingesting with canonical_schema()
/// reproduces the samples exactly.
void write_samples_csv(std::ostream& out, std::span<const SurvivalSample> samples,
                       std::span<const std::string> covariate_names);
DatasetSchema canonical_schema(std::span<const std::string> covariate_names);

}  // namespace rmst

#pragma once

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hyperlab::cli {

using Cell = std::variant<double, std::string>;

/// Line plot drawn from two or more numeric columns of a table.
struct PlotSpec {
    std::string x;
    std::vector<std::string> y;
    bool log_y = false;
    bool points = false; ///< markers instead of polylines
};

/// One CSV output: named columns (the trailing `status` column is implicit), rows of
/// cells, and extra metadata for the sidecar.
struct Table {
    std::string name; ///< file basename without extension
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    std::vector<std::string> status;
    std::size_t failures = 0; ///< rows whose status records a numerical failure
    std::optional<PlotSpec> plot;
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();

    Table(std::string name_, std::vector<std::string> columns_) : name(std::move(name_)), columns(std::move(columns_))
    {
    }

    /// Appends a row; `failed` marks rows whose status is an error kind.
    void add(std::vector<Cell> row, std::string row_status = "ok", bool failed = false);

    std::string csv() const;
    /// Minimal SVG line plot of `plot` (empty string when no plot is configured).
    std::string svg() const;
};

/// Common metadata written into every sidecar.
struct RunMeta {
    std::string subcommand;
    std::string config_hash;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    nlohmann::ordered_json tolerances = nlohmann::ordered_json::object();
    std::string metric;
};

/// Writes <name>.csv, <name>.meta.json and, when `plot` is set, <name>.svg into `dir`.
void write_table(const std::filesystem::path& dir, const Table& table, const RunMeta& meta, bool plot);

/// Differences between `table` and the golden CSV: the same header and row count,
/// numeric cells within abs_tol + rel_tol max(|a|, |b|), other cells equal.
/// `golden` is a directory holding <name>.csv or a CSV file named <name>.csv.
/// Returns one message per mismatch; std::nullopt when `golden` is a file for a
/// different table.
std::optional<std::vector<std::string>> compare_golden(const Table& table, const std::filesystem::path& golden,
                                                       double rel_tol, double abs_tol);

} // namespace hyperlab::cli

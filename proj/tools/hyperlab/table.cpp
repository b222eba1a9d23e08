#include "table.hpp"

#include "config.hpp"
#include "hyperlab/types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#ifndef HYPERLAB_VERSION
#define HYPERLAB_VERSION "unknown"
#endif

namespace hyperlab::cli {

namespace {

std::string cell_text(const Cell& c)
{
    if (const double* d = std::get_if<double>(&c)) return format_double(*d);
    const std::string& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::optional<double> as_number(const std::string& s)
{
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return v;
}

std::string svg_num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw ValidationError("OutputError", "cannot write " + path.string());
}

} // namespace

void Table::add(std::vector<Cell> row, std::string row_status, bool failed)
{
    if (row.size() != columns.size())
        throw ValidationError("TableShape", name + ": row has " + std::to_string(row.size()) + " cells, expected " +
                                                std::to_string(columns.size()));
    rows.push_back(std::move(row));
    status.push_back(std::move(row_status));
    if (failed) ++failures;
}

std::string Table::csv() const
{
    std::string s;
    for (const std::string& c : columns) s += c + ",";
    s += "status\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (const Cell& c : rows[i]) s += cell_text(c) + ",";
        s += cell_text(status[i]) + "\n";
    }
    return s;
}

std::string Table::svg() const
{
    if (!plot) return {};
    const auto column = [this](const std::string& name) {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw ValidationError("PlotColumn", name + ": no column '" + name + "'");
        return std::size_t(it - columns.begin());
    };
    const std::size_t ix = column(plot->x);
    const auto value = [this](std::size_t row, std::size_t col) {
        const double* d = std::get_if<double>(&rows[row][col]);
        return d ? *d : std::nan("");
    };
    const auto ytrans = [this](double v) { return plot->log_y ? (v > 0.0 ? std::log10(v) : std::nan("")) : v; };

    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const double x = value(r, ix);
        if (!std::isfinite(x)) continue;
        for (const std::string& yc : plot->y) {
            const double y = ytrans(value(r, column(yc)));
            if (!std::isfinite(y)) continue;
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    if (!(x0 <= x1)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5 * std::max(1.0, std::abs(y0)), y1 += 0.5 * std::max(1.0, std::abs(y1));

    const double W = 720, H = 440, left = 90, right = 160, top = 40, bottom = 60;
    const double pw = W - left - right, ph = H - top - bottom;
    const auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    const auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << svg_num(left) << "\" y=\"24\" font-size=\"14\">" << name << "</text>\n";
    os << "<rect x=\"" << svg_num(left) << "\" y=\"" << svg_num(top) << "\" width=\"" << svg_num(pw) << "\" height=\""
       << svg_num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double fx = x0 + (x1 - x0) * k / 4.0, fy = y0 + (y1 - y0) * k / 4.0;
        os << "<text x=\"" << svg_num(px(fx)) << "\" y=\"" << svg_num(top + ph + 18)
           << "\" text-anchor=\"middle\">" << tick_label(fx) << "</text>\n";
        os << "<text x=\"" << svg_num(left - 6) << "\" y=\"" << svg_num(py(fy) + 4) << "\" text-anchor=\"end\">"
           << (plot->log_y ? "1e" + tick_label(fy) : tick_label(fy)) << "</text>\n";
    }
    os << "<text x=\"" << svg_num(left + pw / 2) << "\" y=\"" << svg_num(H - 14) << "\" text-anchor=\"middle\">"
       << plot->x << "</text>\n";

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    for (std::size_t k = 0; k < plot->y.size(); ++k) {
        const std::size_t iy = column(plot->y[k]);
        const char* color = colors[k % 6];
        std::string pts;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const double x = value(r, ix), y = ytrans(value(r, iy));
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            if (plot->points)
                os << "<circle cx=\"" << svg_num(px(x)) << "\" cy=\"" << svg_num(py(y)) << "\" r=\"2\" fill=\"" << color
                   << "\"/>\n";
            else
                pts += svg_num(px(x)) + "," + svg_num(py(y)) + " ";
        }
        if (!pts.empty())
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << pts
               << "\"/>\n";
        os << "<text x=\"" << svg_num(left + pw + 12) << "\" y=\"" << svg_num(top + 16 + 18 * k) << "\" fill=\""
           << color << "\">" << plot->y[k] << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_table(const std::filesystem::path& dir, const Table& table, const RunMeta& meta, bool plot)
{
    write_file(dir / (table.name + ".csv"), table.csv());

    nlohmann::ordered_json j;
    j["table"] = table.name;
    j["subcommand"] = meta.subcommand;
    j["columns"] = table.columns;
    j["columns"].push_back("status");
    j["rows"] = table.rows.size();
    j["failed_rows"] = table.failures;
    j["config_hash"] = meta.config_hash;
    j["code_version"] = HYPERLAB_VERSION;
    j["metric"] = meta.metric;
    j["tolerances"] = meta.tolerances;
    j["time_convention"] = "raw t measured from the origin time";
    for (const auto& [k, v] : table.meta.items()) j[k] = v;
    j["config"] = meta.config;
    write_file(dir / (table.name + ".meta.json"), j.dump(2) + "\n");

    if (plot && table.plot) write_file(dir / (table.name + ".svg"), table.svg());
}

std::optional<std::vector<std::string>> compare_golden(const Table& table, const std::filesystem::path& golden,
                                                       double rel_tol, double abs_tol)
{
    std::filesystem::path file = golden;
    if (std::filesystem::is_directory(golden))
        file = golden / (table.name + ".csv");
    else if (golden.stem().string() != table.name)
        return std::nullopt;

    std::vector<std::string> issues;
    std::ifstream in(file);
    if (!in) return std::vector<std::string>{table.name + ": golden file " + file.string() + " is missing"};
    std::vector<std::vector<std::string>> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(split_csv_line(line));

    std::istringstream mine(table.csv());
    std::vector<std::vector<std::string>> ours;
    for (std::string line; std::getline(mine, line);) ours.push_back(split_csv_line(line));

    if (lines.empty() || lines[0] != ours[0]) return std::vector<std::string>{table.name + ": header differs"};
    if (lines.size() != ours.size())
        return std::vector<std::string>{table.name + ": " + std::to_string(ours.size() - 1) + " rows, golden has " +
                                        std::to_string(lines.size() - 1)};
    for (std::size_t r = 1; r < ours.size(); ++r) {
        if (lines[r].size() != ours[r].size()) {
            issues.push_back(table.name + ": row " + std::to_string(r) + " has a different cell count");
            continue;
        }
        for (std::size_t c = 0; c < ours[r].size(); ++c) {
            const auto a = as_number(ours[r][c]), b = as_number(lines[r][c]);
            bool same = ours[r][c] == lines[r][c];
            if (!same && a && b)
                same = (std::isnan(*a) && std::isnan(*b)) ||
                       std::abs(*a - *b) <= abs_tol + rel_tol * std::max(std::abs(*a), std::abs(*b));
            if (!same)
                issues.push_back(table.name + ": row " + std::to_string(r) + " column " + ours[0][c] + ": " +
                                 ours[r][c] + " vs golden " + lines[r][c]);
        }
    }
    return issues;
}

} // namespace hyperlab::cli

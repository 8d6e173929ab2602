#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyqr/cost.hpp"
#include "polyqr/mimo.hpp"

namespace polyqr {

inline constexpr const char* kVersion = "0.1.0";

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 when absent
};

// "# polyqr <version>" followed by "# config: <compact JSON>".
std::string header_block(const nlohmann::json& config, const std::string& prefix = "# ");

// RFC-4180 quoting, '\n' line ends, optional header block in front.
std::string csv_string(const CsvTable& t, const nlohmann::json* config = nullptr);
// Skips leading '#' lines; handles quoted fields with embedded commas, quotes and newlines.
CsvTable parse_csv(const std::string& text);

struct Series {
    std::string name;
    std::vector<double> x, y;
};

struct SvgOptions {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    int width = 640;
    int height = 420;
};

// Standalone single-panel line chart; non-positive values are dropped on a log axis.
std::string svg_lines(const std::vector<Series>& series, const SvgOptions& opt,
                      const nlohmann::json* config = nullptr);

// Writes text to path; failure raises an io error.
void write_file(const std::string& path, const std::string& text);
void emit_csv(const CsvTable& t, const std::string& path, const nlohmann::json& config);
void emit_svg_lines(const std::vector<Series>& series, const SvgOptions& opt, const std::string& path,
                    const nlohmann::json& config);

// Shortest decimal that parses back to the same double.
std::string format_double(double x);

// mt, mr, L, N, D, algorithm, total, ratio_vs_I, then c_ip_h, c_ip_qr, total_exact, ratio_exact.
CsvTable cost_table(const std::vector<SweepRow>& rows);
// snr_db, bits, errors, ber, ci_low, ci_high
CsvTable ber_table(const BERResult& r);
BERResult ber_from_table(const CsvTable& t);

}  // namespace polyqr

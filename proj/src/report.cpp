#include "polyqr/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace polyqr {

namespace {

bool needs_quotes(const std::string& s) {
    return s.find_first_of(",\"\r\n") != std::string::npos;
}

std::string quote(const std::string& s) {
    if (!needs_quotes(s)) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fixed(double v, int digits = 1) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

std::string tick_label(double v, bool log) {
    if (log) return "1e" + std::to_string(static_cast<int>(std::lround(v)));
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
}

std::vector<double> nice_ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    std::vector<double> t;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(v);
    return t;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

std::string header_block(const nlohmann::json& config, const std::string& prefix) {
    return prefix + "polyqr " + kVersion + "\n" + prefix + "config: " + config.dump() + "\n";
}

std::string csv_string(const CsvTable& t, const nlohmann::json* config) {
    std::string out = config ? header_block(*config) : "";
    auto line = [&](const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += quote(cells[i]);
        }
        out += '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) {
        if (r.size() != t.header.size()) fail(ErrorKind::parameter, "CSV row width differs from the header");
        line(r);
    }
    return out;
}

CsvTable parse_csv(const std::string& text) {
    size_t pos = 0;
    while (pos < text.size() && text[pos] == '#') {
        const size_t nl = text.find('\n', pos);
        pos = nl == std::string::npos ? text.size() : nl + 1;
    }
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> rec;
    std::string field;
    bool quoted = false, any = false;
    for (; pos < text.size(); ++pos) {
        const char c = text[pos];
        if (quoted) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    field += '"';
                    ++pos;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            rec.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
            if (any || !field.empty()) {
                rec.push_back(std::move(field));
                records.push_back(std::move(rec));
            }
            rec.clear();
            field.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) fail(ErrorKind::schema, "unterminated quoted CSV field");
    if (any || !field.empty()) {
        rec.push_back(std::move(field));
        records.push_back(std::move(rec));
    }
    CsvTable t;
    if (records.empty()) return t;
    t.header = std::move(records.front());
    for (size_t i = 1; i < records.size(); ++i) {
        if (records[i].size() != t.header.size()) fail(ErrorKind::schema, "CSV row width differs from the header");
        t.rows.push_back(std::move(records[i]));
    }
    return t;
}

std::string svg_lines(const std::vector<Series>& series, const SvgOptions& opt, const nlohmann::json* config) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
    const double W = opt.width, H = opt.height, ml = 70, mr = 150, mt = 40, mb = 55;
    auto ty = [&](double y) { return opt.log_y ? std::log10(y) : y; };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const Series& s : series) {
        if (s.x.size() != s.y.size()) fail(ErrorKind::parameter, "series x and y lengths differ");
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (opt.log_y && !(s.y[i] > 0)) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (opt.log_y) y0 = std::floor(y0), y1 = std::ceil(y1);
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pw = W - ml - mr, ph = H - mt - mb;
    auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return mt + (1 - (y - y0) / (y1 - y0)) * ph; };

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    if (config) {
        std::string h = header_block(*config, "");
        for (size_t p; (p = h.find("--")) != std::string::npos;) h.replace(p, 2, "- -");
        os << "<!--\n" << h << "-->\n";
    }
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
       << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : nice_ticks(x0, x1)) {
        os << "<line x1=\"" << fixed(px(t)) << "\" y1=\"" << mt + ph << "\" x2=\"" << fixed(px(t)) << "\" y2=\""
           << mt + ph + 5 << "\" stroke=\"black\"/>";
        os << "<text x=\"" << fixed(px(t)) << "\" y=\"" << mt + ph + 19 << "\" text-anchor=\"middle\">"
           << tick_label(t, false) << "</text>\n";
    }
    std::vector<double> yt;
    if (opt.log_y) {
        for (double v = y0; v <= y1 + 1e-9; v += 1) yt.push_back(v);
    } else {
        yt = nice_ticks(y0, y1);
    }
    for (double t : yt) {
        os << "<line x1=\"" << ml << "\" y1=\"" << fixed(py(t)) << "\" x2=\"" << ml + pw << "\" y2=\""
           << fixed(py(t)) << "\" stroke=\"#dddddd\"/>";
        os << "<text x=\"" << ml - 6 << "\" y=\"" << fixed(py(t) + 4) << "\" text-anchor=\"end\">"
           << tick_label(t, opt.log_y) << "</text>\n";
    }
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
       << xml_escape(opt.x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << mt + ph / 2 << ")\">" << xml_escape(opt.y_label) << "</text>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(opt.title)
       << "</text>\n";
    for (size_t k = 0; k < series.size(); ++k) {
        const Series& s = series[k];
        const char* col = palette[k % (sizeof(palette) / sizeof(*palette))];
        os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.8\" points=\"";
        bool first = true;
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (opt.log_y && !(s.y[i] > 0)) continue;
            os << (first ? "" : " ") << fixed(px(s.x[i]), 2) << ',' << fixed(py(ty(s.y[i])), 2);
            first = false;
        }
        os << "\"/>\n";
        const double ly = mt + 16 + 18 * static_cast<double>(k);
        os << "<line x1=\"" << ml + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw + 36 << "\" y2=\"" << ly
           << "\" stroke=\"" << col << "\" stroke-width=\"1.8\"/>";
        os << "<text x=\"" << ml + pw + 42 << "\" y=\"" << ly + 4 << "\">" << xml_escape(s.name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
    f << text;
    f.flush();
    if (!f) fail(ErrorKind::io, "failed writing '" + path + "'");
}

void emit_csv(const CsvTable& t, const std::string& path, const nlohmann::json& config) {
    write_file(path, csv_string(t, &config));
}

void emit_svg_lines(const std::vector<Series>& series, const SvgOptions& opt, const std::string& path,
                    const nlohmann::json& config) {
    write_file(path, svg_lines(series, opt, &config));
}

std::string format_double(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

CsvTable cost_table(const std::vector<SweepRow>& rows) {
    CsvTable t;
    t.header = {"mt", "mr", "L", "N", "D", "algorithm", "total", "ratio_vs_I",
                "c_ip_h", "c_ip_qr", "total_exact", "ratio_exact"};
    for (const SweepRow& r : rows) {
        const CostParams& p = r.params;
        t.rows.push_back({std::to_string(p.M_T), std::to_string(p.M_R), std::to_string(p.L), std::to_string(p.N),
                          std::to_string(p.D), to_string(r.report.algorithm), round_half_even(r.report.total()),
                          round_half_even(r.ratio_to_I), to_string(p.c_IP_H), to_string(p.c_IP_QR),
                          to_string(r.report.total()), to_string(r.ratio_to_I)});
    }
    return t;
}

CsvTable ber_table(const BERResult& r) {
    CsvTable t;
    t.header = {"snr_db", "bits", "errors", "ber", "ci_low", "ci_high"};
    for (const BERPoint& p : r.points)
        t.rows.push_back({format_double(p.snr_db), std::to_string(p.bits), std::to_string(p.errors),
                          format_double(p.ber), format_double(p.ci_low), format_double(p.ci_high)});
    return t;
}

BERResult ber_from_table(const CsvTable& t) {
    const int c[6] = {t.column("snr_db"), t.column("bits"), t.column("errors"),
                      t.column("ber"), t.column("ci_low"), t.column("ci_high")};
    for (int i : c)
        if (i < 0) fail(ErrorKind::schema, "BER table lacks a required column");
    BERResult r;
    try {
        for (const auto& row : t.rows) {
            BERPoint p;
            p.snr_db = std::stod(row[static_cast<size_t>(c[0])]);
            p.bits = std::stoll(row[static_cast<size_t>(c[1])]);
            p.errors = std::stoll(row[static_cast<size_t>(c[2])]);
            p.ber = std::stod(row[static_cast<size_t>(c[3])]);
            p.ci_low = std::stod(row[static_cast<size_t>(c[4])]);
            p.ci_high = std::stod(row[static_cast<size_t>(c[5])]);
            r.points.push_back(p);
        }
    } catch (const std::logic_error&) {
        fail(ErrorKind::schema, "malformed number in BER table");
    }
    return r;
}

}  // namespace polyqr

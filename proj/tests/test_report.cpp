#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "polyqr/report.hpp"

using namespace polyqr;

TEST_CASE("csv quoting and parse-back") {
    CsvTable t;
    t.header = {"a", "b,c", "d"};
    t.rows = {{"1", "x \"y\"", "line\nbreak"}, {"", "2.5", "-3"}};
    const nlohmann::json cfg = {{"seed", 4}, {"name", "demo"}};
    const std::string s = csv_string(t, &cfg);
    CHECK(s.rfind("# polyqr ", 0) == 0);
    CHECK(s.find("# config: {\"name\":\"demo\",\"seed\":4}\n") != std::string::npos);
    CHECK(s.find("\"b,c\"") != std::string::npos);
    CHECK(s.find("\"x \"\"y\"\"\"") != std::string::npos);
    const CsvTable u = parse_csv(s);
    CHECK(u.header == t.header);
    CHECK(u.rows == t.rows);
    CHECK(u.column("d") == 2);
    CHECK(u.column("zz") == -1);
    CHECK(parse_csv("x,y\r\n1,2\r\n").rows == std::vector<std::vector<std::string>>{{"1", "2"}});
    CHECK_THROWS_AS(parse_csv("x,y\n1\n"), Error);
    CHECK_THROWS_AS(parse_csv("x\n\"open\n"), Error);
}

TEST_CASE("ber table round trip") {
    BERResult r;
    for (int i = 0; i < 4; ++i) {
        BERPoint p;
        p.snr_db = 3.0 * i + 0.5;
        p.bits = 1000000 + i;
        p.errors = 12345 / (i + 1);
        p.ber = static_cast<double>(p.errors) / static_cast<double>(p.bits);
        std::tie(p.ci_low, p.ci_high) = wilson_interval(p.errors, p.bits);
        r.points.push_back(p);
    }
    const CsvTable t = ber_table(r);
    CHECK(t.header == std::vector<std::string>{"snr_db", "bits", "errors", "ber", "ci_low", "ci_high"});
    const BERResult b = ber_from_table(parse_csv(csv_string(t)));
    REQUIRE(b.points.size() == r.points.size());
    for (size_t i = 0; i < r.points.size(); ++i) {
        CHECK(b.points[i].snr_db == r.points[i].snr_db);
        CHECK(b.points[i].bits == r.points[i].bits);
        CHECK(b.points[i].errors == r.points[i].errors);
        CHECK(b.points[i].ber == r.points[i].ber);
        CHECK(b.points[i].ci_low == r.points[i].ci_low);
        CHECK(b.points[i].ci_high == r.points[i].ci_high);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1e-7) == "1e-07");
}

TEST_CASE("cost table schema") {
    CostParams p;
    p.M_T = 2;
    p.M_R = 4;
    p.L = 15;
    p.N = p.D = 512;
    p.c_IP_QR = 4;
    p.schedule = Schedule::pow2;
    p.known_tones = 16;
    const CsvTable t = cost_table(sweep({p}, {Algorithm::I, Algorithm::II}));
    const std::vector<std::string> lead(t.header.begin(), t.header.begin() + 8);
    CHECK(lead == std::vector<std::string>{"mt", "mr", "L", "N", "D", "algorithm", "total", "ratio_vs_I"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][5] == "I");
    CHECK(t.rows[0][7] == "1.00");
    CHECK(t.rows[1][5] == "II");
    CHECK(t.rows[1][7] == "0.82");
}

TEST_CASE("svg chart") {
    const Series s{"exact", {0, 10}, {0.1, 0.001}};
    SvgOptions o;
    o.title = "BER <demo>";
    o.log_y = true;
    const nlohmann::json cfg = {{"flag", "--x"}};
    const std::string svg = svg_lines({s}, o, &cfg);
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\"") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
    CHECK(svg.find("BER &lt;demo&gt;") != std::string::npos);
    CHECK(svg.find("1e-3") != std::string::npos);
    // comment bodies may not contain a double hyphen
    const auto a = svg.find("<!--"), b = svg.find("-->");
    REQUIRE(a != std::string::npos);
    CHECK(svg.substr(a + 4, b - a - 4).find("--") == std::string::npos);
    CHECK(svg.find("href") == std::string::npos);
    // zeros vanish on the log axis without breaking the chart
    const std::string z = svg_lines({Series{"z", {0, 1, 2}, {0.5, 0, 0.01}}}, o);
    CHECK(z.find("nan") == std::string::npos);
    CHECK(z.find("inf") == std::string::npos);
    CHECK_THROWS_AS(svg_lines({Series{"bad", {0, 1}, {1}}}, o), Error);
}

TEST_CASE("file output") {
    const auto dir = std::filesystem::temp_directory_path() / "polyqr_report_test";
    std::filesystem::create_directories(dir);
    CsvTable t;
    t.header = {"x"};
    t.rows = {{"1"}};
    const auto path = (dir / "t.csv").string();
    emit_csv(t, path, {{"k", 1}});
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    CHECK(parse_csv(ss.str()).rows == t.rows);
    try {
        emit_csv(t, (dir / "missing" / "t.csv").string(), {});
        FAIL("wrote into a missing directory");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
    }
    std::filesystem::remove_all(dir);
}

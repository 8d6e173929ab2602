#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "polyqr/cost.hpp"
#include "polyqr/interp.hpp"
#include "polyqr/mimo.hpp"
#include "polyqr/report.hpp"

using namespace polyqr;

namespace {

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::schema:
        case ErrorKind::parameter:
        case ErrorKind::domain:
        case ErrorKind::unsupported_regime: return 2;
        case ErrorKind::infeasible:
        case ErrorKind::missing_data: return 3;
        case ErrorKind::numerical:
        case ErrorKind::degenerate:
        case ErrorKind::conditioning:
        case ErrorKind::io: return 4;
    }
    return 4;
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorKind::schema, "cannot read config '" + path + "'");
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::schema, "config '" + path + "' is not valid JSON: " + e.what());
    }
}

void output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
    } else {
        write_file(path, text);
    }
}

int default_threads() {
    if (const char* e = std::getenv("POLYQR_THREADS")) {
        try {
            const int n = std::stoi(e);
            if (n >= 1) return n;
        } catch (const std::logic_error&) {
        }
        fail(ErrorKind::schema, "POLYQR_THREADS must be a positive integer");
    }
    return 1;
}

struct Common {
    std::uint64_t seed = 1;
    bool seed_set = false;
    int threads = 0;
    std::string out;
};

struct QrdOpts {
    std::string config;
    int mt = 2, mr = 4, L = 3, N = 64, D = -1;
    std::string algorithm = "II", schedule = "exact_minimal", engine = "direct";
    int b_prime = 0, v1 = -1;
    double sigma = 0;
};

void run_qrd(const Common& g, const QrdOpts& o, CLI::App& cmd) {
    nlohmann::json cfg = o.config.empty() ? nlohmann::json::object() : read_json(o.config);
    static const std::set<std::string> keys = {"M_T", "M_R", "L", "N", "D", "E", "algorithm", "schedule",
                                               "engine_QR", "sigma_w", "channel"};
    if (!cfg.is_object()) fail(ErrorKind::schema, "qrd config must be a JSON object");
    for (const auto& [k, v] : cfg.items())
        if (!keys.count(k)) fail(ErrorKind::schema, "unknown qrd key '" + k + "'");
    auto set = [&](const char* flag, const char* key, auto value) {
        if (cmd.count(flag) || !cfg.contains(key)) cfg[key] = value;
    };
    set("--mt", "M_T", o.mt);
    set("--mr", "M_R", o.mr);
    set("-L", "L", o.L);
    set("-N", "N", o.N);
    set("--algorithm", "algorithm", o.algorithm);
    set("--schedule", "schedule", o.schedule);
    set("--sigma", "sigma_w", o.sigma);
    if (cmd.count("--engine") || cmd.count("--b-prime") || cmd.count("--v1") || !cfg.contains("engine_QR")) {
        nlohmann::json e = {{"engine", o.engine}, {"B_prime", o.b_prime}};
        if (o.v1 >= 0) e["v1"] = o.v1;
        cfg["engine_QR"] = e;
    }
    int MT, MR, L, N;
    std::vector<int> D, E;
    Algorithm alg;
    Schedule sched;
    double sigma;
    try {
        MT = cfg["M_T"].get<int>();
        MR = cfg["M_R"].get<int>();
        L = cfg["L"].get<int>();
        N = cfg["N"].get<int>();
        alg = algorithm_from_string(cfg["algorithm"].get<std::string>());
        sched = schedule_from_string(cfg["schedule"].get<std::string>());
        sigma = cfg["sigma_w"].get<double>();
        if (cmd.count("-D")) cfg["D"] = o.D;
        if (!cfg.contains("D")) cfg["D"] = N;
        if (cfg["D"].is_number_integer()) {
            D.resize(static_cast<size_t>(std::max(0, cfg["D"].get<int>())));
            std::iota(D.begin(), D.end(), 0);
        } else {
            D = cfg["D"].get<std::vector<int>>();
        }
        E = cfg.contains("E") ? cfg["E"].get<std::vector<int>>() : D;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::schema, std::string("qrd config: ") + e.what());
    }
    if (D.empty()) fail(ErrorKind::infeasible, "empty data tone set");
    const auto sim = sim_config_from_json({{"engine_QR", cfg["engine_QR"]}});
    LaurentPolyMatrix H;
    if (cfg.contains("channel")) {
        H = lp_from_json(cfg["channel"]);
        if (H.rows() != MR || H.cols() != MT) fail(ErrorKind::schema, "channel shape disagrees with M_R x M_T");
        if (H.v1() != 0 || H.v2() > L) fail(ErrorKind::schema, "channel must be causal with degree at most L");
    } else {
        std::mt19937_64 rng(g.seed);
        H = draw_channel(MT, MR, L, rng).transfer();
        cfg["seed"] = g.seed;
    }
    const ToneSets t = build_tone_sets(N, D, E, L, MT, sched);
    std::vector<CMat> HE;
    for (int n : t.E) HE.push_back(H.eval(tone_point(n, N)));
    AlgoConfig ac;
    ac.engine_QR = sim.algo.engine_QR;
    ac.sigma_w = sigma;
    const PerToneFactors f = run_algorithm(alg, HE, t, L, ac);

    std::ostringstream os;
    os << nlohmann::json{{"polyqr", kVersion}, {"config", cfg}}.dump() << '\n';
    for (size_t i = 0; i < f.tones.size(); ++i)
        os << nlohmann::json{{"tone", f.tones[i]}, {"Q", matrix_to_json(f.factors[i].Q)},
                             {"R", matrix_to_json(f.factors[i].R)}}.dump()
           << '\n';
    output(g.out, os.str());
    const OpCounts& c = f.counts;
    std::cerr << "qr " << c.qr << ", map " << c.map << ", demap " << c.demap << ", reduction " << c.reduction
              << ", H evals " << c.ip_H_evals << ", QR evals " << c.ip_QR_evals << ", fallback tones "
              << f.fallback_tones.size() << '\n';
}

struct CostOpts {
    std::string config;
    bool table2 = false, breakeven = false;
    int mt = 2, mr = 4, L = 15, N = 512, D = -1, known = 0;
    std::string cip_h = "2", cip_qr = "2", schedule = "exact_minimal";
    std::vector<std::string> algorithms{"I", "II", "III"};
};

void run_cost(const Common& g, const CostOpts& o, CLI::App& cmd) {
    std::vector<CostParams> grid;
    std::vector<Algorithm> algs;
    nlohmann::json resolved;
    if (o.table2) {
        grid = table2_grid();
        algs = {Algorithm::II};
        resolved = {{"table2", true}};
    } else {
        nlohmann::json cfg = o.config.empty() ? nlohmann::json::object() : read_json(o.config);
        if (!cfg.is_object()) fail(ErrorKind::schema, "cost config must be a JSON object");
        auto set = [&](const char* flag, const char* key, auto value) {
            if (cmd.count(flag) || !cfg.contains(key)) cfg[key] = value;
        };
        set("--mt", "M_T", o.mt);
        set("--mr", "M_R", o.mr);
        set("-L", "L", o.L);
        set("-N", "N", o.N);
        if (cmd.count("-D")) cfg["D"] = o.D;
        else if (!cfg.contains("D")) cfg["D"] = cfg["N"];
        set("--cip-h", "c_IP_H", o.cip_h);
        set("--cip-qr", "c_IP_QR", o.cip_qr);
        set("--schedule", "schedule", o.schedule);
        set("--known-tones", "known_tones", o.known);
        const CostParams p = cost_params_from_json(cfg);
        grid = {p};
        for (const auto& a : o.algorithms) algs.push_back(algorithm_from_string(a));
        resolved = to_json(p);
        if (o.breakeven) {
            const BreakEven b = break_even(p);
            CsvTable t;
            t.header = {"quantity", "exact", "rounded"};
            auto row = [&](const char* name, const Rational& v) {
                t.rows.push_back({name, to_string(v), round_half_even(v)});
            };
            row("c_IP_max_II", b.c_IP_max_II);
            if (b.c_IP_max_III) row("c_IP_max_III", *b.c_IP_max_III);
            row("delta_c_QR", b.delta_c_QR);
            row("delta_c_map", b.delta_c_map);
            row("delta_c_IP", b.delta_c_IP);
            row("c_red_III", b.c_red_III);
            output(g.out, csv_string(t, &resolved));
            return;
        }
    }
    resolved["algorithms"] = nlohmann::json::array();
    for (Algorithm a : algs) resolved["algorithms"].push_back(to_string(a));
    const CsvTable t = cost_table(sweep(grid, algs));
    output(g.out, csv_string(t, &resolved));
}

struct BerOpts {
    std::string config, svg;
    int trials = -1;
    std::vector<double> snr;
};

void run_ber(const Common& g, const BerOpts& o, CLI::App& cmd) {
    nlohmann::json j = o.config.empty() ? nlohmann::json::object() : read_json(o.config);
    SimConfig c = sim_config_from_json(j);
    if (cmd.count("--trials")) c.trials = o.trials;
    if (cmd.count("--snr")) c.snr_db = o.snr;
    if (g.seed_set || !j.contains("seed")) c.seed = g.seed;
    c.threads = g.threads;
    const BERResult r = ber_experiment(c);
    nlohmann::json resolved = to_json(c);
    resolved.erase("threads");  // does not affect results
    output(g.out, csv_string(ber_table(r), &resolved));
    if (!o.svg.empty()) {
        Series s{std::string(to_string(c.algorithm)) + (c.coding == Coding::none ? "" : " coded"), {}, {}};
        for (const auto& p : r.points) {
            s.x.push_back(p.snr_db);
            s.y.push_back(p.ber);
        }
        SvgOptions so;
        so.title = "Bit error rate";
        so.x_label = "SNR [dB]";
        so.y_label = "BER";
        so.log_y = true;
        emit_svg_lines({s}, so, o.svg, resolved);
    }
    if (r.fallback_tones) std::cerr << "fallback tones: " << r.fallback_tones << '\n';
}

struct DesignOpts {
    int B = 64, R = 8, v1 = 15, v2 = -1, b_prime = 0, offset = 0;
    bool optimize = false;
    int mt = 2, L = 15, mr = 4, trials = 200;
    std::string v2_mode = "symmetric";
};

void run_design(const Common& g, const DesignOpts& o) {
    const EquidistantGrid grid{o.B, o.R, o.offset};
    const int bp = o.b_prime ? o.b_prime : o.B;
    nlohmann::json resolved = {{"B", o.B}, {"R", o.R}, {"offset", o.offset}, {"B_prime", bp}};
    int v1 = o.v1, v2 = o.v2 < 0 ? o.v1 : o.v2;
    if (o.optimize) {
        const V2Mode mode = o.v2_mode == "symmetric" ? V2Mode::symmetric : V2Mode::fixed_total;
        if (o.v2_mode != "symmetric" && o.v2_mode != "fixed_total") fail(ErrorKind::schema, "unknown v2 mode");
        const int MT = o.mt, MR = o.mr, L = o.L;
        const ChannelSampler sampler = [=](std::mt19937_64& rng) { return draw_channel(MT, MR, L, rng).transfer(); };
        const V1Search s = inexact_optimize_v1(grid, bp, MT, L, sampler, o.trials, g.seed, mode);
        v1 = s.v1_star;
        v2 = mode == V2Mode::symmetric ? v1 : 2 * MT * L - v1;
        resolved["search"] = {{"M_T", MT}, {"M_R", MR}, {"L", L}, {"trials", o.trials}, {"seed", g.seed},
                              {"v2_mode", o.v2_mode}, {"v1_star", s.v1_star}, {"tie", s.tie},
                              {"error_curve", s.error_curve}};
    }
    resolved["v1"] = v1;
    resolved["v2"] = v2;
    nlohmann::json d = to_json(fir_design(grid, v1, v2, bp));
    d["header"] = {{"polyqr", kVersion}, {"config", resolved}};
    output(g.out, d.dump() + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Polynomial-matrix QR preprocessing for MIMO-OFDM: factors, cost model, BER"};
    app.require_subcommand(1);
    Common g;
    app.add_option("--seed", g.seed, "master seed for all randomness")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads (default: POLYQR_THREADS or 1)");
    app.add_option("-o,--out", g.out, "output file (default: stdout)");

    QrdOpts qo;
    CLI::App* qrd = app.add_subcommand("qrd", "per-tone QR factors of one channel as JSON lines");
    qrd->add_option("--config", qo.config, "JSON config");
    qrd->add_option("--mt", qo.mt);
    qrd->add_option("--mr", qo.mr);
    qrd->add_option("-L", qo.L, "channel order");
    qrd->add_option("-N", qo.N, "tones");
    qrd->add_option("-D", qo.D, "data tones 0..D-1");
    qrd->add_option("--algorithm", qo.algorithm, "I, II, III, I-MMSE, II-MMSE, III-MMSE");
    qrd->add_option("--schedule", qo.schedule, "exact_minimal or pow2");
    qrd->add_option("--engine", qo.engine, "direct, fft or fir");
    qrd->add_option("--b-prime", qo.b_prime, "fir support");
    qrd->add_option("--v1", qo.v1, "assumed degree for inexact fir");
    qrd->add_option("--sigma", qo.sigma, "noise standard deviation (MMSE variants)");

    CostOpts co;
    CLI::App* cost = app.add_subcommand("cost", "arithmetic cost of the preprocessing algorithms as CSV");
    cost->add_option("--config", co.config, "JSON cost parameters");
    cost->add_flag("--table2", co.table2, "the twelve reference II-versus-I configurations");
    cost->add_flag("--break-even", co.breakeven, "break-even interpolation costs instead of totals");
    cost->add_option("--mt", co.mt);
    cost->add_option("--mr", co.mr);
    cost->add_option("-L", co.L);
    cost->add_option("-N", co.N);
    cost->add_option("-D", co.D);
    cost->add_option("--cip-h", co.cip_h, "c_IP for the channel (rational)");
    cost->add_option("--cip-qr", co.cip_qr, "c_IP for the mapped factors (rational)");
    cost->add_option("--schedule", co.schedule);
    cost->add_option("--known-tones", co.known);
    cost->add_option("--algorithms", co.algorithms)->delimiter(',');

    BerOpts bo;
    CLI::App* ber = app.add_subcommand("ber", "Monte Carlo bit error rate as CSV");
    ber->add_option("--config", bo.config, "JSON simulation config");
    ber->add_option("--trials", bo.trials);
    ber->add_option("--snr", bo.snr, "SNR points in dB")->delimiter(',');
    ber->add_option("--svg", bo.svg, "also write a BER chart");

    DesignOpts dopt;
    CLI::App* design = app.add_subcommand("interp-design", "FIR interpolation design as JSON");
    design->add_option("--B", dopt.B, "base points");
    design->add_option("--R", dopt.R, "upsampling ratio");
    design->add_option("--v1", dopt.v1);
    design->add_option("--v2", dopt.v2, "default: v1");
    design->add_option("--b-prime", dopt.b_prime, "support length (default: B)");
    design->add_option("--offset", dopt.offset);
    design->add_flag("--optimize", dopt.optimize, "choose v1 by the inexact error metric");
    design->add_option("--mt", dopt.mt);
    design->add_option("--mr", dopt.mr);
    design->add_option("-L", dopt.L);
    design->add_option("--trials", dopt.trials);
    design->add_option("--v2-mode", dopt.v2_mode, "symmetric or fixed_total");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    try {
        g.seed_set = app.count("--seed") > 0;
        if (g.threads == 0) g.threads = default_threads();
        if (g.threads < 1) fail(ErrorKind::schema, "--threads must be positive");
        if (qrd->parsed()) run_qrd(g, qo, *qrd);
        if (cost->parsed()) run_cost(g, co, *cost);
        if (ber->parsed()) run_ber(g, bo, *ber);
        if (design->parsed()) run_design(g, dopt);
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}

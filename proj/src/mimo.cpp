#include "polyqr/mimo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <thread>

namespace polyqr {

namespace {

constexpr unsigned kG0 = 0133, kG1 = 0171;
constexpr int kStates = 64;

int parity(unsigned x) { return __builtin_parity(x); }

double level(unsigned two_bits) {
    static constexpr double lv[4] = {-3, -1, 3, 1};  // 00, 01, 10, 11
    return lv[two_bits & 3U];
}

unsigned unlevel(double x) {
    if (x < -2) return 0;
    if (x < 0) return 1;
    if (x < 2) return 3;
    return 2;
}

cd cn(std::mt19937_64& rng, double var) {
    std::normal_distribution<double> g(0.0, std::sqrt(var / 2));
    const double re = g(rng);
    return {re, g(rng)};
}

std::mt19937_64 trial_stream(std::uint64_t seed, std::uint64_t trial) {
    std::seed_seq s{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
    return std::mt19937_64(s);
}

}  // namespace

ChannelRealization draw_channel(int M_T, int M_R, int L, std::mt19937_64& rng) {
    if (M_T < 1 || M_R < 1 || L < 0) fail(ErrorKind::parameter, "invalid channel dimensions");
    ChannelRealization ch;
    const double var = 1.0 / (L + 1);
    for (int l = 0; l <= L; ++l) {
        CMat H(M_R, M_T);
        for (int i = 0; i < M_R; ++i)
            for (int j = 0; j < M_T; ++j) H(i, j) = cn(rng, var);
        ch.taps.push_back(std::move(H));
    }
    return ch;
}

cd qam16_map(unsigned nibble) {
    static const double s = 1.0 / std::sqrt(10.0);
    return cd(level(nibble >> 2), level(nibble)) * s;
}

unsigned qam16_slice(cd x) {
    const double s = std::sqrt(10.0);
    return (unlevel(x.real() * s) << 2) | unlevel(x.imag() * s);
}

Constellation Constellation::qam16(int M_T) {
    if (M_T < 1) fail(ErrorKind::parameter, "need M_T >= 1");
    Constellation c;
    c.bits_per_symbol = 4;
    const double s = 1.0 / std::sqrt(static_cast<double>(M_T));
    for (unsigned b = 0; b < 16; ++b) c.points.push_back(qam16_map(b) * s);
    return c;
}

int Constellation::slice(cd x) const {
    int best = 0;
    double d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < points.size(); ++i) {
        const double e = std::norm(x - points[i]);
        if (e < d) {
            d = e;
            best = static_cast<int>(i);
        }
    }
    return best;
}

std::vector<std::uint8_t> conv_encode(const std::vector<std::uint8_t>& bits) {
    std::vector<std::uint8_t> out;
    out.reserve(2 * (bits.size() + 6));
    unsigned state = 0;
    auto push = [&](unsigned b) {
        const unsigned reg = ((b & 1U) << 6) | state;
        out.push_back(static_cast<std::uint8_t>(parity(reg & kG0)));
        out.push_back(static_cast<std::uint8_t>(parity(reg & kG1)));
        state = reg >> 1;
    };
    for (std::uint8_t b : bits) push(b);
    for (int i = 0; i < 6; ++i) push(0);
    return out;
}

std::vector<std::uint8_t> viterbi_decode(const std::vector<std::uint8_t>& coded) {
    if (coded.size() % 2 != 0 || coded.size() < 12)
        fail(ErrorKind::parameter, "coded stream must hold an even number of bits including the tail");
    const size_t steps = coded.size() / 2;
    std::array<std::uint8_t, 2 * kStates> out0{}, out1{};
    for (unsigned s = 0; s < kStates; ++s)
        for (unsigned b = 0; b < 2; ++b) {
            const unsigned reg = (b << 6) | s;
            out0[2 * s + b] = static_cast<std::uint8_t>(parity(reg & kG0));
            out1[2 * s + b] = static_cast<std::uint8_t>(parity(reg & kG1));
        }
    constexpr int inf = std::numeric_limits<int>::max() / 2;
    std::array<int, kStates> metric, next;
    metric.fill(inf);
    metric[0] = 0;
    // decision[t][ns] = previous state
    std::vector<std::array<std::uint8_t, kStates>> from(steps);
    for (size_t t = 0; t < steps; ++t) {
        next.fill(inf);
        const std::uint8_t c0 = coded[2 * t], c1 = coded[2 * t + 1];
        for (unsigned s = 0; s < kStates; ++s) {
            if (metric[s] >= inf) continue;
            for (unsigned b = 0; b < 2; ++b) {
                const unsigned ns = ((b << 6) | s) >> 1;
                const int m = metric[s] + (out0[2 * s + b] != c0) + (out1[2 * s + b] != c1);
                if (m < next[ns]) {
                    next[ns] = m;
                    from[t][ns] = static_cast<std::uint8_t>(s);
                }
            }
        }
        metric = next;
    }
    std::vector<std::uint8_t> bits(steps);
    unsigned s = 0;  // terminated trellis ends in the zero state
    for (size_t t = steps; t-- > 0;) {
        bits[t] = static_cast<std::uint8_t>((s >> 5) & 1U);
        s = from[t][s];
    }
    bits.resize(steps - 6);
    return bits;
}

std::vector<int> interleaver(int n, std::uint64_t seed) {
    if (n < 0) fail(ErrorKind::parameter, "negative interleaver length");
    std::vector<int> p(static_cast<size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

std::vector<int> sphere_decode(const CVec& y, const CMat& R, const Constellation& c) {
    const int M = static_cast<int>(R.cols());
    if (R.rows() != M || y.size() != M) fail(ErrorKind::parameter, "sphere decoder needs square R and matching y");
    const int Q = static_cast<int>(c.points.size());
    std::vector<int> cur(static_cast<size_t>(M)), best(static_cast<size_t>(M), 0);
    std::vector<std::pair<double, int>> order(static_cast<size_t>(Q) * M);
    double radius = std::numeric_limits<double>::infinity();

    auto search = [&](auto&& self, int k, double partial) -> void {
        cd b = y(k);
        for (int j = k + 1; j < M; ++j) b -= R(k, j) * c.points[static_cast<size_t>(cur[static_cast<size_t>(j)])];
        const double r = std::abs(R(k, k));
        auto* ord = &order[static_cast<size_t>(k) * Q];
        if (r > 0) {
            for (int i = 0; i < Q; ++i) ord[i] = {std::norm(b - R(k, k) * c.points[static_cast<size_t>(i)]), i};
            std::sort(ord, ord + Q);
        } else {
            // singular level: every point contributes |b|^2, enumerate all of them
            for (int i = 0; i < Q; ++i) ord[i] = {std::norm(b), i};
        }
        for (int i = 0; i < Q; ++i) {
            const double d = partial + ord[i].first;
            if (d >= radius) break;
            cur[static_cast<size_t>(k)] = ord[i].second;
            if (k == 0) {
                radius = d;
                best = cur;
            } else {
                self(self, k - 1, d);
            }
        }
    };
    if (M > 0) search(search, M - 1, 0.0);
    return best;
}

SCResult sc_detect(const CVec& y, const CMat& R, const Constellation& c) {
    const int M = static_cast<int>(R.cols());
    if (R.rows() != M || y.size() != M) fail(ErrorKind::parameter, "detector needs square R and matching y");
    SCResult out;
    out.labels.assign(static_cast<size_t>(M), 0);
    for (int k = M - 1; k >= 0; --k) {
        cd b = y(k);
        for (int j = k + 1; j < M; ++j) b -= R(k, j) * c.points[static_cast<size_t>(out.labels[static_cast<size_t>(j)])];
        if (std::abs(R(k, k)) > 0) {
            out.labels[static_cast<size_t>(k)] = c.slice(b / R(k, k));
        } else {
            out.zero_diagonal = true;
            out.labels[static_cast<size_t>(k)] = c.slice(b);
        }
    }
    return out;
}

const char* to_string(Coding c) { return c == Coding::none ? "none" : "conv_k7_r12"; }
const char* to_string(Detector d) { return d == Detector::sphere ? "sphere" : "sc"; }

namespace {

nlohmann::json engine_json(const EngineSpec& e) {
    nlohmann::json j = {{"engine", to_string(e.kind)}, {"B_prime", e.B_prime},
                        {"v2_mode", e.v2_mode == V2Mode::symmetric ? "symmetric" : "fixed_total"}};
    if (e.v1_override) j["v1"] = *e.v1_override;
    return j;
}

EngineSpec engine_from_json(const nlohmann::json& j) {
    static const std::set<std::string> keys = {"engine", "B_prime", "v1", "v2_mode"};
    if (!j.is_object()) fail(ErrorKind::schema, "engine must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (!keys.count(k)) fail(ErrorKind::schema, "unknown engine key '" + k + "'");
    EngineSpec e;
    if (j.contains("engine")) e.kind = engine_from_string(j["engine"].get<std::string>());
    e.B_prime = j.value("B_prime", 0);
    if (j.contains("v1")) e.v1_override = j["v1"].get<int>();
    const std::string m = j.value("v2_mode", std::string("symmetric"));
    if (m == "symmetric") e.v2_mode = V2Mode::symmetric;
    else if (m == "fixed_total") e.v2_mode = V2Mode::fixed_total;
    else fail(ErrorKind::schema, "unknown v2_mode '" + m + "'");
    return e;
}

}  // namespace

SimConfig sim_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorKind::schema, "simulation config must be a JSON object");
    static const std::set<std::string> keys = {"M_T", "M_R", "L", "N", "D", "snr_db", "coding", "detector",
                                               "algorithm", "schedule", "engine_H", "engine_QR", "trials",
                                               "min_bits", "max_errors", "seed", "threads"};
    for (const auto& [k, v] : j.items())
        if (!keys.count(k)) fail(ErrorKind::schema, "unknown simulation key '" + k + "'");
    SimConfig c;
    try {
        c.M_T = j.value("M_T", c.M_T);
        c.M_R = j.value("M_R", c.M_R);
        c.L = j.value("L", c.L);
        c.N = j.value("N", c.N);
        c.D = j.value("D", c.N);
        if (j.contains("snr_db")) c.snr_db = j["snr_db"].get<std::vector<double>>();
        if (j.contains("coding")) {
            const auto s = j["coding"].get<std::string>();
            if (s == "none") c.coding = Coding::none;
            else if (s == "conv_k7_r12") c.coding = Coding::conv_k7_r12;
            else fail(ErrorKind::schema, "unknown coding '" + s + "'");
        }
        if (j.contains("detector")) {
            const auto s = j["detector"].get<std::string>();
            if (s == "sphere") c.detector = Detector::sphere;
            else if (s == "sc") c.detector = Detector::sc;
            else fail(ErrorKind::schema, "unknown detector '" + s + "'");
        }
        if (j.contains("algorithm")) c.algorithm = algorithm_from_string(j["algorithm"].get<std::string>());
        if (j.contains("schedule")) c.schedule = schedule_from_string(j["schedule"].get<std::string>());
        if (j.contains("engine_H")) c.algo.engine_H = engine_from_json(j["engine_H"]);
        if (j.contains("engine_QR")) c.algo.engine_QR = engine_from_json(j["engine_QR"]);
        c.trials = j.value("trials", c.trials);
        c.min_bits = j.value("min_bits", c.min_bits);
        c.max_errors = j.value("max_errors", c.max_errors);
        c.seed = j.value("seed", c.seed);
        c.threads = j.value("threads", c.threads);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::schema, std::string("simulation config: ") + e.what());
    }
    return c;
}

nlohmann::json to_json(const SimConfig& c) {
    return {{"M_T", c.M_T}, {"M_R", c.M_R}, {"L", c.L}, {"N", c.N}, {"D", c.D}, {"snr_db", c.snr_db},
            {"coding", to_string(c.coding)}, {"detector", to_string(c.detector)},
            {"algorithm", to_string(c.algorithm)}, {"schedule", to_string(c.schedule)},
            {"engine_H", engine_json(c.algo.engine_H)}, {"engine_QR", engine_json(c.algo.engine_QR)},
            {"trials", c.trials}, {"min_bits", c.min_bits}, {"max_errors", c.max_errors},
            {"seed", c.seed}, {"threads", c.threads}};
}

std::pair<double, double> wilson_interval(std::int64_t errors, std::int64_t n, double z) {
    if (n <= 0) return {0.0, 1.0};
    const double nn = static_cast<double>(n), p = static_cast<double>(errors) / nn, z2 = z * z;
    const double centre = (p + z2 / (2 * nn)) / (1 + z2 / nn);
    const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
    return {errors == 0 ? 0.0 : std::max(0.0, centre - half), errors == n ? 1.0 : std::min(1.0, centre + half)};
}

namespace {

constexpr std::uint64_t kFnvBasis = 1469598103934665603ULL, kFnvPrime = 1099511628211ULL;

struct TrialOutcome {
    std::vector<std::int64_t> errors;
    std::vector<std::uint64_t> hashes;
    std::int64_t fallbacks = 0;
};

TrialOutcome run_trial(const SimConfig& cfg, std::uint64_t trial, const std::vector<char>& active,
                       const Constellation& con, const std::vector<int>& perm, const ToneSets& tones) {
    std::mt19937_64 rng = trial_stream(cfg.seed, trial);
    const int MT = cfg.M_T, MR = cfg.M_R, D = cfg.D, bps = con.bits_per_symbol;
    const size_t nbits = static_cast<size_t>(D) * MT * bps;
    const bool coded = cfg.coding == Coding::conv_k7_r12;

    const ChannelRealization ch = draw_channel(MT, MR, cfg.L, rng);
    std::bernoulli_distribution coin(0.5);
    std::vector<std::uint8_t> info(coded ? nbits / 2 - 6 : nbits);
    for (auto& b : info) b = coin(rng) ? 1 : 0;
    std::vector<CVec> noise(static_cast<size_t>(D));
    for (auto& w : noise) {
        w.resize(MR);
        for (int i = 0; i < MR; ++i) w(i) = cn(rng, 1.0);
    }

    std::vector<std::uint8_t> tx = info;
    if (coded) {
        const auto cw = conv_encode(info);
        tx.assign(nbits, 0);
        for (size_t i = 0; i < nbits; ++i) tx[static_cast<size_t>(perm[i])] = cw[i];
    }
    const LaurentPolyMatrix Hs = ch.transfer();
    std::vector<CMat> H(static_cast<size_t>(D));
    std::vector<CVec> x(static_cast<size_t>(D));
    for (int d = 0; d < D; ++d) {
        H[static_cast<size_t>(d)] = Hs.eval(tone_point(tones.D[static_cast<size_t>(d)], cfg.N));
        CVec c(MT);
        for (int m = 0; m < MT; ++m) {
            unsigned label = 0;
            for (int b = 0; b < bps; ++b)
                label = (label << 1) | tx[(static_cast<size_t>(d) * MT + m) * bps + b];
            c(m) = con.points[label];
        }
        x[static_cast<size_t>(d)] = H[static_cast<size_t>(d)] * c;
    }

    TrialOutcome out;
    out.errors.assign(cfg.snr_db.size(), 0);
    out.hashes.assign(cfg.snr_db.size(), kFnvBasis);
    std::optional<PerToneFactors> shared;
    std::vector<std::uint8_t> rx(nbits);
    for (size_t s = 0; s < cfg.snr_db.size(); ++s) {
        if (!active[s]) continue;
        const double sigma = std::pow(10.0, -cfg.snr_db[s] / 20.0);
        const PerToneFactors* f = nullptr;
        std::optional<PerToneFactors> local;
        if (is_mmse(cfg.algorithm)) {
            AlgoConfig ac = cfg.algo;
            ac.sigma_w = sigma;
            local = run_algorithm(cfg.algorithm, H, tones, cfg.L, ac);
            f = &*local;
        } else {
            if (!shared) shared = run_algorithm(cfg.algorithm, H, tones, cfg.L, cfg.algo);
            f = &*shared;
        }
        out.fallbacks += static_cast<std::int64_t>(f->fallback_tones.size());
        for (int d = 0; d < D; ++d) {
            const QRFactors& qr = f->factors[static_cast<size_t>(d)];
            const CVec y = x[static_cast<size_t>(d)] + sigma * noise[static_cast<size_t>(d)];
            const CVec ye = qr.Q.adjoint() * y;
            const CMat R = qr.R.leftCols(MT);
            const std::vector<int> labels =
                cfg.detector == Detector::sphere ? sphere_decode(ye, R, con) : sc_detect(ye, R, con).labels;
            for (int m = 0; m < MT; ++m)
                for (int b = 0; b < bps; ++b)
                    rx[(static_cast<size_t>(d) * MT + m) * bps + b] =
                        static_cast<std::uint8_t>((labels[static_cast<size_t>(m)] >> (bps - 1 - b)) & 1);
        }
        for (std::uint8_t b : rx) out.hashes[s] = (out.hashes[s] ^ b) * kFnvPrime;
        std::vector<std::uint8_t> dec;
        if (coded) {
            std::vector<std::uint8_t> cw(nbits);
            for (size_t i = 0; i < nbits; ++i) cw[i] = rx[static_cast<size_t>(perm[i])];
            dec = viterbi_decode(cw);
        }
        const auto& got = coded ? dec : rx;
        std::int64_t e = 0;
        for (size_t i = 0; i < info.size(); ++i) e += got[i] != info[i];
        out.errors[s] = e;
    }
    return out;
}

}  // namespace

BERResult ber_experiment(const SimConfig& cfg) {
    if (cfg.M_T < 1 || cfg.M_R < cfg.M_T) fail(ErrorKind::parameter, "need M_R >= M_T >= 1");
    if (cfg.D < 1 || cfg.D > cfg.N) fail(ErrorKind::infeasible, "need 1 <= D <= N data tones");
    if (cfg.trials < 0) fail(ErrorKind::parameter, "negative trial count");
    if (cfg.snr_db.empty()) fail(ErrorKind::parameter, "no SNR points");
    const Constellation con = Constellation::qam16(cfg.M_T);
    const int nbits = cfg.D * cfg.M_T * con.bits_per_symbol;
    const std::vector<int> perm =
        cfg.coding == Coding::conv_k7_r12 ? interleaver(nbits, cfg.seed ^ 0x9e3779b97f4a7c15ULL) : std::vector<int>{};
    std::vector<int> D(static_cast<size_t>(cfg.D));
    std::iota(D.begin(), D.end(), 0);
    const ToneSets tones = build_tone_sets(cfg.N, D, D, cfg.L, cfg.M_T, cfg.schedule);
    const std::int64_t bits_per_trial = cfg.coding == Coding::conv_k7_r12 ? nbits / 2 - 6 : nbits;

    const size_t P = cfg.snr_db.size();
    BERResult res;
    res.points.resize(P);
    for (size_t s = 0; s < P; ++s) {
        res.points[s].snr_db = cfg.snr_db[s];
        res.points[s].decisions_hash = kFnvBasis;
    }
    std::vector<char> active(P, 1);
    const int threads = std::max(1, cfg.threads);
    constexpr int kBatch = 16;  // stopping is checked between batches, independent of threads

    for (int start = 0; start < cfg.trials; start += kBatch) {
        if (std::none_of(active.begin(), active.end(), [](char a) { return a != 0; })) break;
        const int n = std::min(kBatch, cfg.trials - start);
        std::vector<TrialOutcome> outs(static_cast<size_t>(n));
        std::vector<std::exception_ptr> errs(static_cast<size_t>(threads));
        auto work = [&](int w) {
            try {
                for (int i = w; i < n; i += threads)
                    outs[static_cast<size_t>(i)] =
                        run_trial(cfg, static_cast<std::uint64_t>(start + i), active, con, perm, tones);
            } catch (...) {
                errs[static_cast<size_t>(w)] = std::current_exception();
            }
        };
        if (threads == 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
            for (auto& t : pool) t.join();
        }
        for (auto& e : errs)
            if (e) std::rethrow_exception(e);
        for (const TrialOutcome& o : outs) {
            for (size_t s = 0; s < P; ++s) {
                if (!active[s]) continue;
                res.points[s].bits += bits_per_trial;
                res.points[s].errors += o.errors[s];
                res.points[s].decisions_hash = (res.points[s].decisions_hash ^ o.hashes[s]) * kFnvPrime;
            }
            res.fallback_tones += o.fallbacks;
        }
        res.trials_run += n;
        for (size_t s = 0; s < P; ++s)
            if (cfg.max_errors > 0 && res.points[s].errors >= cfg.max_errors && res.points[s].bits >= cfg.min_bits)
                active[s] = 0;
    }
    for (BERPoint& p : res.points) {
        p.ber = p.bits ? static_cast<double>(p.errors) / static_cast<double>(p.bits) : 0.0;
        std::tie(p.ci_low, p.ci_high) = wilson_interval(p.errors, p.bits);
    }
    return res;
}

}  // namespace polyqr

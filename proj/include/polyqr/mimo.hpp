#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyqr/algos.hpp"

namespace polyqr {

struct ChannelRealization {
    std::vector<CMat> taps;  // H_0 .. H_L, each M_R x M_T

    int L() const { return static_cast<int>(taps.size()) - 1; }
    LaurentPolyMatrix transfer() const { return LaurentPolyMatrix(0, L(), taps); }
};

// Taps i.i.d. CN(0, 1/(L+1)).
ChannelRealization draw_channel(int M_T, int M_R, int L, std::mt19937_64& rng);

// 16-QAM, Gray per axis: bits (b3 b2) select the in-phase level, (b1 b0) the quadrature
// level, 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3, unit average energy before scaling.
// Nibble 0 maps to the corner (-3 - 3j)/sqrt(10).
cd qam16_map(unsigned nibble);
unsigned qam16_slice(cd x);

struct Constellation {
    std::vector<cd> points;  // indexed by label
    int bits_per_symbol = 0;

    // 16-QAM scaled by 1/sqrt(M_T) so that E[c^H c] = 1.
    static Constellation qam16(int M_T);
    int slice(cd x) const;  // nearest point
};

// Rate 1/2, constraint length 7, generators 133/171 (octal), terminated with 6 zero tail bits.
std::vector<std::uint8_t> conv_encode(const std::vector<std::uint8_t>& bits);
// Hard-decision Viterbi over the terminated trellis; coded.size() must be even and >= 12.
std::vector<std::uint8_t> viterbi_decode(const std::vector<std::uint8_t>& coded);

// Seeded pseudo-random permutation of 0..n-1: out[i] = position of input bit i.
std::vector<int> interleaver(int n, std::uint64_t seed);

// Hard ML detection: argmin ||y - R c||^2 over c in O^{M_T}, depth-first Schnorr-Euchner
// enumeration with radius pruning. Returns labels.
std::vector<int> sphere_decode(const CVec& y, const CMat& R, const Constellation& c);

struct SCResult {
    std::vector<int> labels;
    bool zero_diagonal = false;  // a level had R_kk = 0 and was sliced from the raw statistic
};
// Back-substitution with slicing at each level.
SCResult sc_detect(const CVec& y, const CMat& R, const Constellation& c);

enum class Coding { none, conv_k7_r12 };
enum class Detector { sphere, sc };
const char* to_string(Coding c);
const char* to_string(Detector d);

struct SimConfig {
    int M_T = 2;
    int M_R = 4;
    int L = 15;
    int N = 512;
    int D = 512;  // data tones 0 .. D-1; the channel is known at all of them
    std::vector<double> snr_db{0, 6, 12, 18, 24, 30};
    Coding coding = Coding::none;
    Detector detector = Detector::sphere;
    Algorithm algorithm = Algorithm::I;
    Schedule schedule = Schedule::pow2;
    AlgoConfig algo;  // sigma_w is set per SNR point for the MMSE variants
    int trials = 100;
    std::int64_t min_bits = 0;    // a point stops only once it has this many bits ...
    std::int64_t max_errors = 0;  // ... and this many errors (0: never stop early)
    std::uint64_t seed = 1;
    int threads = 1;
};

SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimConfig& c);

struct BERPoint {
    double snr_db = 0;
    std::int64_t bits = 0;
    std::int64_t errors = 0;
    double ber = 0;
    double ci_low = 0;
    double ci_high = 0;
    std::uint64_t decisions_hash = 0;  // FNV-1a over every detected bit, in trial order
};

struct BERResult {
    std::vector<BERPoint> points;
    int trials_run = 0;
    std::int64_t fallback_tones = 0;
};

// 95% Wilson score interval.
std::pair<double, double> wilson_interval(std::int64_t errors, std::int64_t n, double z = 1.959963984540054);

// One OFDM symbol per trial. Channel, data bits and unit noise are drawn once per trial from a
// stream split off the master seed and reused across SNR points; results do not depend on
// the thread count.
BERResult ber_experiment(const SimConfig& cfg);

}  // namespace polyqr

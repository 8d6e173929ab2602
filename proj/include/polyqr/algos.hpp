#pragma once

#include <string>
#include <vector>

#include "polyqr/interp.hpp"
#include "polyqr/lpmap.hpp"
#include "polyqr/qr.hpp"

namespace polyqr {

enum class Schedule { exact_minimal, pow2 };
const char* to_string(Schedule s);
Schedule schedule_from_string(const std::string& s);

// Base-set sizes B_k = |I_k|, k = 1..M_T.
std::vector<int> base_sizes(int L, int M_T, Schedule mode);

struct ToneSets {
    int N = 0;
    std::vector<int> D;               // data tones, sorted
    std::vector<int> E;               // tones with known channel samples, sorted
    std::vector<std::vector<int>> I;  // I[k-1] = I_k, sorted, nested

    int B(int k) const { return static_cast<int>(I[k - 1].size()); }
    int M_T() const { return static_cast<int>(I.size()); }
};

// pow2: I_MT = B_MT tones with stride N / B_MT from `offset`, I_k every (B_MT / B_k)-th of them.
// exact_minimal: B_k = 2kL + 1 near-equidistant nested subsets of D.
ToneSets build_tone_sets(int N, std::vector<int> D, std::vector<int> E, int L, int M_T,
                         Schedule mode, int offset = 0);

enum class Algorithm { I, II, III, I_MMSE, II_MMSE, III_MMSE };
const char* to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);
bool is_mmse(Algorithm a);

struct AlgoConfig {
    EngineSpec engine_H;   // H from E (degree (0, L))
    EngineSpec engine_QR;  // mapped factors between base sets
    InverseOptions inverse;
    double sigma_w = 0;    // MMSE variants only
    bool per_tone_sorting = false;  // ordered SC with tone-varying column order: rejected
};

struct PerToneFactors {
    std::vector<int> tones;           // = D
    std::vector<QRFactors> factors;   // aligned with tones; Q is M_R x M_T
    OpCounts counts;
    std::vector<int> fallback_tones;  // tones recovered through the rank-deficient path

    const QRFactors& at(int tone) const;
};

// H_E[i] is the M_R x M_T channel sample at tone tones.E[i].
PerToneFactors run_algorithm(Algorithm a, const std::vector<CMat>& H_E, const ToneSets& tones,
                             int L, const AlgoConfig& cfg = {});

PerToneFactors algorithm_I(const std::vector<CMat>& H_E, const ToneSets& t, int L,
                           const AlgoConfig& cfg = {});
PerToneFactors algorithm_II(const std::vector<CMat>& H_E, const ToneSets& t, int L,
                            const AlgoConfig& cfg = {});
PerToneFactors algorithm_III(const std::vector<CMat>& H_E, const ToneSets& t, int L,
                             const AlgoConfig& cfg = {});

}  // namespace polyqr

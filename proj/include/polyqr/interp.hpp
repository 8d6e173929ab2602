#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyqr/lpmat.hpp"

namespace polyqr {

namespace detail {
struct PrunedFftPlan;
}

inline const Rational kChiC{1, 4};  // complex-constant multiplier weight
inline const Rational kChiR{1, 8};  // real-constant multiplier weight

std::pair<CMat, CMat> point_matrices(const std::vector<cd>& base, const std::vector<cd>& target,
                                     int v1, int v2);

// T * B^dagger; maps base samples to target samples of any LP with degrees (v1, v2).
CMat interpolation_matrix(const std::vector<cd>& base, const std::vector<cd>& target, int v1,
                          int v2);

// N = R*B grid; base tones offset + R*k, target (k, r) at tone offset + R*k + r, r = 1..R-1,
// stored at position (R-1)*k + r - 1.
struct EquidistantGrid {
    int B = 1;
    int R = 1;
    int offset = 0;

    int N() const { return B * R; }
    std::vector<int> base_tones() const;
    std::vector<int> target_tones() const;
    int target_position(int tone) const;  // -1 for base tones
};

bool is_pow2(int x);
int ceil_log2(int x);

// Pruned-FFT upsampling; returns (R-1)*B target samples, full multiplications in *mults.
CVec upsample_fft(const CVec& base_samples, const EquidistantGrid& grid, int v1, int v2,
                  std::int64_t* mults = nullptr);

enum class Engine { direct, fft, fir };
const char* to_string(Engine e);
Engine engine_from_string(const std::string& s);

struct InterpolationDesign {
    int B = 0;
    int R = 0;
    int v1 = 0;
    int v2 = 0;
    Engine engine = Engine::fir;
    int B_prime = 0;
    CMat F0;  // (R-1) x B, zero outside the B' support
    Rational mult_count_per_target{0};
};

InterpolationDesign fir_design(const EquidistantGrid& grid, int v1, int v2, int B_prime,
                               const Rational& chi_R = kChiR, const Rational& chi_C = kChiC);
CVec fir_apply(const InterpolationDesign& d, const CVec& base_samples);
nlohmann::json to_json(const InterpolationDesign& d);

// c_IP per target point for each engine.
Rational fft_cost_per_target(int B, int R);
Rational fir_cost_per_target(int B_prime, bool real_coefficients,
                             const Rational& chi_R = kChiR, const Rational& chi_C = kChiC);

enum class V2Mode { symmetric, fixed_total };

struct EngineSpec {
    Engine kind = Engine::direct;
    int B_prime = 0;                 // fir support; 0 selects B (exact)
    std::optional<int> v1_override;  // inexact fir: assumed degree V1'
    V2Mode v2_mode = V2Mode::symmetric;
    Rational chi_R = kChiR;
    Rational chi_C = kChiC;
};

// Interpolation between arbitrary tone sets of an N-grid, backed by one engine.
// fft/fir need the base tones to form an equidistant grid covering N.
class Interpolator {
public:
    Interpolator(std::vector<int> base_tones, std::vector<int> target_tones, int N, Degree deg,
                 const EngineSpec& spec = {});

    // base_samples: |base| x E (one column per LP entry); result |target| x E
    CMat apply(const CMat& base_samples, std::int64_t* engine_mults = nullptr) const;

    const std::vector<int>& base() const { return base_; }
    const std::vector<int>& targets() const { return targets_; }
    Engine engine() const { return spec_.kind; }
    Degree degree() const { return deg_; }
    Rational cost_per_target() const { return cost_; }
    const InterpolationDesign* design() const { return design_ ? &*design_ : nullptr; }

private:
    std::vector<int> base_, targets_;
    int N_;
    Degree deg_;
    EngineSpec spec_;
    CMat W_;  // direct engine
    std::optional<EquidistantGrid> grid_;
    std::optional<InterpolationDesign> design_;
    std::shared_ptr<const detail::PrunedFftPlan> plan_;
    std::vector<int> support_;  // fir: nonzero F0 columns
    std::vector<int> pos_;  // target -> grid target position
    Rational cost_{0};
};

// Degree selection for inexact FIR interpolation (Algorithm II, M_R x M_T channels, D = N).
struct V1Search {
    int v1_star = 0;
    std::vector<double> error_curve;  // index v1-1, mean error per trial
    bool tie = false;
};

using ChannelSampler = std::function<LaurentPolyMatrix(std::mt19937_64&)>;

V1Search inexact_optimize_v1(const EquidistantGrid& grid, int B_prime, int M_T, int L,
                             const ChannelSampler& sampler, int trials, std::uint64_t seed,
                             V2Mode mode = V2Mode::symmetric);

}  // namespace polyqr

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pinn/common.hpp"

namespace pinn {

// Activation families selectable for the final hidden layer. All other
// hidden layers use plain tanh.
enum class ActFamily : std::uint8_t {
    Tanh,       // tanh(z), no coefficients
    XPlusSinSq, // z + sin^2(z), no coefficients
    ABU,        // softmax-gated blend of candidate activations with slopes
    LCTanh,     // sum_i w_i tanh(a_i z + b_i)
    LCSin,      // sum_i w_i sin(a_i z + b_i)
    LCXSinSq,   // sum_i (a_i z + b_i sin^2(c_i z + d_i))
};

// Candidate pool for ABU blends.
enum class Candidate : std::uint8_t { GELU, ELU, Sigmoid, TanhC, Sin, Exp, Softplus, Swish };

const char* to_string(ActFamily f);
const char* to_string(Candidate c);
ActFamily act_family_from_string(const std::string& s);
Candidate candidate_from_string(const std::string& s);

// Maximum derivative order any caller may request. Order 4 backs the
// reverse sweep over third-order jets; the public derivative contract is
// checked through order 3.
inline constexpr int kMaxDerivOrder = 4;

// Value and first kMaxDerivOrder derivatives of a candidate function.
std::array<double, kMaxDerivOrder + 1> candidate_derivs(Candidate c, double z);

// Descriptor of one activation instance. Coefficient layout:
//   ABU:      [alpha_1..alpha_n, beta_1..beta_n]
//   LCTanh:   [w_1..w_n, a_1..a_n, b_1..b_n]
//   LCSin:    same as LCTanh
//   LCXSinSq: [a_1..a_n, b_1..b_n, c_1..c_n, d_1..d_n]
//   Tanh, XPlusSinSq: empty
struct ActivationSpec {
    ActFamily family = ActFamily::Tanh;
    int n = 1;
    std::vector<double> coeffs;
    std::vector<Candidate> candidates;  // ABU only, 3..6 distinct entries

    int coeff_count() const;
    void validate() const;  // throws ConfigError on invariant violation
};

// softmax(alpha) with max-subtraction; entries positive, sum within 1e-12 of 1.
std::vector<double> gate_weights(std::span<const double> alpha);

// Family formula evaluated at z.
double apply(const ActivationSpec& spec, double z);

// derivs[m] = d^m/dz^m of apply at z, for m = 0..order (order <= 4).
// Writes order+1 entries.
void apply_derivs(const ActivationSpec& spec, double z, int order, std::span<double> derivs);

// Partial derivatives of each z-derivative with respect to each coefficient:
// out[j * (order + 1) + m] = d(apply^(m))/d(coeff_j) at z, m = 0..order.
// `order` may be at most 3 (these feed first-order parameter gradients of
// jet components, which use z-derivatives up to order 3).
void apply_coeff_derivs(const ActivationSpec& spec, double z, int order, std::span<double> out);

// Coefficient initialization. ABU: uniform gate, unit slopes. LC families:
// near the single-term parent with small seeded shifts.
ActivationSpec init_activation(ActFamily family, int n, std::uint64_t seed,
                               std::vector<Candidate> candidates = {});

}  // namespace pinn

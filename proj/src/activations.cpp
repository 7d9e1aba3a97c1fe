#include "pinn/activations.hpp"

#include <algorithm>
#include <cmath>

namespace pinn {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// tanh and its derivatives expressed as polynomials in u = tanh(z).
void tanh_derivs(double z, std::array<double, 5>& d) {
    double u = std::tanh(z);
    double s = 1.0 - u * u;  // sech^2
    d[0] = u;
    d[1] = s;
    d[2] = -2.0 * u * s;
    d[3] = (6.0 * u * u - 2.0) * s;
    d[4] = (16.0 * u - 24.0 * u * u * u) * s;
}

void sigmoid_derivs(double z, std::array<double, 5>& d) {
    double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    double s1 = s * (1.0 - s);
    d[0] = s;
    d[1] = s1;
    d[2] = s1 * (1.0 - 2.0 * s);
    d[3] = s1 * (1.0 - 6.0 * s + 6.0 * s * s);
    d[4] = s1 * (1.0 - 14.0 * s + 36.0 * s * s - 24.0 * s * s * s);
}

void sin_derivs(double z, std::array<double, 5>& d) {
    d[0] = std::sin(z);
    d[1] = std::cos(z);
    d[2] = -d[0];
    d[3] = -d[1];
    d[4] = d[0];
}

}  // namespace

const char* to_string(ActFamily f) {
    switch (f) {
        case ActFamily::Tanh: return "tanh";
        case ActFamily::XPlusSinSq: return "xsinsq";
        case ActFamily::ABU: return "abu";
        case ActFamily::LCTanh: return "lctanh";
        case ActFamily::LCSin: return "lcsin";
        case ActFamily::LCXSinSq: return "lcxsinsq";
    }
    return "?";
}

const char* to_string(Candidate c) {
    switch (c) {
        case Candidate::GELU: return "gelu";
        case Candidate::ELU: return "elu";
        case Candidate::Sigmoid: return "sigmoid";
        case Candidate::TanhC: return "tanh";
        case Candidate::Sin: return "sin";
        case Candidate::Exp: return "exp";
        case Candidate::Softplus: return "softplus";
        case Candidate::Swish: return "swish";
    }
    return "?";
}

ActFamily act_family_from_string(const std::string& s) {
    if (s == "tanh") return ActFamily::Tanh;
    if (s == "xsinsq" || s == "x+sin2") return ActFamily::XPlusSinSq;
    if (s == "abu") return ActFamily::ABU;
    if (s == "lctanh") return ActFamily::LCTanh;
    if (s == "lcsin") return ActFamily::LCSin;
    if (s == "lcxsinsq") return ActFamily::LCXSinSq;
    throw ConfigError("unknown activation family: " + s);
}

Candidate candidate_from_string(const std::string& s) {
    if (s == "gelu") return Candidate::GELU;
    if (s == "elu") return Candidate::ELU;
    if (s == "sigmoid") return Candidate::Sigmoid;
    if (s == "tanh") return Candidate::TanhC;
    if (s == "sin") return Candidate::Sin;
    if (s == "exp") return Candidate::Exp;
    if (s == "softplus") return Candidate::Softplus;
    if (s == "swish") return Candidate::Swish;
    throw ConfigError("unknown ABU candidate: " + s);
}

std::array<double, 5> candidate_derivs(Candidate c, double z) {
    std::array<double, 5> d{};
    switch (c) {
        case Candidate::TanhC:
            tanh_derivs(z, d);
            break;
        case Candidate::Sigmoid:
            sigmoid_derivs(z, d);
            break;
        case Candidate::Sin:
            sin_derivs(z, d);
            break;
        case Candidate::Exp: {
            double e = std::exp(z);
            d.fill(e);
            break;
        }
        case Candidate::GELU: {
            // z * Phi(z) with the exact Gaussian CDF.
            double phi = kInvSqrt2Pi * std::exp(-0.5 * z * z);
            double Phi = 0.5 * std::erfc(-z * kInvSqrt2);
            d[0] = z * Phi;
            d[1] = Phi + z * phi;
            d[2] = phi * (2.0 - z * z);
            d[3] = phi * (z * z * z - 4.0 * z);
            d[4] = phi * (-z * z * z * z + 7.0 * z * z - 4.0);
            break;
        }
        case Candidate::ELU: {
            if (z > 0.0) {
                d = {z, 1.0, 0.0, 0.0, 0.0};
            } else {
                double e = std::exp(z);
                d = {e - 1.0, e, e, e, e};
            }
            break;
        }
        case Candidate::Softplus: {
            // ln(1 + e^z); large-z guard keeps the value from overflowing.
            double sp = z > 30.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
            std::array<double, 5> s{};
            sigmoid_derivs(z, s);
            d[0] = sp;
            for (int m = 1; m <= 4; ++m) d[m] = s[m - 1];
            break;
        }
        case Candidate::Swish: {
            // z * sigmoid(z); Leibniz with the linear factor.
            std::array<double, 5> s{};
            sigmoid_derivs(z, s);
            d[0] = z * s[0];
            for (int m = 1; m <= 4; ++m) d[m] = z * s[m] + m * s[m - 1];
            break;
        }
    }
    return d;
}

int ActivationSpec::coeff_count() const {
    switch (family) {
        case ActFamily::Tanh:
        case ActFamily::XPlusSinSq: return 0;
        case ActFamily::ABU: return 2 * n;
        case ActFamily::LCTanh:
        case ActFamily::LCSin: return 3 * n;
        case ActFamily::LCXSinSq: return 4 * n;
    }
    return 0;
}

void ActivationSpec::validate() const {
    if (n < 1) throw ConfigError("activation n must be >= 1");
    if (static_cast<int>(coeffs.size()) != coeff_count())
        throw ConfigError("activation coefficient count mismatch for " +
                          std::string(to_string(family)));
    if (family == ActFamily::ABU) {
        if (n < 3 || n > 6) throw ConfigError("ABU requires 3..6 candidates");
        if (static_cast<int>(candidates.size()) != n)
            throw ConfigError("ABU candidate list length must equal n");
        for (std::size_t i = 0; i < candidates.size(); ++i)
            for (std::size_t j = i + 1; j < candidates.size(); ++j)
                if (candidates[i] == candidates[j])
                    throw ConfigError("ABU candidates must be distinct");
    } else if ((family == ActFamily::Tanh || family == ActFamily::XPlusSinSq) && n != 1) {
        throw ConfigError("single-term family requires n == 1");
    }
    if (!all_finite(coeffs)) throw ConfigError("non-finite activation coefficient");
}

std::vector<double> gate_weights(std::span<const double> alpha) {
    if (alpha.empty()) throw ConfigError("gate_weights: empty input");
    if (!all_finite(alpha)) throw NumericError("gate_weights: non-finite input");
    double m = *std::max_element(alpha.begin(), alpha.end());
    std::vector<double> g(alpha.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        g[i] = std::exp(alpha[i] - m);
        sum += g[i];
    }
    for (double& x : g) x /= sum;
    return g;
}

void apply_derivs(const ActivationSpec& spec, double z, int order, std::span<double> derivs) {
    if (order < 0 || order > kMaxDerivOrder) throw ConfigError("apply_derivs: bad order");
    for (int m = 0; m <= order; ++m) derivs[m] = 0.0;

    switch (spec.family) {
        case ActFamily::Tanh: {
            std::array<double, 5> d{};
            tanh_derivs(z, d);
            for (int m = 0; m <= order; ++m) derivs[m] = d[m];
            return;
        }
        case ActFamily::XPlusSinSq: {
            double s2 = std::sin(2.0 * z), c2 = std::cos(2.0 * z);
            double all[5] = {z + 0.5 * (1.0 - c2), 1.0 + s2, 2.0 * c2, -4.0 * s2, -8.0 * c2};
            for (int m = 0; m <= order; ++m) derivs[m] = all[m];
            return;
        }
        case ActFamily::ABU: {
            std::vector<double> g =
                gate_weights(std::span<const double>(spec.coeffs.data(), spec.n));
            const double* beta = spec.coeffs.data() + spec.n;
            for (int i = 0; i < spec.n; ++i) {
                auto cd = candidate_derivs(spec.candidates[i], beta[i] * z);
                double bp = 1.0;
                for (int m = 0; m <= order; ++m) {
                    derivs[m] += g[i] * bp * cd[m];
                    bp *= beta[i];
                }
            }
            return;
        }
        case ActFamily::LCTanh:
        case ActFamily::LCSin: {
            const double* w = spec.coeffs.data();
            const double* a = w + spec.n;
            const double* b = a + spec.n;
            for (int i = 0; i < spec.n; ++i) {
                std::array<double, 5> d{};
                double y = a[i] * z + b[i];
                if (spec.family == ActFamily::LCTanh)
                    tanh_derivs(y, d);
                else
                    sin_derivs(y, d);
                double ap = 1.0;
                for (int m = 0; m <= order; ++m) {
                    derivs[m] += w[i] * ap * d[m];
                    ap *= a[i];
                }
            }
            return;
        }
        case ActFamily::LCXSinSq: {
            const double* a = spec.coeffs.data();
            const double* b = a + spec.n;
            const double* c = b + spec.n;
            const double* dd = c + spec.n;
            for (int i = 0; i < spec.n; ++i) {
                double y = c[i] * z + dd[i];
                double s2 = std::sin(2.0 * y), c2 = std::cos(2.0 * y);
                // p[m] = d^m/dy^m sin^2(y)
                double p[5] = {0.5 * (1.0 - c2), s2, 2.0 * c2, -4.0 * s2, -8.0 * c2};
                double cp = 1.0;
                for (int m = 0; m <= order; ++m) {
                    derivs[m] += b[i] * cp * p[m];
                    cp *= c[i];
                }
                derivs[0] += a[i] * z;
                if (order >= 1) derivs[1] += a[i];
            }
            return;
        }
    }
}

double apply(const ActivationSpec& spec, double z) {
    double d[1];
    apply_derivs(spec, z, 0, d);
    return d[0];
}

void apply_coeff_derivs(const ActivationSpec& spec, double z, int order, std::span<double> out) {
    if (order < 0 || order > 3) throw ConfigError("apply_coeff_derivs: bad order");
    const int stride = order + 1;
    for (std::size_t i = 0; i < static_cast<std::size_t>(spec.coeff_count()) * stride; ++i)
        out[i] = 0.0;

    switch (spec.family) {
        case ActFamily::Tanh:
        case ActFamily::XPlusSinSq:
            return;
        case ActFamily::ABU: {
            std::vector<double> g =
                gate_weights(std::span<const double>(spec.coeffs.data(), spec.n));
            const double* beta = spec.coeffs.data() + spec.n;
            // term[i][m] = g_i beta_i^m C_i^(m)(beta_i z); sigma^(m) = sum_i term[i][m]
            std::vector<std::array<double, 5>> cd(spec.n);
            std::vector<double> sigma(stride, 0.0);
            for (int i = 0; i < spec.n; ++i) {
                cd[i] = candidate_derivs(spec.candidates[i], beta[i] * z);
                double bp = 1.0;
                for (int m = 0; m <= order; ++m) {
                    sigma[m] += g[i] * bp * cd[i][m];
                    bp *= beta[i];
                }
            }
            for (int j = 0; j < spec.n; ++j) {
                double bp = 1.0;
                for (int m = 0; m <= order; ++m) {
                    // softmax Jacobian: d sigma^(m) / d alpha_j
                    out[j * stride + m] = g[j] * (bp * cd[j][m] - sigma[m]);
                    bp *= beta[j];
                }
                // d sigma^(m) / d beta_j
                double bpm1 = 0.0;  // beta^(m-1), 0 for m = 0
                bp = 1.0;
                for (int m = 0; m <= order; ++m) {
                    out[(spec.n + j) * stride + m] =
                        g[j] * (m * bpm1 * cd[j][m] + bp * cd[j][m + 1] * z);
                    bpm1 = bp;
                    bp *= beta[j];
                }
            }
            return;
        }
        case ActFamily::LCTanh:
        case ActFamily::LCSin: {
            const double* w = spec.coeffs.data();
            const double* a = w + spec.n;
            const double* b = a + spec.n;
            for (int i = 0; i < spec.n; ++i) {
                std::array<double, 5> d{};
                double y = a[i] * z + b[i];
                if (spec.family == ActFamily::LCTanh)
                    tanh_derivs(y, d);
                else
                    sin_derivs(y, d);
                double ap = 1.0, apm1 = 0.0;
                for (int m = 0; m <= order; ++m) {
                    out[i * stride + m] = ap * d[m];                                   // d/dw_i
                    out[(spec.n + i) * stride + m] =
                        w[i] * (m * apm1 * d[m] + ap * d[m + 1] * z);                  // d/da_i
                    out[(2 * spec.n + i) * stride + m] = w[i] * ap * d[m + 1];         // d/db_i
                    apm1 = ap;
                    ap *= a[i];
                }
            }
            return;
        }
        case ActFamily::LCXSinSq: {
            const double* a = spec.coeffs.data();
            const double* b = a + spec.n;
            const double* c = b + spec.n;
            const double* dd = c + spec.n;
            for (int i = 0; i < spec.n; ++i) {
                double y = c[i] * z + dd[i];
                double s2 = std::sin(2.0 * y), c2 = std::cos(2.0 * y);
                double p[5] = {0.5 * (1.0 - c2), s2, 2.0 * c2, -4.0 * s2, -8.0 * c2};
                double cp = 1.0, cpm1 = 0.0;
                for (int m = 0; m <= order; ++m) {
                    out[i * stride + m] = (m == 0 ? z : (m == 1 ? 1.0 : 0.0));         // d/da_i
                    out[(spec.n + i) * stride + m] = cp * p[m];                        // d/db_i
                    out[(2 * spec.n + i) * stride + m] =
                        b[i] * (m * cpm1 * p[m] + cp * p[m + 1] * z);                  // d/dc_i
                    out[(3 * spec.n + i) * stride + m] = b[i] * cp * p[m + 1];         // d/dd_i
                    cpm1 = cp;
                    cp *= c[i];
                }
            }
            return;
        }
    }
}

ActivationSpec init_activation(ActFamily family, int n, std::uint64_t seed,
                               std::vector<Candidate> candidates) {
    ActivationSpec spec;
    spec.family = family;
    spec.n = n;
    spec.candidates = std::move(candidates);
    Rng rng = Rng::child(seed, "af-init");
    switch (family) {
        case ActFamily::Tanh:
        case ActFamily::XPlusSinSq:
            spec.n = 1;
            break;
        case ActFamily::ABU:
            spec.coeffs.assign(2 * n, 0.0);
            for (int i = 0; i < n; ++i) spec.coeffs[n + i] = 1.0;  // unit slopes
            break;
        case ActFamily::LCTanh:
        case ActFamily::LCSin:
            spec.coeffs.assign(3 * n, 0.0);
            for (int i = 0; i < n; ++i) {
                spec.coeffs[i] = 1.0 / n;
                spec.coeffs[n + i] = 1.0;
                spec.coeffs[2 * n + i] = rng.uniform(-0.1, 0.1);
            }
            break;
        case ActFamily::LCXSinSq:
            spec.coeffs.assign(4 * n, 0.0);
            for (int i = 0; i < n; ++i) {
                spec.coeffs[i] = 1.0 / n;
                spec.coeffs[n + i] = 1.0 / n;
                spec.coeffs[2 * n + i] = 1.0;
                spec.coeffs[3 * n + i] = rng.uniform(-0.1, 0.1);
            }
            break;
    }
    spec.validate();
    return spec;
}

}  // namespace pinn

#pragma once

// Tangent factors, α coefficients, the full and reduced Wirtinger Jacobians
// and the row-dominance (C_W) report.
//
// Block layout of the full Jacobian:
//   rows    [S_U; S_U*; P_C; P_C*]
//   columns [I_U; I_U*; I_C; I_C*]
// The reduced Jacobian merges each constrained I/I* column pair as
// col(I_k) + ξ_k·col(I_k*) and keeps only the P_C rows, giving
//   rows [S_U; S_U*; P_C], columns [I_U; I_U*; I_C].

#include <string>
#include <vector>

#include "wirtstab/numerics.hpp"
#include "wirtstab/powerflow.hpp"
#include "wirtstab/profile.hpp"
#include "wirtstab/thevenin.hpp"

namespace wirtstab::wirtinger {

using numerics::Complex;

struct TangentFactor {
    enum class Kind { Zero, Kappa, Zeta };
    Complex value{};
    Kind kind = Kind::Zero;
};

/// κ = −V*·Z_ii / (V·Z_ii*). Throws DegenerateInput for zero arguments.
TangentFactor kappa(Complex v, Complex z_self);
/// ζ = −I*/I. Throws DegenerateInput for |I| below 1e-10.
TangentFactor zeta(Complex i);

/// ξ per bus in model.bus_order.
std::vector<TangentFactor> xi_profile(const powerflow::OperatingPoint& point, const thevenin::TheveninModel& model,
                                      const powerflow::ConstraintProfile& profile);

/// α = ½(V + Z_ii*·I).
Complex alpha(Complex v, Complex z_self, Complex i);

numerics::ComplexMatrix full_jacobian(const powerflow::OperatingPoint& point, const thevenin::TheveninModel& model,
                                      const powerflow::ConstraintProfile& profile);

/// How the dependent I_C* perturbations are closed when merging columns.
enum class Closure {
    /// dI_k* = ξ_k·dI_k bus by bus; the κ/ζ tangent condition as stated.
    Local,
    /// dI_C* solved from the constraint set through the full Z coupling.
    /// Exact for networks where several constrained buses interact.
    Network,
};

/// Column map (2n_u+2n_c)×(2n_u+n_c) from reduced to full column variables.
numerics::ComplexMatrix tangent_projection(const powerflow::OperatingPoint& point,
                                           const thevenin::TheveninModel& model,
                                           const powerflow::ConstraintProfile& profile,
                                           Closure closure = Closure::Local);

struct ReducedJacobian {
    numerics::ComplexMatrix matrix{1, 1};
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    numerics::ComplexVector alpha; // over C buses, in bus_order
    std::vector<TangentFactor> xi; // over all buses, in bus_order
    std::size_t n_u = 0;
    std::size_t n_c = 0;
    std::vector<int> bus_order;
    Closure closure = Closure::Local;
};

ReducedJacobian reduced_jacobian(const powerflow::OperatingPoint& point, const thevenin::TheveninModel& model,
                                 const powerflow::ConstraintProfile& profile, Closure closure = Closure::Local);

/// Which denominator C_W uses.
enum class CwVariant {
    /// The row's actual off-diagonal sum, so C_W,i > 1 iff that row dominates.
    RowConsistent,
    /// |I_i|·Σ_{j≠i}|Z_ij| as printed, for both bus kinds.
    Printed,
};

struct RowMargin {
    std::string label;
    int bus = 0;
    std::size_t pivot_column = 0;
    double diagonal = 0.0;
    double offdiag = 0.0;
    double margin = 0.0;
};

struct BusIndex {
    int bus = 0;
    powerflow::BusMode mode = powerflow::BusMode::Unconstrained;
    double c_w = 0.0; // +inf when the denominator vanishes
    double margin = 0.0;
};

struct DominanceReport {
    std::vector<RowMargin> rows;
    std::vector<BusIndex> buses;
    double system_c_w = 0.0;
    double min_margin = 0.0;
    bool dominant = false;
    CwVariant variant = CwVariant::RowConsistent;
};

/// Row i's pivot is the entry carrying the bus's own self term: V_i for an
/// S_i row (column I_i*), V_i* for S_i* (column I_i), α*+ξα for P_i.
DominanceReport dominance_report(const ReducedJacobian& j, const powerflow::OperatingPoint& point,
                                 const thevenin::TheveninModel& model, const powerflow::ConstraintProfile& profile,
                                 CwVariant variant = CwVariant::RowConsistent);

inline constexpr double kDegenerateCurrent = 1e-10;

} // namespace wirtstab::wirtinger

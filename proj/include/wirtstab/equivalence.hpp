#pragma once

// Row map L and column map R linking the Wirtinger reduced Jacobian to the
// conventional polar Jacobian: J_conv = L·J_red·R, up to a fixed reordering
// of rows and columns.
//
//   L: [ΔS_U; ΔS_U*; ΔP_C]   -> [ΔP_U; ΔQ_U; ΔP_C]
//   R: [ΔU_U; Δθ_C; Δθ_U]    -> [ΔI_U; ΔI_U*; ΔI_C]

#include <string>

#include "wirtstab/casemodel.hpp"
#include "wirtstab/numerics.hpp"
#include "wirtstab/powerflow.hpp"
#include "wirtstab/profile.hpp"
#include "wirtstab/thevenin.hpp"

namespace wirtstab::equivalence {

struct EquivalenceReport {
    double residual = 0.0;               // ‖J_conv − L·J_red·R‖_F / ‖J_conv‖_F
    double local_closure_residual = 0.0; // same with the bus-local κ/ζ closure
    double det_l_magnitude = 0.0;
    double r_min_singular = 0.0;
    double sigma_min_conv = 0.0;
    double sigma_min_red = 0.0;
    bool verdict = false;
    /// Set when current-limited buses were present; their voltage magnitude
    /// is then folded into the column map and eliminated from J_conv.
    bool current_limited_extension = false;
};

inline constexpr double kResidualTolerance = 1e-9;
inline constexpr double kColumnMapTolerance = 1e-10;
inline constexpr double kMinVoltage = 1e-6;

numerics::ComplexMatrix row_map(std::size_t n_u, std::size_t n_c);

/// Throws SingularColumnMap at pathological points (|V_i| < 1e-6 or
/// σ_min(R) < 1e-10).
numerics::ComplexMatrix column_map(const powerflow::OperatingPoint& point, const thevenin::TheveninModel& model,
                                   const powerflow::ConstraintProfile& profile);

/// J_conv with any C^I magnitude columns eliminated along the |I| rows,
/// rows [P_U; P_C; Q_U], columns [θ_U; θ_C; U_U].
numerics::RealMatrix effective_conventional_jacobian(const casemodel::NetworkCase& c,
                                                     const powerflow::ConstraintProfile& profile,
                                                     const powerflow::OperatingPoint& point);

/// L·J_red·R reordered into the J_conv row/column layout.
numerics::ComplexMatrix mapped_reduced_jacobian(const powerflow::OperatingPoint& point,
                                                const thevenin::TheveninModel& model,
                                                const powerflow::ConstraintProfile& profile, bool network_closure);

EquivalenceReport verify(const casemodel::NetworkCase& c, const powerflow::ConstraintProfile& profile,
                         const powerflow::OperatingPoint& point);

} // namespace wirtstab::equivalence

#pragma once

// Comparison indices evaluated at an operating point: L-index, SCR and a
// stand-in for the multi-infeed K_R index.

#include <optional>
#include <vector>

#include "wirtstab/casemodel.hpp"
#include "wirtstab/powerflow.hpp"
#include "wirtstab/profile.hpp"
#include "wirtstab/thevenin.hpp"

namespace wirtstab::indices {

enum class IndexKind { Lindex, Scr, Kr };

struct IndexVector {
    IndexKind kind = IndexKind::Lindex;
    std::vector<int> buses; // point.bus_order
    std::vector<std::optional<double>> values;

    std::optional<double> at(int bus) const;
};

/// Kessel–Glavitsch L-index over the load set; Absent elsewhere.
/// Throws SingularLoadBlock when Y_LL cannot be factored.
IndexVector l_index(const powerflow::OperatingPoint& point, const casemodel::AdmittanceMatrix& ybus,
                    const std::vector<int>& generator_set, const std::vector<int>& load_set);

/// Generator set = slack ∪ C^V, load set = U ∪ C^I.
IndexVector l_index(const powerflow::OperatingPoint& point, const casemodel::AdmittanceMatrix& ybus,
                    const powerflow::ConstraintProfile& profile);

enum class ScrVoltage { Nominal, Actual };

/// SCR_i = V² / (|Z_ii|·|P_i|) with V = 1 p.u. (Nominal) or |V_i| (Actual).
/// p_local is indexed like point.bus_order; Absent where P_i = 0.
IndexVector scr(const powerflow::OperatingPoint& point, const thevenin::TheveninModel& model,
                const std::vector<double>& p_local, ScrVoltage voltage = ScrVoltage::Nominal);

/// Stand-in: K_R,i = |V_i|² / (λ_max(|Z|)·|P_i|), λ_max the spectral radius
/// of the elementwise-magnitude impedance matrix. Absent where P_i = 0.
IndexVector kr_index(const powerflow::OperatingPoint& point, const thevenin::TheveninModel& model,
                     const std::vector<double>& p_local);

/// Scheduled net active injection per bus of point.bus_order.
std::vector<double> scheduled_active_power(const casemodel::NetworkCase& c, const powerflow::OperatingPoint& point);

} // namespace wirtstab::indices

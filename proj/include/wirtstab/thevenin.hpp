#pragma once

// Slack elimination: V = E + Z·I over the non-slack buses.

#include <vector>

#include "wirtstab/casemodel.hpp"
#include "wirtstab/numerics.hpp"
#include "wirtstab/profile.hpp"

namespace wirtstab::thevenin {

struct TheveninModel {
    numerics::ComplexMatrix z{1, 1};     // Y_NN^{-1}, rows/cols in bus_order
    numerics::ComplexVector e;           // open-circuit voltages
    numerics::ComplexMatrix y_red{1, 1}; // Y_NN in bus_order, the exact inverse of z
    int slack_id = 0;
    numerics::Complex v_slack{1.0, 0.0};
    std::vector<int> bus_order; // unconstrained buses first, then constrained
    std::size_t n_u = 0;
    std::size_t n_c = 0;

    std::size_t order() const noexcept { return bus_order.size(); }
    /// Position of a bus in bus_order; throws DimensionMismatch if absent.
    std::size_t position(int bus) const;
};

/// Throws SingularReducedAdmittance when some bus is not connected to the slack.
TheveninModel reduce(const casemodel::AdmittanceMatrix& y, int slack_id, numerics::Complex v_slack,
                     const powerflow::ConstraintProfile& ordering);

numerics::ComplexVector voltages_from_currents(const TheveninModel& model, const numerics::ComplexVector& i);
numerics::ComplexVector currents_from_voltages(const TheveninModel& model, const numerics::ComplexVector& v);

} // namespace wirtstab::thevenin

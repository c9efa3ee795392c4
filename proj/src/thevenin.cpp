#include "wirtstab/thevenin.hpp"

#include <set>

namespace wirtstab::thevenin {

using numerics::Complex;
using numerics::ComplexMatrix;
using numerics::ComplexVector;

std::size_t TheveninModel::position(int bus) const {
    for (std::size_t k = 0; k < bus_order.size(); ++k)
        if (bus_order[k] == bus)
            return k;
    throw DimensionMismatch("bus " + std::to_string(bus) + " is not part of the reduced model");
}

TheveninModel reduce(const casemodel::AdmittanceMatrix& y, int slack_id, Complex v_slack,
                     const powerflow::ConstraintProfile& ordering) {
    TheveninModel m;
    m.slack_id = slack_id;
    m.v_slack = v_slack;
    m.bus_order = ordering.ordering();
    m.n_u = ordering.unconstrained().size();
    m.n_c = m.bus_order.size() - m.n_u;
    const std::size_t n = m.bus_order.size();
    if (n + 1 != y.order)
        throw DimensionMismatch("profile must list every non-slack bus exactly once");
    const std::set<int> listed(m.bus_order.begin(), m.bus_order.end());
    if (listed.size() != n || listed.count(slack_id))
        throw DimensionMismatch("profile must list every non-slack bus exactly once");

    const std::size_t s = y.index(slack_id);
    std::vector<std::size_t> idx(n);
    for (std::size_t k = 0; k < n; ++k)
        idx[k] = y.index(m.bus_order[k]);

    m.y_red = ComplexMatrix(n, n);
    ComplexVector rhs(n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b)
            m.y_red(a, b) = y.entries(idx[a], idx[b]);
        rhs[a] = -y.entries(idx[a], s) * v_slack;
    }
    try {
        m.z = numerics::invert(m.y_red);
    } catch (const SingularMatrix& err) {
        throw SingularReducedAdmittance(std::string("reduced admittance is singular (island without slack?): ") +
                                        err.what());
    }
    m.e = numerics::multiply<Complex>(m.z, rhs);
    return m;
}

ComplexVector voltages_from_currents(const TheveninModel& model, const ComplexVector& i) {
    if (i.size() != model.order())
        throw DimensionMismatch("current vector length does not match the model");
    ComplexVector v = numerics::multiply<Complex>(model.z, i);
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] += model.e[k];
    return v;
}

ComplexVector currents_from_voltages(const TheveninModel& model, const ComplexVector& v) {
    if (v.size() != model.order())
        throw DimensionMismatch("voltage vector length does not match the model");
    ComplexVector d(v.size());
    for (std::size_t k = 0; k < v.size(); ++k)
        d[k] = v[k] - model.e[k];
    return numerics::multiply<Complex>(model.y_red, d);
}

} // namespace wirtstab::thevenin

#include "wirtstab/indices.hpp"

#include <algorithm>
#include <cmath>

namespace wirtstab::indices {

using numerics::Complex;
using numerics::ComplexMatrix;
using powerflow::BusMode;

std::optional<double> IndexVector::at(int bus) const {
    for (std::size_t k = 0; k < buses.size(); ++k)
        if (buses[k] == bus)
            return values[k];
    throw DimensionMismatch("bus " + std::to_string(bus) + " is not covered by the index vector");
}

namespace {

Complex voltage_of(const powerflow::OperatingPoint& point, int bus) {
    return bus == point.slack_id ? point.v_slack : point.v.at(point.position(bus));
}

void require_sizes(const powerflow::OperatingPoint& point, const thevenin::TheveninModel& model,
                   const std::vector<double>& p_local) {
    if (point.bus_order != model.bus_order || p_local.size() != point.bus_order.size())
        throw DimensionMismatch("index inputs disagree on the bus ordering");
}

} // namespace

IndexVector l_index(const powerflow::OperatingPoint& point, const casemodel::AdmittanceMatrix& ybus,
                    const std::vector<int>& generator_set, const std::vector<int>& load_set) {
    IndexVector out{IndexKind::Lindex, point.bus_order, std::vector<std::optional<double>>(point.bus_order.size())};
    if (load_set.empty())
        return out;
    const std::size_t nl = load_set.size();
    const std::size_t ng = generator_set.size();
    ComplexMatrix yll(nl, nl);
    ComplexMatrix ylg(nl, std::max<std::size_t>(ng, 1));
    for (std::size_t a = 0; a < nl; ++a) {
        const std::size_t ra = ybus.index(load_set[a]);
        for (std::size_t b = 0; b < nl; ++b)
            yll(a, b) = ybus.entries(ra, ybus.index(load_set[b]));
        for (std::size_t g = 0; g < ng; ++g)
            ylg(a, g) = -ybus.entries(ra, ybus.index(generator_set[g]));
    }
    ComplexMatrix f(1, 1);
    try {
        f = numerics::LuFactorization<Complex>(yll).solve_many(ylg);
    } catch (const SingularMatrix& e) {
        throw SingularLoadBlock(std::string("load block of the admittance matrix is singular: ") + e.what());
    }
    for (std::size_t a = 0; a < nl; ++a) {
        Complex driven{};
        for (std::size_t g = 0; g < ng; ++g)
            driven += f(a, g) * voltage_of(point, generator_set[g]);
        const Complex vj = voltage_of(point, load_set[a]);
        if (vj == Complex{})
            continue; // undefined at a collapsed bus
        const auto pos = std::find(point.bus_order.begin(), point.bus_order.end(), load_set[a]);
        if (pos != point.bus_order.end())
            out.values[static_cast<std::size_t>(pos - point.bus_order.begin())] = std::abs(1.0 - driven / vj);
    }
    return out;
}

IndexVector l_index(const powerflow::OperatingPoint& point, const casemodel::AdmittanceMatrix& ybus,
                    const powerflow::ConstraintProfile& profile) {
    std::vector<int> gens{point.slack_id};
    std::vector<int> loads;
    for (const auto& b : profile.buses())
        (b.mode == BusMode::VoltageConstrained ? gens : loads).push_back(b.bus);
    return l_index(point, ybus, gens, loads);
}

IndexVector scr(const powerflow::OperatingPoint& point, const thevenin::TheveninModel& model,
                const std::vector<double>& p_local, ScrVoltage voltage) {
    require_sizes(point, model, p_local);
    IndexVector out{IndexKind::Scr, point.bus_order, std::vector<std::optional<double>>(point.bus_order.size())};
    for (std::size_t k = 0; k < p_local.size(); ++k) {
        const double den = std::abs(model.z(k, k)) * std::abs(p_local[k]);
        if (den == 0.0)
            continue;
        const double vmag = voltage == ScrVoltage::Nominal ? 1.0 : std::abs(point.v[k]);
        out.values[k] = vmag * vmag / den;
    }
    return out;
}

IndexVector kr_index(const powerflow::OperatingPoint& point, const thevenin::TheveninModel& model,
                     const std::vector<double>& p_local) {
    require_sizes(point, model, p_local);
    IndexVector out{IndexKind::Kr, point.bus_order, std::vector<std::optional<double>>(point.bus_order.size())};
    const double lmax = numerics::max_eigenvalue_magnitude(numerics::to_complex(numerics::abs(model.z)));
    for (std::size_t k = 0; k < p_local.size(); ++k) {
        const double den = lmax * std::abs(p_local[k]);
        if (den == 0.0)
            continue;
        out.values[k] = std::norm(point.v[k]) / den;
    }
    return out;
}

std::vector<double> scheduled_active_power(const casemodel::NetworkCase& c, const powerflow::OperatingPoint& point) {
    std::vector<double> p;
    p.reserve(point.bus_order.size());
    for (int bus : point.bus_order)
        p.push_back(c.scheduled_injection(bus).real());
    return p;
}

} // namespace wirtstab::indices

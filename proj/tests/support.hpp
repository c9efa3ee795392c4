#pragma once

// Shared fixtures for the unit tests and the acceptance runner.

#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include "wirtstab/casemodel.hpp"
#include "wirtstab/numerics.hpp"
#include "wirtstab/powerflow.hpp"
#include "wirtstab/profile.hpp"
#include "wirtstab/thevenin.hpp"

namespace support {

using namespace wirtstab;
using numerics::Complex;
using numerics::ComplexMatrix;
using numerics::ComplexVector;

inline std::string data_path(const std::string& name) { return std::string(WIRTSTAB_DATA_DIR) + "/" + name; }

inline casemodel::NetworkCase three_bus() { return casemodel::load_case(data_path("three_bus.json")); }

/// Slack bus 1 feeding a pure-P load at bus 2 over a lossless line.
inline casemodel::NetworkCase two_bus(double x, double p_load) {
    casemodel::NetworkCase c;
    c.name = "two_bus";
    c.buses = {{1, casemodel::BusRole::Slack, 0.0, 0.0, 1.0, 0.0, 0.0},
               {2, casemodel::BusRole::PQ, p_load, 0.0, 1.0, 0.0, 0.0}};
    c.branches = {{1, 2, 0.0, x, 0.0, 1.0, 0.0, true}};
    c.generators = {{1, 0.0, 0.0, 1.0, std::nullopt, std::nullopt}};
    return c;
}

/// Two buses with bus 2 regulating |V| at 1.0 while injecting p.
inline casemodel::NetworkCase two_bus_pv(double r, double x, double p) {
    auto c = two_bus(x, 0.0);
    c.branches[0].r = r;
    c.buses[1].role = casemodel::BusRole::PV;
    c.generators.push_back({2, p, 0.0, 1.0, std::nullopt, std::nullopt});
    return c;
}

inline std::mt19937_64& rng() {
    static std::mt19937_64 gen(20240611);
    return gen;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

inline Complex random_complex(double scale = 1.0) { return {uniform(-scale, scale), uniform(-scale, scale)}; }

template <class T>
numerics::Matrix<T> random_matrix(std::size_t rows, std::size_t cols, double diag_boost = 0.0) {
    numerics::Matrix<T> a(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            if constexpr (std::is_same_v<T, Complex>)
                a(i, j) = random_complex();
            else
                a(i, j) = uniform(-1.0, 1.0);
            if (i == j)
                a(i, j) += T(diag_boost);
        }
    return a;
}

/// A point whose currents are drawn at random and whose voltages follow from
/// V = E + Z·I. Not a power-flow solution, but every Wirtinger identity holds.
inline powerflow::OperatingPoint random_point(const thevenin::TheveninModel& model, double scale = 0.5) {
    powerflow::OperatingPoint p;
    p.bus_order = model.bus_order;
    p.slack_id = model.slack_id;
    p.v_slack = model.v_slack;
    p.i.resize(model.order());
    for (auto& x : p.i)
        x = random_complex(scale);
    p.v = thevenin::voltages_from_currents(model, p.i);
    p.s.resize(p.v.size());
    for (std::size_t k = 0; k < p.v.size(); ++k)
        p.s[k] = p.v[k] * std::conj(p.i[k]);
    p.converged = true;
    return p;
}

/// Relative error with an absolute floor so that near-zero entries compare sanely.
inline double rel_err(Complex a, Complex b, double floor = 1.0) {
    return std::abs(a - b) / std::max(floor, std::max(std::abs(a), std::abs(b)));
}

/// Profile with the listed buses voltage-regulated at 1.0 and the rest free.
inline powerflow::ConstraintProfile profile_from(const casemodel::NetworkCase& c, const std::vector<int>& cv,
                                                 const std::vector<std::pair<int, double>>& ci = {}) {
    std::vector<powerflow::BusConstraint> out;
    for (const auto& b : c.buses) {
        if (b.role == casemodel::BusRole::Slack)
            continue;
        powerflow::BusConstraint bc;
        bc.bus = b.id;
        for (int k : cv)
            if (k == b.id)
                bc.mode = powerflow::BusMode::VoltageConstrained;
        for (const auto& [k, imax] : ci)
            if (k == b.id) {
                bc.mode = powerflow::BusMode::CurrentConstrained;
                bc.i_max = imax;
            }
        out.push_back(bc);
    }
    return powerflow::ConstraintProfile(out);
}

} // namespace support

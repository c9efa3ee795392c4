#include "wirtstab/profile.hpp"

#include <algorithm>
#include <set>

namespace wirtstab::powerflow {

using casemodel::BusRole;
using casemodel::ModeHint;

std::string to_string(BusMode m) {
    switch (m) {
    case BusMode::Unconstrained: return "U";
    case BusMode::VoltageConstrained: return "CV";
    case BusMode::CurrentConstrained: return "CI";
    }
    return "?";
}

ConstraintProfile::ConstraintProfile(std::vector<BusConstraint> buses) : buses_(std::move(buses)) {
    std::set<int> seen;
    for (const auto& b : buses_) {
        if (!seen.insert(b.bus).second)
            throw SemanticError("bus " + std::to_string(b.bus) + " appears twice in the constraint profile");
        if (b.mode == BusMode::VoltageConstrained && !(b.v_set > 0.0))
            throw SemanticError("voltage setpoint at bus " + std::to_string(b.bus) + " must be positive");
        if (b.mode == BusMode::CurrentConstrained && !(b.i_max > 0.0))
            throw SemanticError("current limit at bus " + std::to_string(b.bus) + " must be positive");
        if (b.i_limit && !(*b.i_limit > 0.0))
            throw SemanticError("current limit at bus " + std::to_string(b.bus) + " must be positive");
    }
}

const BusConstraint& ConstraintProfile::at(int bus) const {
    for (const auto& b : buses_)
        if (b.bus == bus)
            return b;
    throw SemanticError("bus " + std::to_string(bus) + " is not in the constraint profile");
}

BusConstraint& ConstraintProfile::at(int bus) {
    return const_cast<BusConstraint&>(std::as_const(*this).at(bus));
}

bool ConstraintProfile::contains(int bus) const {
    return std::any_of(buses_.begin(), buses_.end(), [&](const BusConstraint& b) { return b.bus == bus; });
}

std::vector<int> ConstraintProfile::unconstrained() const {
    std::vector<int> out;
    for (const auto& b : buses_)
        if (b.mode == BusMode::Unconstrained)
            out.push_back(b.bus);
    return out;
}

std::vector<int> ConstraintProfile::constrained() const {
    std::vector<int> out;
    for (const auto& b : buses_)
        if (b.mode != BusMode::Unconstrained)
            out.push_back(b.bus);
    return out;
}

std::vector<int> ConstraintProfile::ordering() const {
    auto out = unconstrained();
    const auto c = constrained();
    out.insert(out.end(), c.begin(), c.end());
    return out;
}

namespace {

std::optional<double> limit_at(const casemodel::NetworkCase& c, int bus) {
    for (const auto& g : c.generators)
        if (g.bus == bus && g.i_max)
            return g.i_max;
    return std::nullopt;
}

double setpoint_at(const casemodel::NetworkCase& c, int bus) {
    const auto& b = c.bus(bus);
    if (b.role == BusRole::PV)
        return b.v_set;
    for (const auto& g : c.generators)
        if (g.bus == bus)
            return g.v_set;
    return b.v_set > 0.0 ? b.v_set : 1.0;
}

} // namespace

ConstraintProfile default_profile(const casemodel::NetworkCase& c) {
    std::vector<BusConstraint> out;
    for (const auto& b : c.buses) {
        if (b.role == BusRole::Slack)
            continue;
        BusConstraint bc;
        bc.bus = b.id;
        bool regulating = b.role == BusRole::PV;
        for (const auto& g : c.generators)
            if (g.bus == b.id && g.mode_hint) {
                regulating = *g.mode_hint == ModeHint::GridFormingPV;
                break;
            }
        if (regulating) {
            bc.mode = BusMode::VoltageConstrained;
            bc.v_set = setpoint_at(c, b.id);
        }
        bc.i_limit = limit_at(c, b.id);
        out.push_back(bc);
    }
    return ConstraintProfile(std::move(out));
}

ConstraintProfile apply_overrides(const casemodel::NetworkCase& c, ConstraintProfile profile,
                                  const ProfileOverrides& overrides) {
    std::vector<BusConstraint> buses = profile.buses();
    auto find = [&](int bus) -> BusConstraint& {
        for (auto& b : buses)
            if (b.bus == bus)
                return b;
        throw SemanticError("bus " + std::to_string(bus) + " is the slack bus or does not exist");
    };
    for (int bus : overrides.pv) {
        auto& b = find(bus);
        b.mode = BusMode::VoltageConstrained;
        b.v_set = setpoint_at(c, bus);
    }
    for (int bus : overrides.pq)
        find(bus).mode = BusMode::Unconstrained;
    for (const auto& [bus, limit] : overrides.current_limit)
        find(bus).i_limit = limit;
    return ConstraintProfile(std::move(buses));
}

} // namespace wirtstab::powerflow

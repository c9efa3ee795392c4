#pragma once

// Per-bus operating modes of the non-slack buses.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wirtstab/casemodel.hpp"

namespace wirtstab::powerflow {

enum class BusMode { Unconstrained, VoltageConstrained, CurrentConstrained };

struct BusConstraint {
    int bus = 0;
    BusMode mode = BusMode::Unconstrained;
    double v_set = 1.0;            // held magnitude for VoltageConstrained
    double i_max = 0.0;            // held magnitude for CurrentConstrained
    double p_set = 0.0;            // scheduled P recorded when the limit engaged
    std::optional<double> i_limit; // converter limit watched while regulating voltage

    bool operator==(const BusConstraint&) const = default;
};

class ConstraintProfile {
  public:
    ConstraintProfile() = default;
    /// Checks the partition invariants; throws SemanticError.
    explicit ConstraintProfile(std::vector<BusConstraint> buses);

    const std::vector<BusConstraint>& buses() const noexcept { return buses_; }
    const BusConstraint& at(int bus) const;
    BusConstraint& at(int bus);
    bool contains(int bus) const;

    /// Unconstrained buses followed by constrained ones, each in input order.
    std::vector<int> ordering() const;
    std::vector<int> unconstrained() const;
    std::vector<int> constrained() const;

    bool operator==(const ConstraintProfile&) const = default;

  private:
    std::vector<BusConstraint> buses_;
};

/// Modes declared by the case: converter hints win over bus roles; PV buses
/// regulate voltage, PQ buses are unconstrained.
ConstraintProfile default_profile(const casemodel::NetworkCase& c);

struct ProfileOverrides {
    std::vector<int> pv;                 // force VoltageConstrained
    std::vector<int> pq;                 // force Unconstrained
    std::map<int, double> current_limit; // bus -> i_max
};

ConstraintProfile apply_overrides(const casemodel::NetworkCase& c, ConstraintProfile profile,
                                  const ProfileOverrides& overrides);

std::string to_string(BusMode m);

} // namespace wirtstab::powerflow

#pragma once

// Network case records, case-file parsing and bus admittance assembly.
//
// All quantities are per-unit on the case base power once parsed. Loads are
// positive consumption; generator setpoints are positive injection, so the
// net scheduled injection at a bus is sum(gen) - load.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wirtstab/numerics.hpp"

namespace wirtstab::casemodel {

enum class BusRole { Slack, PQ, PV };
enum class ModeHint { GridFollowingPQ, GridFormingPV };

struct BusRecord {
    int id = 0;
    BusRole role = BusRole::PQ;
    double p_load = 0.0;
    double q_load = 0.0;
    double v_set = 1.0;
    double shunt_g = 0.0;
    double shunt_b = 0.0;

    bool operator==(const BusRecord&) const = default;
};

struct BranchRecord {
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double b_charging = 0.0;
    double tap_ratio = 1.0;
    double phase_shift = 0.0; // radians
    bool status = true;

    bool operator==(const BranchRecord&) const = default;
};

struct GenRecord {
    int bus = 0;
    double p_set = 0.0;
    double q_set = 0.0;
    double v_set = 1.0;
    std::optional<double> i_max;
    std::optional<ModeHint> mode_hint; // set only for converter-interfaced units

    bool operator==(const GenRecord&) const = default;
};

struct NetworkCase {
    std::string name;
    double base_power = 100.0; // MVA
    std::vector<BusRecord> buses;
    std::vector<BranchRecord> branches;
    std::vector<GenRecord> generators;

    bool operator==(const NetworkCase&) const = default;

    const BusRecord& bus(int id) const;
    int slack_id() const;
    /// Net scheduled complex injection at a bus (generation minus load).
    numerics::Complex scheduled_injection(int id) const;
};

struct AdmittanceMatrix {
    std::size_t order = 0;
    numerics::ComplexMatrix entries{1, 1};
    std::map<int, std::size_t> index_map;

    std::size_t index(int bus_id) const;
};

enum class CaseFormat { MatpowerM, NativeJson };

struct ParseResult {
    NetworkCase network;
    std::vector<std::string> warnings;
};

/// Parses and validates a case. Throws SyntaxError or SemanticError.
ParseResult parse_case_with_warnings(std::string_view text, CaseFormat format);
NetworkCase parse_case(std::string_view text, CaseFormat format);

/// Picks the format from the file extension (".m" or ".json").
CaseFormat format_for_path(const std::string& path);
NetworkCase load_case(const std::string& path);

/// Native JSON form; parse_case(serialize_json(c), NativeJson) == c.
std::string serialize_json(const NetworkCase& c);

/// Checks the NetworkCase invariants, throwing SemanticError.
void validate(const NetworkCase& c);

AdmittanceMatrix build_ybus(const NetworkCase& c);

enum class ScalingTarget {
    LoadsOnly,
    LoadsAndIbrInjections,
    IbrOnly, // converter setpoints only; loads and synchronous units held
};

NetworkCase scale_loading(const NetworkCase& c, double lambda, ScalingTarget targets);

std::string to_string(BusRole r);
std::string to_string(ModeHint m);

} // namespace wirtstab::casemodel

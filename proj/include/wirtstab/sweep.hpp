#pragma once

// Loading sweeps with converter mode tracking, and bisection of the three
// stability boundaries.

#include <optional>
#include <string>
#include <vector>

#include "wirtstab/casemodel.hpp"
#include "wirtstab/indices.hpp"
#include "wirtstab/powerflow.hpp"
#include "wirtstab/profile.hpp"
#include "wirtstab/wirtinger.hpp"

namespace wirtstab::sweep {

enum class Predicate { DominanceLoss, CwUnity, ConvSingular };

struct SweepOptions {
    enum class Start { Warm, Flat };

    casemodel::ScalingTarget targets = casemodel::ScalingTarget::LoadsOnly;
    powerflow::SolverOptions solver{};
    /// Warm: sequential continuation from the previous sample. Flat: every
    /// sample solved from a flat start, in parallel.
    Start start = Start::Warm;
    bool enforce_limits = true;
    wirtinger::CwVariant variant = wirtinger::CwVariant::RowConsistent;
    indices::ScrVoltage scr_voltage = indices::ScrVoltage::Nominal;
    double boundary_tol = 1e-4;
    std::vector<Predicate> boundaries;
};

/// Everything computed at one converged operating point.
struct Evaluation {
    double lambda = 0.0;
    powerflow::ConstraintProfile profile;
    powerflow::OperatingPoint point;
    wirtinger::DominanceReport dominance;
    indices::IndexVector l_index;
    indices::IndexVector scr;
    indices::IndexVector kr;
    double sigma_min_conv = 0.0;
    double norm_conv = 0.0; // spectral norm of J_conv
    std::vector<int> switched;
};

struct Sample {
    double lambda = 0.0;
    bool converged = false;
    std::string diagnostic; // solver message when not converged
    std::optional<Evaluation> eval;
};

struct Boundary {
    Predicate predicate = Predicate::DominanceLoss;
    std::optional<double> lambda;
    double tolerance = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    std::string note;
};

struct Transition {
    double lambda = 0.0;
    int bus = 0;
    powerflow::BusMode from = powerflow::BusMode::VoltageConstrained;
    powerflow::BusMode to = powerflow::BusMode::CurrentConstrained;
};

struct SweepResult {
    std::vector<Sample> samples;
    std::vector<Boundary> boundaries;
    std::vector<Transition> transitions;
};

/// Indices, dominance report and J_conv conditioning at a converged point.
Evaluation evaluate(const casemodel::NetworkCase& scaled, const powerflow::ConstraintProfile& profile,
                    const powerflow::OperatingPoint& point, const SweepOptions& options, double lambda = 1.0);

/// Scale, solve (flat or warm from `warm`), enforce limits, evaluate.
Evaluation solve_at(const casemodel::NetworkCase& c, const powerflow::ConstraintProfile& profile, double lambda,
                    const SweepOptions& options, const powerflow::OperatingPoint* warm = nullptr);

/// True when the evaluation lies beyond the boundary the predicate marks.
bool beyond(const Evaluation& e, Predicate predicate);

inline constexpr double kSingularRatio = 1e-8;

SweepResult run_sweep(const casemodel::NetworkCase& c, const powerflow::ConstraintProfile& profile,
                      const std::vector<double>& schedule, const SweepOptions& options = {});

/// Bisection of the predicate flip inside [lo, hi]; a failed solve counts as
/// beyond. Throws InvalidBracket when both ends agree.
double find_boundary(const casemodel::NetworkCase& c, const powerflow::ConstraintProfile& profile,
                     Predicate predicate, double lo, double hi, double tol = 1e-4, const SweepOptions& options = {});

std::string to_string(Predicate p);
Predicate predicate_from(const std::string& name);

/// lo:hi:step inclusive of hi up to rounding.
std::vector<double> make_schedule(double lo, double hi, double step);

} // namespace wirtstab::sweep

#pragma once

// Polar Newton-Raphson power flow over unconstrained, voltage-regulated and
// current-limited buses.
//
// Unknowns are [θ_U; θ_C; U_U; U_CI] with U the voltage magnitude; C^V
// buses keep their magnitude at the setpoint. The conventional Jacobian is
// taken of the computed quantities [P_U; P_C; Q_U; |I|_CI] with respect to
// those unknowns.

#include <optional>
#include <utility>
#include <vector>

#include "wirtstab/casemodel.hpp"
#include "wirtstab/numerics.hpp"
#include "wirtstab/profile.hpp"

namespace wirtstab::powerflow {

struct OperatingPoint {
    std::vector<int> bus_order; // non-slack buses, U block then C block
    numerics::ComplexVector v;
    numerics::ComplexVector i;
    numerics::ComplexVector s;
    int slack_id = 0;
    numerics::Complex v_slack{1.0, 0.0};
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0.0;

    std::size_t position(int bus) const;
};

struct SolverOptions {
    enum class Start { Flat, Warm };

    double tolerance = 1e-8;
    int max_iterations = 50;
    Start start = Start::Flat;
    std::optional<OperatingPoint> warm; // used when start == Warm
};

class DidNotConverge : public Error {
  public:
    DidNotConverge(OperatingPoint last, std::vector<double> trace, const std::string& what)
        : Error(what), last_(std::move(last)), trace_(std::move(trace)) {}
    const OperatingPoint& last() const noexcept { return last_; }
    /// max |mismatch| after each iteration, starting with the initial guess.
    const std::vector<double>& trace() const noexcept { return trace_; }

  private:
    OperatingPoint last_;
    std::vector<double> trace_;
};

/// Case, profile and admittance bundled for repeated evaluation.
class Problem {
  public:
    Problem(const casemodel::NetworkCase& c, ConstraintProfile profile);

    const ConstraintProfile& profile() const noexcept { return profile_; }
    const casemodel::AdmittanceMatrix& ybus() const noexcept { return ybus_; }
    const std::vector<int>& bus_order() const noexcept { return order_; }
    int slack_id() const noexcept { return slack_id_; }
    numerics::Complex v_slack() const noexcept { return v_slack_; }
    std::size_t n_u() const noexcept { return n_u_; }
    std::size_t n_c() const noexcept { return order_.size() - n_u_; }
    /// Positions (in bus_order) of C^V and C^I buses.
    const std::vector<std::size_t>& cv() const noexcept { return cv_; }
    const std::vector<std::size_t>& ci() const noexcept { return ci_; }
    const numerics::ComplexVector& scheduled() const noexcept { return sched_; }

    /// Bus injection currents I = Y·V for the non-slack buses.
    numerics::ComplexVector currents(const numerics::ComplexVector& v) const;
    std::size_t state_size() const noexcept { return order_.size() + n_u_ + ci_.size(); }

  private:
    ConstraintProfile profile_;
    casemodel::AdmittanceMatrix ybus_;
    std::vector<int> order_;
    std::vector<std::size_t> ybus_index_; // bus_order position -> ybus row
    std::size_t slack_index_ = 0;
    int slack_id_ = 0;
    numerics::Complex v_slack_{1.0, 0.0};
    std::size_t n_u_ = 0;
    std::vector<std::size_t> cv_;
    std::vector<std::size_t> ci_;
    numerics::ComplexVector sched_;
};

/// Residual stack, specified minus computed for powers:
/// [ΔP (all non-slack, bus_order); ΔQ_U; |V|−v_set at C^V; |I|−i_max at C^I].
numerics::RealVector mismatch(const Problem& p, const numerics::ComplexVector& v);
numerics::RealVector mismatch(const casemodel::NetworkCase& c, const ConstraintProfile& profile,
                              const numerics::ComplexVector& v);

/// ∂[P_U; P_C; Q_U; |I|_CI] / ∂[θ_U; θ_C; U_U; U_CI].
numerics::RealMatrix conventional_jacobian(const Problem& p, const numerics::ComplexVector& v,
                                           numerics::Execution exec = numerics::Execution::Parallel);
numerics::RealMatrix conventional_jacobian(const casemodel::NetworkCase& c, const ConstraintProfile& profile,
                                           const numerics::ComplexVector& v);

/// Completes V into a point (currents and powers from the network relation).
OperatingPoint make_point(const Problem& p, const numerics::ComplexVector& v);

/// Throws DidNotConverge or SingularJacobianAtIterate.
OperatingPoint newton_solve(const Problem& p, const SolverOptions& options = {});
OperatingPoint newton_solve(const casemodel::NetworkCase& c, const ConstraintProfile& profile,
                            const SolverOptions& options = {});

struct LimitResult {
    ConstraintProfile profile;
    OperatingPoint point;
    std::vector<int> switched; // buses moved to CurrentConstrained, in switch order
};

/// Latches C^V buses whose |I| exceeds their limit into current-limited mode
/// and re-solves. Throws ModeOscillation after 10 outer iterations.
LimitResult enforce_current_limits(const casemodel::NetworkCase& c, const ConstraintProfile& profile,
                                   const OperatingPoint& point, const SolverOptions& options = {});

inline constexpr double kSwitchHysteresis = 1e-9;
inline constexpr int kMaxOuterIterations = 10;

} // namespace wirtstab::powerflow

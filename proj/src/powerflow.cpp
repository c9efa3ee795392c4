#include "wirtstab/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace wirtstab::powerflow {

using numerics::Complex;
using numerics::ComplexVector;
using numerics::RealMatrix;
using numerics::RealVector;

namespace {

constexpr Complex kJ{0.0, 1.0};
constexpr std::size_t kParallelRows = 32;

double max_abs(const RealVector& r) {
    double m = 0.0;
    for (double x : r)
        m = std::isfinite(x) ? std::max(m, std::abs(x)) : HUGE_VAL;
    return m;
}

} // namespace

std::size_t OperatingPoint::position(int bus) const {
    for (std::size_t k = 0; k < bus_order.size(); ++k)
        if (bus_order[k] == bus)
            return k;
    throw DimensionMismatch("bus " + std::to_string(bus) + " is not part of the operating point");
}

Problem::Problem(const casemodel::NetworkCase& c, ConstraintProfile profile)
    : profile_(std::move(profile)), ybus_(casemodel::build_ybus(c)), order_(profile_.ordering()) {
    slack_id_ = c.slack_id();
    v_slack_ = Complex(c.bus(slack_id_).v_set, 0.0);
    slack_index_ = ybus_.index(slack_id_);
    n_u_ = profile_.unconstrained().size();

    std::set<int> listed(order_.begin(), order_.end());
    if (listed.size() != order_.size() || listed.count(slack_id_) || order_.size() + 1 != c.buses.size())
        throw SemanticError("constraint profile must cover every non-slack bus exactly once");
    for (std::size_t k = 0; k < order_.size(); ++k) {
        const int bus = order_[k];
        ybus_index_.push_back(ybus_.index(bus));
        sched_.push_back(c.scheduled_injection(bus));
        const BusMode mode = profile_.at(bus).mode;
        if (mode == BusMode::VoltageConstrained)
            cv_.push_back(k);
        else if (mode == BusMode::CurrentConstrained)
            ci_.push_back(k);
    }
}

ComplexVector Problem::currents(const ComplexVector& v) const {
    if (v.size() != order_.size())
        throw DimensionMismatch("voltage vector length does not match the problem");
    const auto& y = ybus_.entries;
    ComplexVector out(order_.size());
    for (std::size_t a = 0; a < order_.size(); ++a) {
        Complex acc = y(ybus_index_[a], slack_index_) * v_slack_;
        for (std::size_t b = 0; b < order_.size(); ++b)
            acc += y(ybus_index_[a], ybus_index_[b]) * v[b];
        out[a] = acc;
    }
    return out;
}

RealVector mismatch(const Problem& p, const ComplexVector& v) {
    const std::size_t n = p.bus_order().size();
    const ComplexVector cur = p.currents(v);
    RealVector r;
    r.reserve(n + p.n_u() + p.cv().size() + p.ci().size());
    for (std::size_t k = 0; k < n; ++k)
        r.push_back(p.scheduled()[k].real() - (v[k] * std::conj(cur[k])).real());
    for (std::size_t k = 0; k < p.n_u(); ++k)
        r.push_back(p.scheduled()[k].imag() - (v[k] * std::conj(cur[k])).imag());
    for (std::size_t k : p.cv())
        r.push_back(std::abs(v[k]) - p.profile().at(p.bus_order()[k]).v_set);
    for (std::size_t k : p.ci())
        r.push_back(std::abs(cur[k]) - p.profile().at(p.bus_order()[k]).i_max);
    return r;
}

RealVector mismatch(const casemodel::NetworkCase& c, const ConstraintProfile& profile, const ComplexVector& v) {
    return mismatch(Problem(c, profile), v);
}

RealMatrix conventional_jacobian(const Problem& p, const ComplexVector& v, numerics::Execution exec) {
    const std::size_t n = p.bus_order().size();
    const std::size_t nu = p.n_u();
    const std::size_t dim = p.state_size();
    const ComplexVector cur = p.currents(v);
    const auto& y = p.ybus().entries;
    std::vector<std::size_t> yi(n);
    for (std::size_t k = 0; k < n; ++k)
        yi[k] = p.ybus().index(p.bus_order()[k]);

    // Magnitude columns: U buses then C^I buses.
    std::vector<std::size_t> mag_cols;
    for (std::size_t k = 0; k < nu; ++k)
        mag_cols.push_back(k);
    for (std::size_t k : p.ci())
        mag_cols.push_back(k);

    RealMatrix jac(dim, dim);
    const auto rows = static_cast<std::ptrdiff_t>(dim);
    const bool parallel = exec == numerics::Execution::Parallel && dim > kParallelRows;
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t rr = 0; rr < rows; ++rr) {
        const auto r = static_cast<std::size_t>(rr);
        auto out = jac.row(r);
        if (r < n + nu) {
            const bool reactive = r >= n;
            const std::size_t i = reactive ? r - n : r;
            const Complex si = v[i] * std::conj(cur[i]);
            auto pick = [&](Complex ds) { return reactive ? ds.imag() : ds.real(); };
            for (std::size_t k = 0; k < n; ++k) {
                const Complex coupling = v[i] * std::conj(y(yi[i], yi[k]) * v[k]);
                const Complex self = i == k ? si : Complex{};
                out[k] = pick(kJ * self - kJ * coupling);
            }
            for (std::size_t m = 0; m < mag_cols.size(); ++m) {
                const std::size_t k = mag_cols[m];
                const double uk = std::abs(v[k]);
                const Complex coupling = v[i] * std::conj(y(yi[i], yi[k]) * v[k]) / uk;
                const Complex self = i == k ? si / uk : Complex{};
                out[n + m] = pick(self + coupling);
            }
        } else {
            const std::size_t i = p.ci()[r - n - nu];
            const double mag = std::abs(cur[i]);
            if (mag == 0.0)
                continue; // derivative undefined; leaves a zero row
            const Complex ci = std::conj(cur[i]) / mag;
            for (std::size_t k = 0; k < n; ++k)
                out[k] = (ci * y(yi[i], yi[k]) * kJ * v[k]).real();
            for (std::size_t m = 0; m < mag_cols.size(); ++m) {
                const std::size_t k = mag_cols[m];
                out[n + m] = (ci * y(yi[i], yi[k]) * v[k] / std::abs(v[k])).real();
            }
        }
    }
    return jac;
}

RealMatrix conventional_jacobian(const casemodel::NetworkCase& c, const ConstraintProfile& profile,
                                 const ComplexVector& v) {
    return conventional_jacobian(Problem(c, profile), v);
}

OperatingPoint make_point(const Problem& p, const ComplexVector& v) {
    OperatingPoint pt;
    pt.bus_order = p.bus_order();
    pt.v = v;
    pt.i = p.currents(v);
    pt.s.resize(v.size());
    for (std::size_t k = 0; k < v.size(); ++k)
        pt.s[k] = v[k] * std::conj(pt.i[k]);
    pt.slack_id = p.slack_id();
    pt.v_slack = p.v_slack();
    pt.max_mismatch = max_abs(mismatch(p, v));
    return pt;
}

namespace {

struct State {
    RealVector theta;
    RealVector mag; // per bus_order position
};

ComplexVector to_voltages(const State& s) {
    ComplexVector v(s.theta.size());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = std::polar(s.mag[k], s.theta[k]);
    return v;
}

State initial_state(const Problem& p, const SolverOptions& options) {
    const std::size_t n = p.bus_order().size();
    State s{RealVector(n, 0.0), RealVector(n, 1.0)};
    if (options.start == SolverOptions::Start::Warm) {
        if (!options.warm)
            throw SemanticError("warm start requested without a previous operating point");
        const OperatingPoint& w = *options.warm;
        for (std::size_t k = 0; k < n; ++k) {
            const Complex vk = w.v.at(w.position(p.bus_order()[k]));
            s.theta[k] = std::arg(vk);
            s.mag[k] = std::abs(vk);
        }
    }
    for (std::size_t k : p.cv())
        s.mag[k] = p.profile().at(p.bus_order()[k]).v_set;
    return s;
}

} // namespace

OperatingPoint newton_solve(const Problem& p, const SolverOptions& options) {
    if (!(options.tolerance > 0.0) || options.max_iterations < 1)
        throw SemanticError("solver tolerance must be positive and max_iterations at least 1");
    const std::size_t n = p.bus_order().size();
    const std::size_t nu = p.n_u();
    const std::size_t ncv = p.cv().size();

    State x = initial_state(p, options);
    std::vector<double> trace;
    ComplexVector v = to_voltages(x);
    RealVector r = mismatch(p, v);
    double norm = max_abs(r);
    trace.push_back(norm);

    for (int iter = 0;; ++iter) {
        if (norm <= options.tolerance) {
            OperatingPoint pt = make_point(p, v);
            pt.converged = true;
            pt.iterations = iter;
            return pt;
        }
        if (iter == options.max_iterations || !std::isfinite(norm))
            break;

        RealVector rhs(p.state_size());
        std::copy(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(n + nu), rhs.begin());
        for (std::size_t m = 0; m < p.ci().size(); ++m)
            rhs[n + nu + m] = -r[n + nu + ncv + m];

        RealVector dx;
        try {
            dx = numerics::lu_solve<double>(conventional_jacobian(p, v), rhs);
        } catch (const SingularMatrix& err) {
            throw SingularJacobianAtIterate(iter + 1, err.what());
        }

        auto apply = [&](double t) {
            State y = x;
            for (std::size_t k = 0; k < n; ++k)
                y.theta[k] += t * dx[k];
            for (std::size_t k = 0; k < nu; ++k)
                y.mag[k] += t * dx[n + k];
            for (std::size_t m = 0; m < p.ci().size(); ++m)
                y.mag[p.ci()[m]] += t * dx[n + nu + m];
            return y;
        };
        double t = 1.0;
        State trial = apply(t);
        ComplexVector tv = to_voltages(trial);
        RealVector tr = mismatch(p, tv);
        double tnorm = max_abs(tr);
        for (int halving = 0; halving < 4 && !(tnorm <= norm); ++halving) {
            t *= 0.5;
            trial = apply(t);
            tv = to_voltages(trial);
            tr = mismatch(p, tv);
            tnorm = max_abs(tr);
        }
        x = std::move(trial);
        v = std::move(tv);
        r = std::move(tr);
        norm = tnorm;
        trace.push_back(norm);
    }

    OperatingPoint last = make_point(p, v);
    last.iterations = static_cast<int>(trace.size()) - 1;
    throw DidNotConverge(std::move(last), std::move(trace),
                         "Newton iteration did not converge (max mismatch " + std::to_string(norm) + ")");
}

OperatingPoint newton_solve(const casemodel::NetworkCase& c, const ConstraintProfile& profile,
                            const SolverOptions& options) {
    return newton_solve(Problem(c, profile), options);
}

LimitResult enforce_current_limits(const casemodel::NetworkCase& c, const ConstraintProfile& profile,
                                   const OperatingPoint& point, const SolverOptions& options) {
    LimitResult out{profile, point, {}};
    for (int outer = 0;; ++outer) {
        std::vector<int> over;
        for (const auto& b : out.profile.buses()) {
            if (b.mode != BusMode::VoltageConstrained || !b.i_limit)
                continue;
            const double mag = std::abs(out.point.i.at(out.point.position(b.bus)));
            if (mag > *b.i_limit * (1.0 + kSwitchHysteresis))
                over.push_back(b.bus);
        }
        if (over.empty())
            return out;
        if (outer == kMaxOuterIterations)
            throw ModeOscillation("current-limit switching did not settle after " +
                                  std::to_string(kMaxOuterIterations) + " outer iterations");

        std::vector<BusConstraint> buses = out.profile.buses();
        for (auto& b : buses)
            if (std::find(over.begin(), over.end(), b.bus) != over.end()) {
                b.mode = BusMode::CurrentConstrained;
                b.i_max = *b.i_limit;
                b.p_set = c.scheduled_injection(b.bus).real();
            }
        out.profile = ConstraintProfile(std::move(buses));
        out.switched.insert(out.switched.end(), over.begin(), over.end());

        SolverOptions warm = options;
        warm.start = SolverOptions::Start::Warm;
        warm.warm = out.point;
        out.point = newton_solve(c, out.profile, warm);
    }
}

} // namespace wirtstab::powerflow

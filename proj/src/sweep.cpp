#include "wirtstab/sweep.hpp"

#include <cmath>
#include <exception>

#include "wirtstab/thevenin.hpp"

namespace wirtstab::sweep {

using powerflow::OperatingPoint;
using powerflow::SolverOptions;

std::string to_string(Predicate p) {
    switch (p) {
    case Predicate::DominanceLoss: return "dominance";
    case Predicate::CwUnity: return "cw";
    case Predicate::ConvSingular: return "conv";
    }
    return "?";
}

Predicate predicate_from(const std::string& name) {
    if (name == "dominance")
        return Predicate::DominanceLoss;
    if (name == "cw")
        return Predicate::CwUnity;
    if (name == "conv")
        return Predicate::ConvSingular;
    throw SemanticError("unknown boundary '" + name + "' (expected dominance, cw or conv)");
}

std::vector<double> make_schedule(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi))
        throw SemanticError("loading range must satisfy lo <= hi and step > 0");
    std::vector<double> out;
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long k = 0; k <= count; ++k) // rounded so 0.2:1.0:0.2 prints as 0.6, not 0.6000000000000001
        out.push_back(std::round((lo + static_cast<double>(k) * step) * 1e12) / 1e12);
    return out;
}

Evaluation evaluate(const casemodel::NetworkCase& scaled, const powerflow::ConstraintProfile& profile,
                    const OperatingPoint& point, const SweepOptions& options, double lambda) {
    Evaluation e;
    e.lambda = lambda;
    e.profile = profile;
    e.point = point;
    const auto ybus = casemodel::build_ybus(scaled);
    const auto model = thevenin::reduce(ybus, point.slack_id, point.v_slack, profile);
    const auto jred = wirtinger::reduced_jacobian(point, model, profile, wirtinger::Closure::Local);
    e.dominance = wirtinger::dominance_report(jred, point, model, profile, options.variant);
    const auto p_local = indices::scheduled_active_power(scaled, point);
    e.l_index = indices::l_index(point, ybus, profile);
    e.scr = indices::scr(point, model, p_local, options.scr_voltage);
    e.kr = indices::kr_index(point, model, p_local);
    const auto sv = numerics::singular_values(powerflow::conventional_jacobian(scaled, profile, point.v));
    e.sigma_min_conv = sv.back();
    e.norm_conv = sv.front();
    return e;
}

Evaluation solve_at(const casemodel::NetworkCase& c, const powerflow::ConstraintProfile& profile, double lambda,
                    const SweepOptions& options, const OperatingPoint* warm) {
    const auto scaled = casemodel::scale_loading(c, lambda, options.targets);
    SolverOptions so = options.solver;
    if (warm) {
        so.start = SolverOptions::Start::Warm;
        so.warm = *warm;
    }
    OperatingPoint point = powerflow::newton_solve(scaled, profile, so);
    powerflow::ConstraintProfile active = profile;
    std::vector<int> switched;
    if (options.enforce_limits) {
        auto limited = powerflow::enforce_current_limits(scaled, profile, point, so);
        active = std::move(limited.profile);
        point = std::move(limited.point);
        switched = std::move(limited.switched);
    }
    Evaluation e = evaluate(scaled, active, point, options, lambda);
    e.switched = std::move(switched);
    return e;
}

bool beyond(const Evaluation& e, Predicate predicate) {
    switch (predicate) {
    case Predicate::DominanceLoss: return !e.dominance.dominant;
    case Predicate::CwUnity: return !(e.dominance.system_c_w > 1.0);
    case Predicate::ConvSingular: return e.sigma_min_conv < kSingularRatio * e.norm_conv;
    }
    return false;
}

namespace {

struct Probe {
    bool beyond = true;
    std::optional<Evaluation> eval;
};

Probe probe(const casemodel::NetworkCase& c, const powerflow::ConstraintProfile& profile, Predicate predicate,
            double lambda, const SweepOptions& options, const OperatingPoint* warm) {
    for (int attempt = 0; attempt < 2; ++attempt) {
        const OperatingPoint* start = attempt == 0 ? warm : nullptr;
        if (attempt == 1 && !warm)
            break;
        try {
            Probe p;
            p.eval = solve_at(c, profile, lambda, options, start);
            p.beyond = beyond(*p.eval, predicate);
            return p;
        } catch (const Error&) {
            // fall through: retry from a flat start, then report as beyond
        }
    }
    return {};
}

} // namespace

double find_boundary(const casemodel::NetworkCase& c, const powerflow::ConstraintProfile& profile,
                     Predicate predicate, double lo, double hi, double tol, const SweepOptions& options) {
    if (!(lo < hi) || !(tol > 0.0))
        throw InvalidBracket("bracket must satisfy lo < hi with a positive tolerance");
    Probe plo = probe(c, profile, predicate, lo, options, nullptr);
    Probe phi = probe(c, profile, predicate, hi, options, plo.eval ? &plo.eval->point : nullptr);
    if (plo.beyond == phi.beyond)
        throw InvalidBracket("predicate '" + to_string(predicate) + "' has the same state at both ends of [" +
                             std::to_string(lo) + ", " + std::to_string(hi) + "]");
    const bool lo_state = plo.beyond;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const Probe& anchor = plo.eval ? plo : phi;
        Probe pm = probe(c, profile, predicate, mid, options, anchor.eval ? &anchor.eval->point : nullptr);
        if (pm.beyond == lo_state) {
            lo = mid;
            if (pm.eval)
                plo = std::move(pm);
        } else {
            hi = mid;
            if (pm.eval)
                phi = std::move(pm);
        }
    }
    return 0.5 * (lo + hi);
}

SweepResult run_sweep(const casemodel::NetworkCase& c, const powerflow::ConstraintProfile& profile,
                      const std::vector<double>& schedule, const SweepOptions& options) {
    if (schedule.empty())
        throw SemanticError("loading schedule is empty");
    for (std::size_t k = 1; k < schedule.size(); ++k)
        if (!(schedule[k] > schedule[k - 1]))
            throw SemanticError("loading schedule must be strictly ascending");

    SweepResult out;
    out.samples.resize(schedule.size());
    for (std::size_t k = 0; k < schedule.size(); ++k)
        out.samples[k].lambda = schedule[k];

    if (options.start == SweepOptions::Start::Warm) {
        powerflow::ConstraintProfile current = profile;
        std::optional<OperatingPoint> last;
        for (std::size_t k = 0; k < schedule.size(); ++k) {
            try {
                Evaluation e = solve_at(c, current, schedule[k], options, last ? &*last : nullptr);
                current = e.profile; // switches latch along the sweep
                last = e.point;
                out.samples[k].converged = true;
                out.samples[k].eval = std::move(e);
            } catch (const Error& err) {
                if (k == 0)
                    throw;
                out.samples[k].diagnostic = err.what();
            }
        }
    } else {
        std::vector<std::exception_ptr> errors(schedule.size());
        const auto count = static_cast<std::ptrdiff_t>(schedule.size());
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t kk = 0; kk < count; ++kk) {
            const auto k = static_cast<std::size_t>(kk);
            try {
                out.samples[k].eval = solve_at(c, profile, schedule[k], options, nullptr);
                out.samples[k].converged = true;
            } catch (const Error& err) {
                out.samples[k].diagnostic = err.what();
                errors[k] = std::current_exception();
            }
        }
        if (errors.front())
            std::rethrow_exception(errors.front());
    }

    // Mode transitions between consecutive converged samples.
    const powerflow::ConstraintProfile* prev = &profile;
    for (const auto& s : out.samples) {
        if (!s.eval)
            continue;
        for (const auto& b : profile.buses()) {
            const auto from = prev->at(b.bus).mode;
            const auto to = s.eval->profile.at(b.bus).mode;
            if (from != to)
                out.transitions.push_back({s.lambda, b.bus, from, to});
        }
        prev = &s.eval->profile;
    }

    for (Predicate pred : options.boundaries) {
        Boundary b;
        b.predicate = pred;
        b.tolerance = options.boundary_tol;
        auto is_beyond = [&](const Sample& s) { return !s.eval || beyond(*s.eval, pred); };
        if (is_beyond(out.samples.front())) {
            b.note = "already beyond at the first sample";
            out.boundaries.push_back(b);
            continue;
        }
        std::size_t k = 1;
        while (k < out.samples.size() && !is_beyond(out.samples[k]))
            ++k;
        if (k == out.samples.size()) {
            b.note = "not crossed within the schedule";
            out.boundaries.push_back(b);
            continue;
        }
        b.bracket_lo = out.samples[k - 1].lambda;
        b.bracket_hi = out.samples[k].lambda;
        try {
            b.lambda = find_boundary(c, profile, pred, b.bracket_lo, b.bracket_hi, options.boundary_tol, options);
        } catch (const InvalidBracket& e) {
            b.note = e.what();
        }
        out.boundaries.push_back(b);
    }
    return out;
}

} // namespace wirtstab::sweep

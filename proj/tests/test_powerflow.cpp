#include "doctest.h"

#include "support.hpp"
#include "wirtstab/powerflow.hpp"
#include "wirtstab/thevenin.hpp"

using namespace wirtstab;
using namespace wirtstab::powerflow;
using numerics::Complex;
using numerics::ComplexVector;

namespace {

// Applies a state perturbation in the solver's coordinates
// [θ (bus_order); U_U; U_CI].
ComplexVector perturb(const Problem& p, ComplexVector v, std::size_t col, double h) {
    const std::size_t n = p.bus_order().size();
    if (col < n) {
        v[col] *= std::polar(1.0, h);
        return v;
    }
    std::size_t m = col - n;
    const std::size_t k = m < p.n_u() ? m : p.ci()[m - p.n_u()];
    v[k] *= (std::abs(v[k]) + h) / std::abs(v[k]);
    return v;
}

// J_conv row r corresponds to mismatch row r (power rows, negated) or to a
// |I| row past the C^V block.
double fd_entry(const Problem& p, const ComplexVector& v, std::size_t row, std::size_t col, double h) {
    const std::size_t np = p.bus_order().size() + p.n_u();
    const std::size_t mrow = row < np ? row : row + p.cv().size();
    const double sign = row < np ? -1.0 : 1.0;
    const double fp = mismatch(p, perturb(p, v, col, h))[mrow];
    const double fm = mismatch(p, perturb(p, v, col, -h))[mrow];
    return sign * (fp - fm) / (2.0 * h);
}

ComplexVector random_state(const Problem& p) {
    ComplexVector v(p.bus_order().size());
    for (auto& x : v)
        x = std::polar(support::uniform(0.85, 1.1), support::uniform(-0.5, 0.5));
    return v;
}

void check_against_fd(const Problem& p, int states) {
    for (int s = 0; s < states; ++s) {
        const auto v = random_state(p);
        const auto jac = conventional_jacobian(p, v);
        REQUIRE(jac.rows() == p.state_size());
        double scale = numerics::max_abs(jac);
        for (std::size_t r = 0; r < jac.rows(); ++r)
            for (std::size_t c = 0; c < jac.cols(); ++c) {
                const double fd = fd_entry(p, v, r, c, 1e-6);
                const double err = std::abs(jac(r, c) - fd) / std::max({std::abs(fd), std::abs(jac(r, c)), 1e-3 * scale});
                CHECK(err <= 1e-6);
            }
    }
}

OperatingPoint solve_three_bus(double lambda) {
    const auto c = casemodel::scale_loading(support::three_bus(), lambda, casemodel::ScalingTarget::LoadsOnly);
    return newton_solve(c, default_profile(c));
}

} // namespace

TEST_CASE("mismatch examples") {
    SUBCASE("no-load network at flat start") {
        const auto c = support::three_bus();
        auto idle = casemodel::scale_loading(c, 0.0, casemodel::ScalingTarget::LoadsOnly);
        idle.generators[1].p_set = 0.0;
        for (double r : mismatch(idle, default_profile(idle), ComplexVector(2, 1.0)))
            CHECK(r == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("two-bus flat start reports the specification") {
        const auto c = support::two_bus(0.25, 0.5);
        const auto r = mismatch(c, default_profile(c), ComplexVector{1.0});
        REQUIRE(r.size() == 2);
        // specified injection is -0.5 (a load); computed flow is zero
        CHECK(r[0] == doctest::Approx(-0.5));
        CHECK(r[1] == doctest::Approx(0.0));
    }
}

TEST_CASE("conventional Jacobian against finite differences") {
    SUBCASE("three-bus, PV bus 3") {
        const auto c = support::three_bus();
        check_against_fd(Problem(c, default_profile(c)), 20);
    }
    SUBCASE("three-bus, current-limited bus 3") {
        const auto c = support::three_bus();
        check_against_fd(Problem(c, support::profile_from(c, {}, {{3, 0.9}})), 20);
    }
    SUBCASE("nine-bus placeholder with a current-limited converter") {
        const auto c = casemodel::load_case(support::data_path("nine_bus_placeholder.json"));
        check_against_fd(Problem(c, support::profile_from(c, {2}, {{3, 0.8}})), 5);
    }
}

TEST_CASE("conventional Jacobian structure") {
    SUBCASE("two-bus PV is the 1x1 dP/dtheta") {
        const auto c = support::two_bus_pv(0.0, 0.25, 0.6);
        const Problem p(c, default_profile(c));
        const ComplexVector v{std::polar(1.0, 0.2)};
        const auto jac = conventional_jacobian(p, v);
        REQUIRE(jac.rows() == 1);
        REQUIRE(jac.cols() == 1);
        // P2 = |V1||V2| sin(θ2)/X
        CHECK(jac(0, 0) == doctest::Approx(std::cos(0.2) / 0.25).epsilon(1e-12));
    }
    SUBCASE("lossless network at flat voltage decouples dP/dU") {
        auto c = support::three_bus();
        for (auto& br : c.branches)
            br.r = 0.0;
        const Problem p(c, support::profile_from(c, {}));
        const auto jac = conventional_jacobian(p, ComplexVector(2, 1.0));
        for (std::size_t r = 0; r < 2; ++r)
            for (std::size_t col = 2; col < 4; ++col)
                CHECK(std::abs(jac(r, col)) < 1e-12);
    }
    SUBCASE("serial and parallel assembly agree") {
        const auto c = casemodel::load_case(support::data_path("case39.m"));
        const Problem p(c, default_profile(c));
        const auto v = random_state(p);
        CHECK(conventional_jacobian(p, v, numerics::Execution::Serial) ==
              conventional_jacobian(p, v, numerics::Execution::Parallel));
    }
}

TEST_CASE("newton_solve") {
    SUBCASE("no-load converges immediately to E") {
        auto c = casemodel::scale_loading(support::three_bus(), 0.0, casemodel::ScalingTarget::LoadsOnly);
        c.generators[1].p_set = 0.0;
        const auto pt = newton_solve(c, default_profile(c));
        CHECK(pt.converged);
        CHECK(pt.iterations <= 1);
        for (auto x : pt.v)
            CHECK(std::abs(x - 1.0) < 1e-10);
    }
    SUBCASE("three-bus inside and beyond the nose") {
        const auto pt = solve_three_bus(0.5);
        CHECK(pt.converged);
        CHECK(pt.max_mismatch <= 1e-8);
        CHECK_THROWS_AS(solve_three_bus(0.61), Error);
    }
    SUBCASE("two-bus nose at E^2/(2X)") {
        const auto below = support::two_bus(0.25, 1.99);
        CHECK(newton_solve(below, default_profile(below)).converged);
        const auto above = support::two_bus(0.25, 2.01);
        CHECK_THROWS_AS(newton_solve(above, default_profile(above)), Error);
    }
    SUBCASE("point invariants") {
        const auto pt = solve_three_bus(0.45);
        const auto c = casemodel::scale_loading(support::three_bus(), 0.45, casemodel::ScalingTarget::LoadsOnly);
        CHECK(std::abs(std::abs(pt.v[pt.position(3)]) - 1.0) <= 1e-8);
        for (std::size_t k = 0; k < pt.v.size(); ++k)
            CHECK(std::abs(pt.s[k] - pt.v[k] * std::conj(pt.i[k])) <= 1e-12);
        // currents agree with the Thevenin relation
        const auto m = thevenin::reduce(casemodel::build_ybus(c), pt.slack_id, pt.v_slack, default_profile(c));
        const auto v = thevenin::voltages_from_currents(m, pt.i);
        for (std::size_t k = 0; k < v.size(); ++k)
            CHECK(std::abs(v[k] - pt.v[k]) <= 1e-10);
    }
    SUBCASE("warm start re-converges in at most two iterations") {
        const auto c = casemodel::scale_loading(support::three_bus(), 0.5, casemodel::ScalingTarget::LoadsOnly);
        const auto first = newton_solve(c, default_profile(c));
        SolverOptions opt;
        opt.start = SolverOptions::Start::Warm;
        opt.warm = first;
        CHECK(newton_solve(c, default_profile(c), opt).iterations <= 2);
    }
    SUBCASE("39-bus solution has zero residual") {
        const auto c = casemodel::load_case(support::data_path("case39.m"));
        const Problem p(c, default_profile(c));
        const auto pt = newton_solve(p);
        const auto r = mismatch(p, pt.v);
        CHECK(numerics::norm_inf(std::span<const double>(r)) <= 1e-8);
    }
    SUBCASE("failure carries the last iterate") {
        const auto c = support::two_bus(0.25, 3.0);
        try {
            newton_solve(c, default_profile(c));
            FAIL("expected a solver failure");
        } catch (const DidNotConverge& e) {
            CHECK(e.last().v.size() == 1);
            CHECK(!e.trace().empty());
        } catch (const SingularJacobianAtIterate& e) {
            CHECK(e.iteration() >= 0);
        }
    }
}

TEST_CASE("enforce_current_limits") {
    const auto base = support::three_bus();
    const auto c = casemodel::scale_loading(base, 0.5, casemodel::ScalingTarget::LoadsOnly);

    SUBCASE("no-op when every converter is below its limit") {
        auto profile = default_profile(c);
        profile.at(3).i_limit = 10.0;
        const auto pt = newton_solve(c, profile);
        const auto r = enforce_current_limits(c, profile, pt);
        CHECK(r.switched.empty());
        CHECK(r.profile == profile);
        CHECK(r.point.v == pt.v);
    }
    SUBCASE("single constructed switch") {
        auto profile = default_profile(c);
        const auto free = newton_solve(c, profile);
        const double limit = 0.999 * std::abs(free.i[free.position(3)]);
        profile.at(3).i_limit = limit;
        const auto r = enforce_current_limits(c, profile, free);
        REQUIRE(r.switched == std::vector<int>{3});
        CHECK(r.profile.at(3).mode == BusMode::CurrentConstrained);
        CHECK(r.profile.at(3).p_set == doctest::Approx(0.8));
        CHECK(std::abs(std::abs(r.point.i[r.point.position(3)]) - limit) <= 1e-8);
        CHECK(r.point.converged);
    }
    SUBCASE("39-bus converter case: bus 33 saturates at full injection") {
        const auto ibr = casemodel::load_case(support::data_path("case39_ibr.json"));
        const auto full = casemodel::scale_loading(ibr, 1.0, casemodel::ScalingTarget::IbrOnly);
        const auto profile = default_profile(full);
        const auto r = enforce_current_limits(full, profile, newton_solve(full, profile));
        CHECK(r.switched == std::vector<int>{33});
        const auto light = casemodel::scale_loading(ibr, 0.8, casemodel::ScalingTarget::IbrOnly);
        CHECK(enforce_current_limits(light, profile, newton_solve(light, profile)).switched.empty());
    }
}

TEST_CASE("profiles") {
    const auto ibr = casemodel::load_case(support::data_path("case39_ibr.json"));
    const auto profile = default_profile(ibr);
    CHECK(profile.at(30).mode == BusMode::Unconstrained);
    CHECK(profile.at(33).mode == BusMode::VoltageConstrained);
    CHECK(profile.at(33).i_limit.has_value());
    CHECK(profile.at(32).mode == BusMode::VoltageConstrained);
    CHECK(!profile.contains(31));

    ProfileOverrides o;
    o.pq = {32};
    o.current_limit = {{35, 1.5}};
    const auto over = apply_overrides(ibr, profile, o);
    CHECK(over.at(32).mode == BusMode::Unconstrained);
    CHECK(over.at(35).i_limit == 1.5);

    CHECK_THROWS_AS(ConstraintProfile(std::vector<BusConstraint>{{2, BusMode::VoltageConstrained, 0.0}}), SemanticError);
    CHECK_THROWS_AS(ConstraintProfile(std::vector<BusConstraint>{{2, BusMode::CurrentConstrained, 1.0, 0.0}}), SemanticError);
    CHECK_THROWS_AS(ConstraintProfile(std::vector<BusConstraint>{{2}, {2}}), SemanticError);
}

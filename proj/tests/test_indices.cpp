#include "doctest.h"

#include "support.hpp"
#include "wirtstab/indices.hpp"

using namespace wirtstab;
using namespace wirtstab::indices;
using numerics::Complex;

namespace {

powerflow::OperatingPoint flat_point(const std::vector<int>& order, Complex v = 1.0) {
    powerflow::OperatingPoint p;
    p.bus_order = order;
    p.v.assign(order.size(), v);
    p.i.assign(order.size(), 0.0);
    p.s.assign(order.size(), 0.0);
    p.slack_id = 1;
    return p;
}

thevenin::TheveninModel diagonal_model(const std::vector<Complex>& z) {
    thevenin::TheveninModel m;
    const std::size_t n = z.size();
    m.z = numerics::ComplexMatrix(n, n);
    m.y_red = numerics::ComplexMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        m.z(k, k) = z[k];
        m.y_red(k, k) = 1.0 / z[k];
        m.bus_order.push_back(static_cast<int>(k) + 2);
    }
    m.e.assign(n, 1.0);
    m.n_u = n;
    return m;
}

struct Solved {
    casemodel::NetworkCase c;
    powerflow::ConstraintProfile profile;
    powerflow::OperatingPoint point;
    thevenin::TheveninModel model;
};

Solved three_bus_at(double lambda) {
    const auto c = casemodel::scale_loading(support::three_bus(), lambda, casemodel::ScalingTarget::LoadsOnly);
    const auto profile = powerflow::default_profile(c);
    const auto pt = powerflow::newton_solve(c, profile);
    return {c, profile, pt, thevenin::reduce(casemodel::build_ybus(c), 1, 1.0, profile)};
}

} // namespace

TEST_CASE("L-index") {
    SUBCASE("no-load network sits at zero") {
        const auto c = support::three_bus();
        const auto y = casemodel::build_ybus(c);
        const auto l = l_index(flat_point({2, 3}), y, std::vector<int>{1}, std::vector<int>{2, 3});
        CHECK(*l.at(2) == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(*l.at(3) == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("single load fed by one source") {
        const auto c = support::two_bus(0.25, 0.5);
        const auto y = casemodel::build_ybus(c);
        const Complex v2 = std::polar(0.93, -0.13);
        const auto l = l_index(flat_point({2}, v2), y, std::vector<int>{1}, std::vector<int>{2});
        CHECK(*l.at(2) == doctest::Approx(std::abs(1.0 - 1.0 / v2)).epsilon(1e-12));
    }
    SUBCASE("present at load buses only") {
        const auto s = three_bus_at(0.3);
        const auto l = l_index(s.point, casemodel::build_ybus(s.c), s.profile);
        CHECK(l.at(2).has_value());
        CHECK(!l.at(3).has_value());
        CHECK(*l.at(2) >= 0.0);
        CHECK(l.kind == IndexKind::Lindex);
    }
    SUBCASE("grows with loading on the three-bus system") {
        double prev = -1.0;
        for (double lambda : {0.1, 0.2, 0.3, 0.4, 0.5, 0.58}) {
            const auto s = three_bus_at(lambda);
            const double l = *l_index(s.point, casemodel::build_ybus(s.c), s.profile).at(2);
            CHECK(l > prev);
            prev = l;
        }
    }
    SUBCASE("current-limited buses join the load set") {
        const auto s = three_bus_at(0.3);
        auto profile = support::profile_from(s.c, {}, {{3, 1.0}});
        const auto l = l_index(s.point, casemodel::build_ybus(s.c), profile);
        CHECK(l.at(3).has_value());
    }
    SUBCASE("singular load block") {
        auto c = support::three_bus();
        c.branches[1].status = false; // bus 3 left without any admittance
        const auto y = casemodel::build_ybus(c);
        CHECK_THROWS_AS(l_index(flat_point({2, 3}), y, std::vector<int>{1}, std::vector<int>{2, 3}),
                        SingularLoadBlock);
    }
}

TEST_CASE("SCR") {
    const auto m = diagonal_model({0.1, Complex(0, 0.5), 0.2});
    auto pt = flat_point({2, 3, 4}, std::polar(0.9, 0.1));
    const auto s = scr(pt, m, {2.0, 0.0, -1.0});
    CHECK(*s.at(2) == doctest::Approx(5.0));
    CHECK(!s.at(3).has_value());
    CHECK(*s.at(4) == doctest::Approx(5.0));
    const auto actual = scr(pt, m, {2.0, 0.0, -1.0}, ScrVoltage::Actual);
    CHECK(*actual.at(2) == doctest::Approx(0.81 * 5.0));
    const auto doubled = scr(pt, m, {4.0, 0.0, -2.0});
    CHECK(*doubled.at(2) == 0.5 * *s.at(2));
    CHECK(*doubled.at(4) == 0.5 * *s.at(4));
}

TEST_CASE("K_R stand-in") {
    const auto m = diagonal_model({0.2});
    const auto k = kr_index(flat_point({2}), m, {1.0});
    CHECK(*k.at(2) == doctest::Approx(5.0));
    CHECK(!kr_index(flat_point({2}), m, {0.0}).at(2).has_value());
    CHECK(*kr_index(flat_point({2}), m, {2.0}).at(2) == doctest::Approx(2.5));

    double prev = INFINITY;
    for (double lambda : {0.1, 0.2, 0.3, 0.4, 0.5}) {
        const auto s = three_bus_at(lambda);
        const auto p = scheduled_active_power(s.c, s.point);
        const double kr = *kr_index(s.point, s.model, p).at(2);
        // direct recomputation of the same formula
        const double lam = numerics::max_eigenvalue_magnitude(numerics::to_complex(numerics::abs(s.model.z)));
        CHECK(kr == doctest::Approx(std::norm(s.point.v[0]) / (lam * std::abs(p[0]))));
        CHECK(kr < prev);
        prev = kr;
    }
}

TEST_CASE("indices never produce NaN") {
    const auto ibr = casemodel::load_case(support::data_path("case39_ibr.json"));
    const auto c = casemodel::scale_loading(ibr, 0.6, casemodel::ScalingTarget::IbrOnly);
    const auto profile = powerflow::default_profile(c);
    const auto pt = powerflow::newton_solve(c, profile);
    const auto m = thevenin::reduce(casemodel::build_ybus(c), pt.slack_id, pt.v_slack, profile);
    const auto p = scheduled_active_power(c, pt);
    for (const auto& iv : {l_index(pt, casemodel::build_ybus(c), profile), scr(pt, m, p), kr_index(pt, m, p)})
        for (const auto& v : iv.values)
            if (v)
                CHECK(std::isfinite(*v));
}

#include "wirtstab/equivalence.hpp"

#include <cmath>

#include "wirtstab/wirtinger.hpp"

namespace wirtstab::equivalence {

using numerics::Complex;
using numerics::ComplexMatrix;
using numerics::RealMatrix;
using powerflow::BusMode;

namespace {

constexpr Complex kJ{0.0, 1.0};

} // namespace

ComplexMatrix row_map(std::size_t n_u, std::size_t n_c) {
    if (n_u == 0 && n_c == 0)
        throw DimensionMismatch("row map needs at least one bus");
    const std::size_t n = 2 * n_u + n_c;
    ComplexMatrix l(n, n);
    const Complex k21 = 1.0 / (2.0 * kJ);
    for (std::size_t k = 0; k < n_u; ++k) {
        l(k, k) = 0.5;
        l(k, n_u + k) = 0.5;
        l(n_u + k, k) = k21;
        l(n_u + k, n_u + k) = -k21;
    }
    for (std::size_t r = 0; r < n_c; ++r)
        l(2 * n_u + r, 2 * n_u + r) = 1.0;
    return l;
}

ComplexMatrix column_map(const powerflow::OperatingPoint& point, const thevenin::TheveninModel& model,
                         const powerflow::ConstraintProfile& profile) {
    if (point.bus_order != model.bus_order)
        throw DimensionMismatch("operating point and Thevenin model use different bus orderings");
    const std::size_t nu = model.n_u;
    const std::size_t nc = model.n_c;
    const std::size_t n = nu + nc;
    const auto& v = point.v;
    for (std::size_t k = 0; k < n; ++k)
        if (std::abs(v[k]) < kMinVoltage)
            throw SingularColumnMap("bus " + std::to_string(model.bus_order[k]) + " has near-zero voltage");

    // ΔV = M·[ΔU_U; Δθ_C; Δθ_U]
    const std::size_t dim = 2 * nu + nc;
    ComplexMatrix m(n, dim);
    for (std::size_t k = 0; k < nu; ++k) {
        m(k, k) = v[k] / std::abs(v[k]);
        m(k, nu + nc + k) = kJ * v[k];
    }
    for (std::size_t r = 0; r < nc; ++r)
        m(nu + r, nu + r) = kJ * v[nu + r];
    ComplexMatrix ym = numerics::multiply(model.y_red, m);

    // Current-limited buses also move in magnitude, by whatever keeps |I| fixed.
    std::vector<std::size_t> ci;
    for (std::size_t r = 0; r < nc; ++r)
        if (profile.at(model.bus_order[nu + r]).mode == BusMode::CurrentConstrained)
            ci.push_back(nu + r);
    if (!ci.empty()) {
        const std::size_t q = ci.size();
        ComplexMatrix nmat(n, q);
        for (std::size_t a = 0; a < q; ++a)
            nmat(ci[a], a) = v[ci[a]] / std::abs(v[ci[a]]);
        const ComplexMatrix yn = numerics::multiply(model.y_red, nmat);
        RealMatrix h(q, q);
        RealMatrix f(q, dim);
        for (std::size_t a = 0; a < q; ++a) {
            const Complex ic = std::conj(point.i[ci[a]]);
            for (std::size_t b = 0; b < q; ++b)
                h(a, b) = (ic * yn(ci[a], b)).real();
            for (std::size_t k = 0; k < dim; ++k)
                f(a, k) = -(ic * ym(ci[a], k)).real();
        }
        RealMatrix g(1, 1);
        try {
            g = numerics::LuFactorization<double>(h).solve_many(f);
        } catch (const SingularMatrix& e) {
            throw SingularColumnMap(std::string("current-limit closure is singular: ") + e.what());
        }
        const ComplexMatrix shift = numerics::multiply(nmat, numerics::to_complex(g));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < dim; ++k)
                m(i, k) += shift(i, k);
        ym = numerics::multiply(model.y_red, m);
    }

    ComplexMatrix r(dim, dim);
    for (std::size_t k = 0; k < dim; ++k) {
        for (std::size_t i = 0; i < nu; ++i) {
            r(i, k) = ym(i, k);
            r(nu + i, k) = std::conj(ym(i, k));
        }
        for (std::size_t c = 0; c < nc; ++c)
            r(2 * nu + c, k) = ym(nu + c, k);
    }
    if (numerics::min_singular_value(r) < kColumnMapTolerance)
        throw SingularColumnMap("column map is numerically singular");
    return r;
}

RealMatrix effective_conventional_jacobian(const casemodel::NetworkCase& c, const powerflow::ConstraintProfile& profile,
                                           const powerflow::OperatingPoint& point) {
    const powerflow::Problem p(c, profile);
    if (p.bus_order() != point.bus_order)
        throw DimensionMismatch("operating point does not match the profile ordering");
    const RealMatrix full = powerflow::conventional_jacobian(p, point.v);
    const std::size_t keep = p.bus_order().size() + p.n_u();
    const std::size_t q = p.ci().size();
    RealMatrix out(keep, keep);
    for (std::size_t i = 0; i < keep; ++i)
        for (std::size_t k = 0; k < keep; ++k)
            out(i, k) = full(i, k);
    if (q == 0)
        return out;

    // Schur complement J11 − J12·J22⁻¹·J21 over the |I| rows and U_CI columns.
    RealMatrix j22(q, q);
    RealMatrix j21(q, keep);
    for (std::size_t a = 0; a < q; ++a) {
        for (std::size_t b = 0; b < q; ++b)
            j22(a, b) = full(keep + a, keep + b);
        for (std::size_t k = 0; k < keep; ++k)
            j21(a, k) = full(keep + a, k);
    }
    const RealMatrix x = numerics::LuFactorization<double>(j22).solve_many(j21);
    for (std::size_t i = 0; i < keep; ++i)
        for (std::size_t k = 0; k < keep; ++k) {
            double s = 0.0;
            for (std::size_t a = 0; a < q; ++a)
                s += full(i, keep + a) * x(a, k);
            out(i, k) -= s;
        }
    return out;
}

ComplexMatrix mapped_reduced_jacobian(const powerflow::OperatingPoint& point, const thevenin::TheveninModel& model,
                                      const powerflow::ConstraintProfile& profile, bool network_closure) {
    const std::size_t nu = model.n_u;
    const std::size_t nc = model.n_c;
    const std::size_t n = nu + nc;
    const auto jred = wirtinger::reduced_jacobian(
        point, model, profile, network_closure ? wirtinger::Closure::Network : wirtinger::Closure::Local);
    const ComplexMatrix ljr = numerics::multiply(numerics::multiply(row_map(nu, nc), jred.matrix),
                                                 column_map(point, model, profile));
    // rows [P_U; Q_U; P_C] -> [P_U; P_C; Q_U]; cols [U_U; θ_C; θ_U] -> [θ_U; θ_C; U_U]
    std::vector<std::size_t> row_to(2 * nu + nc);
    std::vector<std::size_t> col_to(2 * nu + nc);
    for (std::size_t k = 0; k < nu; ++k) {
        row_to[k] = k;
        row_to[nu + k] = n + k;
        col_to[k] = n + k;
        col_to[nu + nc + k] = k;
    }
    for (std::size_t r = 0; r < nc; ++r) {
        row_to[2 * nu + r] = nu + r;
        col_to[nu + r] = nu + r;
    }
    ComplexMatrix out(ljr.rows(), ljr.cols());
    for (std::size_t i = 0; i < ljr.rows(); ++i)
        for (std::size_t k = 0; k < ljr.cols(); ++k)
            out(row_to[i], col_to[k]) = ljr(i, k);
    return out;
}

EquivalenceReport verify(const casemodel::NetworkCase& c, const powerflow::ConstraintProfile& profile,
                         const powerflow::OperatingPoint& point) {
    const auto ybus = casemodel::build_ybus(c);
    const auto model = thevenin::reduce(ybus, point.slack_id, point.v_slack, profile);
    if (model.bus_order != point.bus_order)
        throw DimensionMismatch("operating point does not match the profile ordering");

    EquivalenceReport rep;
    for (const auto& b : profile.buses())
        if (b.mode == BusMode::CurrentConstrained)
            rep.current_limited_extension = true;

    const ComplexMatrix jconv = numerics::to_complex(effective_conventional_jacobian(c, profile, point));
    const ComplexMatrix r = column_map(point, model, profile);
    rep.r_min_singular = numerics::min_singular_value(r);
    rep.det_l_magnitude = std::abs(numerics::determinant(row_map(model.n_u, model.n_c)));

    const double scale = numerics::norm_fro(jconv);
    rep.residual = numerics::norm_fro(numerics::subtract(jconv, mapped_reduced_jacobian(point, model, profile, true))) / scale;
    rep.local_closure_residual =
        numerics::norm_fro(numerics::subtract(jconv, mapped_reduced_jacobian(point, model, profile, false))) / scale;
    rep.sigma_min_conv = numerics::min_singular_value(jconv);
    rep.sigma_min_red =
        numerics::min_singular_value(wirtinger::reduced_jacobian(point, model, profile, wirtinger::Closure::Network).matrix);
    rep.verdict = rep.residual <= kResidualTolerance && rep.r_min_singular >= kColumnMapTolerance;
    return rep;
}

} // namespace wirtstab::equivalence

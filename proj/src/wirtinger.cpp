#include "wirtstab/wirtinger.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace wirtstab::wirtinger {

using numerics::ComplexMatrix;
using numerics::ComplexVector;
using powerflow::BusMode;

namespace {

void require_same_order(const powerflow::OperatingPoint& point, const thevenin::TheveninModel& model) {
    if (point.bus_order != model.bus_order)
        throw DimensionMismatch("operating point and Thevenin model use different bus orderings");
}

std::string tag(const char* what, int bus) { return std::string(what) + "[" + std::to_string(bus) + "]"; }

} // namespace

TangentFactor kappa(Complex v, Complex z_self) {
    if (v == Complex{})
        throw DegenerateInput(-1, "kappa needs a nonzero voltage");
    if (z_self == Complex{})
        throw DegenerateInput(-1, "kappa needs a nonzero self-impedance");
    // −(v*/|v|)²·(z/|z|)², built from unit phasors so |κ| = 1 holds to rounding.
    const Complex pv = v / std::abs(v);
    const Complex pz = z_self / std::abs(z_self);
    const Complex half = std::conj(pv) * pz;
    return {-half * half, TangentFactor::Kind::Kappa};
}

TangentFactor zeta(Complex i) {
    if (std::abs(i) < kDegenerateCurrent)
        throw DegenerateInput(-1, "zeta needs a nonzero current");
    const Complex pi = i / std::abs(i);
    return {-std::conj(pi) * std::conj(pi), TangentFactor::Kind::Zeta};
}

Complex alpha(Complex v, Complex z_self, Complex i) { return 0.5 * (v + std::conj(z_self) * i); }

std::vector<TangentFactor> xi_profile(const powerflow::OperatingPoint& point, const thevenin::TheveninModel& model,
                                      const powerflow::ConstraintProfile& profile) {
    require_same_order(point, model);
    std::vector<TangentFactor> out(model.order());
    for (std::size_t k = 0; k < model.order(); ++k) {
        const int bus = model.bus_order[k];
        try {
            switch (profile.at(bus).mode) {
            case BusMode::Unconstrained: break;
            case BusMode::VoltageConstrained: out[k] = kappa(point.v[k], model.z(k, k)); break;
            case BusMode::CurrentConstrained: out[k] = zeta(point.i[k]); break;
            }
        } catch (const DegenerateInput& e) {
            throw DegenerateInput(bus, e.what());
        }
    }
    return out;
}

ComplexMatrix full_jacobian(const powerflow::OperatingPoint& point, const thevenin::TheveninModel& model,
                            const powerflow::ConstraintProfile&) {
    require_same_order(point, model);
    const std::size_t nu = model.n_u;
    const std::size_t nc = model.n_c;
    const std::size_t n = nu + nc;
    const auto& z = model.z;
    const auto& v = point.v;
    const auto& cur = point.i;

    // Column of I_j and of I_j* in the full layout.
    auto col = [&](std::size_t j, bool star) {
        if (j < nu)
            return star ? nu + j : j;
        return star ? 2 * nu + nc + (j - nu) : 2 * nu + (j - nu);
    };

    ComplexMatrix jf(2 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const Complex ds_di = std::conj(cur[i]) * z(i, j);
            const Complex ds_dis = i == j ? v[i] : Complex{};
            const Complex dsc_di = i == j ? std::conj(v[i]) : Complex{};
            const Complex dsc_dis = cur[i] * std::conj(z(i, j));
            if (i < nu) {
                jf(i, col(j, false)) = ds_di;
                jf(i, col(j, true)) = ds_dis;
                jf(nu + i, col(j, false)) = dsc_di;
                jf(nu + i, col(j, true)) = dsc_dis;
            } else {
                const std::size_t rp = 2 * nu + (i - nu);
                jf(rp, col(j, false)) = 0.5 * (ds_di + dsc_di);
                jf(rp, col(j, true)) = 0.5 * (ds_dis + dsc_dis);
                jf(rp + nc, col(j, false)) = jf(rp, col(j, false));
                jf(rp + nc, col(j, true)) = jf(rp, col(j, true));
            }
        }
    }
    return jf;
}

ComplexMatrix tangent_projection(const powerflow::OperatingPoint& point, const thevenin::TheveninModel& model,
                                 const powerflow::ConstraintProfile& profile, Closure closure) {
    require_same_order(point, model);
    const std::size_t nu = model.n_u;
    const std::size_t nc = model.n_c;
    const std::size_t nred = 2 * nu + nc;
    ComplexMatrix t(2 * (nu + nc), nred);
    for (std::size_t k = 0; k < nred; ++k)
        t(k, k) = 1.0;
    if (nc == 0)
        return t;

    const auto xi = xi_profile(point, model, profile);
    if (closure == Closure::Local) {
        for (std::size_t r = 0; r < nc; ++r)
            t(nred + r, 2 * nu + r) = xi[nu + r].value;
        return t;
    }

    // B·dI_C* = G·[dI_U; dI_U*; dI_C]
    const auto& z = model.z;
    ComplexMatrix b(nc, nc);
    ComplexMatrix g(nc, nred);
    for (std::size_t r = 0; r < nc; ++r) {
        const std::size_t i = nu + r;
        if (xi[i].kind == TangentFactor::Kind::Zeta) {
            b(r, r) = 1.0;
            g(r, 2 * nu + r) = xi[i].value;
            continue;
        }
        const Complex vi = point.v[i];
        for (std::size_t s = 0; s < nc; ++s) {
            b(r, s) = vi * std::conj(z(i, nu + s));
            g(r, 2 * nu + s) = -std::conj(vi) * z(i, nu + s);
        }
        for (std::size_t j = 0; j < nu; ++j) {
            g(r, j) = -std::conj(vi) * z(i, j);
            g(r, nu + j) = -vi * std::conj(z(i, j));
        }
    }
    ComplexMatrix a(1, 1);
    try {
        a = numerics::LuFactorization<Complex>(b).solve_many(g);
    } catch (const SingularMatrix& e) {
        throw DegenerateInput(-1, std::string("constraint closure is singular: ") + e.what());
    }
    for (std::size_t r = 0; r < nc; ++r)
        for (std::size_t k = 0; k < nred; ++k)
            t(nred + r, k) = a(r, k);
    return t;
}

ReducedJacobian reduced_jacobian(const powerflow::OperatingPoint& point, const thevenin::TheveninModel& model,
                                 const powerflow::ConstraintProfile& profile, Closure closure) {
    require_same_order(point, model);
    const std::size_t nu = model.n_u;
    const std::size_t nc = model.n_c;
    const std::size_t nred = 2 * nu + nc;

    ReducedJacobian out;
    out.n_u = nu;
    out.n_c = nc;
    out.bus_order = model.bus_order;
    out.closure = closure;
    out.xi = xi_profile(point, model, profile);

    const ComplexMatrix jf = full_jacobian(point, model, profile);
    const ComplexMatrix merged = numerics::multiply(jf, tangent_projection(point, model, profile, closure));
#ifndef NDEBUG
    for (std::size_t r = 0; r < nc; ++r)
        for (std::size_t k = 0; k < merged.cols(); ++k)
            assert(std::abs(merged(nred + r, k) - merged(2 * nu + r, k)) <= 1e-9 * (1.0 + std::abs(merged(2 * nu + r, k))));
#endif
    out.matrix = ComplexMatrix(nred, nred);
    for (std::size_t r = 0; r < nred; ++r)
        for (std::size_t k = 0; k < nred; ++k)
            out.matrix(r, k) = merged(r, k);

    for (std::size_t k = 0; k < nu; ++k) {
        out.row_labels.push_back(tag("S", model.bus_order[k]));
        out.col_labels.push_back(tag("I", model.bus_order[k]));
    }
    for (std::size_t k = 0; k < nu; ++k) {
        out.row_labels.push_back(tag("S*", model.bus_order[k]));
        out.col_labels.push_back(tag("I*", model.bus_order[k]));
    }
    for (std::size_t r = 0; r < nc; ++r) {
        const std::size_t i = nu + r;
        out.row_labels.push_back(tag("P", model.bus_order[i]));
        out.col_labels.push_back(tag("I", model.bus_order[i]));
        out.alpha.push_back(alpha(point.v[i], model.z(i, i), point.i[i]));
    }
    return out;
}

DominanceReport dominance_report(const ReducedJacobian& j, const powerflow::OperatingPoint& point,
                                 const thevenin::TheveninModel& model, const powerflow::ConstraintProfile& profile,
                                 CwVariant variant) {
    const std::size_t nu = j.n_u;
    const std::size_t nc = j.n_c;
    const std::size_t nred = 2 * nu + nc;
    if (j.matrix.rows() != nred || j.matrix.cols() != nred)
        throw DimensionMismatch("reduced Jacobian order does not match its block sizes");
    constexpr double inf = std::numeric_limits<double>::infinity();

    DominanceReport rep;
    rep.variant = variant;
    auto pivot_of = [&](std::size_t r) {
        if (r < nu)
            return nu + r;
        if (r < 2 * nu)
            return r - nu;
        return r;
    };
    auto bus_of = [&](std::size_t r) { return r < 2 * nu ? r % std::max<std::size_t>(nu, 1) : nu + (r - 2 * nu); };

    for (std::size_t r = 0; r < nred; ++r) {
        RowMargin m;
        m.label = r < j.row_labels.size() ? j.row_labels[r] : std::to_string(r);
        m.pivot_column = pivot_of(r);
        m.bus = j.bus_order.empty() ? 0 : j.bus_order[bus_of(r)];
        for (std::size_t k = 0; k < nred; ++k) {
            const double a = std::abs(j.matrix(r, k));
            if (k == m.pivot_column)
                m.diagonal = a;
            else
                m.offdiag += a;
        }
        m.margin = m.diagonal - m.offdiag;
        rep.rows.push_back(m);
    }

    const std::size_t n = nu + nc;
    for (std::size_t b = 0; b < n; ++b) {
        BusIndex bi;
        bi.bus = j.bus_order.empty() ? 0 : j.bus_order[b];
        bi.mode = j.bus_order.empty() ? BusMode::Unconstrained : profile.at(bi.bus).mode;
        std::vector<const RowMargin*> rows;
        if (b < nu) {
            rows = {&rep.rows[b], &rep.rows[nu + b]};
        } else {
            rows = {&rep.rows[2 * nu + (b - nu)]};
        }
        bi.margin = inf;
        for (const RowMargin* rm : rows)
            bi.margin = std::min(bi.margin, rm->margin);

        double num = 0.0;
        double den = 0.0;
        if (variant == CwVariant::RowConsistent) {
            // Both rows of an unconstrained bus carry the same magnitudes.
            bi.c_w = inf;
            for (const RowMargin* rm : rows)
                bi.c_w = std::min(bi.c_w, rm->offdiag > 0.0 ? rm->diagonal / rm->offdiag : inf);
        } else {
            require_same_order(point, model);
            num = b < nu ? std::abs(point.v[b]) : rows.front()->diagonal;
            for (std::size_t k = 0; k < n; ++k)
                if (k != b)
                    den += std::abs(model.z(b, k));
            den *= std::abs(point.i[b]);
            bi.c_w = den > 0.0 ? num / den : inf;
        }
        rep.buses.push_back(bi);
    }

    rep.system_c_w = inf;
    for (const auto& bi : rep.buses)
        rep.system_c_w = std::min(rep.system_c_w, bi.c_w);
    rep.min_margin = inf;
    for (const auto& rm : rep.rows)
        rep.min_margin = std::min(rep.min_margin, rm.margin);
    rep.dominant = rep.min_margin > 0.0;
    return rep;
}

} // namespace wirtstab::wirtinger

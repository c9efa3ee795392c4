#include "wirtstab/numerics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

namespace wirtstab::numerics {

namespace {

// Below this order the OpenMP fork/join costs more than the work.
constexpr std::size_t kParallelThreshold = 48;

double magnitude(double x) { return std::abs(x); }
double magnitude(const Complex& x) { return std::abs(x); }
double real_part(double x) { return x; }
double real_part(const Complex& x) { return x.real(); }
double conj_of(double x) { return x; }
Complex conj_of(const Complex& x) { return std::conj(x); }
bool finite(double x) { return std::isfinite(x); }
bool finite(const Complex& x) { return std::isfinite(x.real()) && std::isfinite(x.imag()); }

void require_dims(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0)
        throw DimensionMismatch("matrix dimensions must be at least 1x1");
}

template <class T>
void factor_in_place(Matrix<T>& a, std::vector<std::size_t>& perm, int& sign, Execution exec) {
    if (!a.square())
        throw DimensionMismatch("LU factorization needs a square matrix");
    const std::size_t n = a.rows();
    const double threshold = kPivotTolerance * max_abs(a);
    perm.resize(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    sign = 1;
    if (threshold == 0.0)
        throw SingularMatrix("matrix is identically zero");

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = magnitude(a(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            if (const double m = magnitude(a(i, k)); m > best) {
                best = m;
                p = i;
            }
        }
        if (best < threshold)
            throw SingularMatrix("pivot " + std::to_string(k) + " below relative tolerance");
        if (p != k) {
            std::swap_ranges(a.row(k).begin(), a.row(k).end(), a.row(p).begin());
            std::swap(perm[k], perm[p]);
            sign = -sign;
        }
        const T pivot = a(k, k);
        const auto rows_below = static_cast<std::ptrdiff_t>(n - k - 1);
        const bool parallel = exec == Execution::Parallel && n - k > kParallelThreshold;
#pragma omp parallel for schedule(static) if (parallel)
        for (std::ptrdiff_t r = 0; r < rows_below; ++r) {
            const std::size_t i = k + 1 + static_cast<std::size_t>(r);
            const T factor = a(i, k) / pivot;
            a(i, k) = factor;
            if (factor == T{})
                continue;
            for (std::size_t j = k + 1; j < n; ++j)
                a(i, j) -= factor * a(k, j);
        }
    }
}

template <class T>
void substitute(const Matrix<T>& lu, const std::vector<std::size_t>& perm, std::span<const T> b, std::span<T> x) {
    const std::size_t n = lu.rows();
    for (std::size_t i = 0; i < n; ++i) {
        T sum = b[perm[i]];
        for (std::size_t j = 0; j < i; ++j)
            sum -= lu(i, j) * x[j];
        x[i] = sum;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        T sum = x[ii];
        for (std::size_t j = ii + 1; j < n; ++j)
            sum -= lu(ii, j) * x[j];
        x[ii] = sum / lu(ii, ii);
    }
}

template <class T>
Matrix<T> multiply_impl(const Matrix<T>& a, const Matrix<T>& b, Execution exec) {
    if (a.cols() != b.rows())
        throw DimensionMismatch("matrix product dimensions disagree");
    Matrix<T> c(a.rows(), b.cols());
    const auto rows = static_cast<std::ptrdiff_t>(a.rows());
    const bool parallel = exec == Execution::Parallel && a.rows() > kParallelThreshold;
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t ri = 0; ri < rows; ++ri) {
        const auto i = static_cast<std::size_t>(ri);
        auto out = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const T aik = a(i, k);
            if (aik == T{})
                continue;
            const auto brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j)
                out[j] += aik * brow[j];
        }
    }
    return c;
}

// One-sided (Hestenes) Jacobi on the columns of `w`, which holds the
// columns of the input as rows for contiguous access.
template <class T>
RealVector jacobi_singular_values(Matrix<T> w) {
    const std::size_t n = w.rows();
    const std::size_t m = w.cols();
    const double eps = std::numeric_limits<double>::epsilon();
    const double tol = eps * static_cast<double>(std::max<std::size_t>(m, 1));

    auto dot = [&](std::size_t p, std::size_t q) {
        T s{};
        const auto wp = w.row(p);
        const auto wq = w.row(q);
        for (std::size_t k = 0; k < m; ++k)
            s += conj_of(wp[k]) * wq[k];
        return s;
    };
    // Columns that have collapsed to rounding level of the whole matrix stay
    // put; their relative orthogonality is noise and never settles.
    double fro2 = 0.0;
    for (std::size_t p = 0; p < n; ++p)
        fro2 += real_part(dot(p, p));
    const double negligible = 64.0 * eps * 64.0 * eps * fro2;

    bool converged = n < 2;
    for (int sweep = 0; sweep < kIterationCap && !converged; ++sweep) {
        converged = true;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double alpha = real_part(dot(p, p));
                const double beta = real_part(dot(q, q));
                const T gamma = dot(p, q);
                const double g = magnitude(gamma);
                if (g == 0.0 || g <= tol * std::sqrt(alpha * beta) || std::min(alpha, beta) <= negligible)
                    continue;
                converged = false;
                // Rotate column q by the phase of gamma so the pair is real.
                const T phase = gamma / g;
                const double zeta = (beta - alpha) / (2.0 * g);
                const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                auto wp = w.row(p);
                auto wq = w.row(q);
                for (std::size_t k = 0; k < m; ++k) {
                    const T xp = wp[k];
                    const T xq = conj_of(phase) * wq[k];
                    wp[k] = c * xp - s * xq;
                    wq[k] = s * xp + c * xq;
                }
            }
        }
    }
    if (!converged)
        throw NoConvergence("Jacobi SVD exceeded the sweep cap");

    RealVector sv(n);
    for (std::size_t p = 0; p < n; ++p)
        sv[p] = std::sqrt(std::max(0.0, real_part(dot(p, p))));
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

} // namespace

// ---------------------------------------------------------------- Matrix

template <class T>
Matrix<T>::Matrix(std::size_t rows, std::size_t cols, T fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    require_dims(rows, cols);
    if (!finite(fill))
        throw DimensionMismatch("matrix fill value is not finite");
}

template <class T>
Matrix<T>::Matrix(std::initializer_list<std::initializer_list<T>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
    require_dims(rows_, cols_);
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_)
            throw DimensionMismatch("ragged matrix initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
    if (!all_finite())
        throw DimensionMismatch("matrix initializer contains non-finite entries");
}

template <class T>
Matrix<T> Matrix<T>::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m(i, i) = T{1};
    return m;
}

template <class T>
Matrix<T> Matrix<T>::diagonal(std::span<const T> values) {
    Matrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        m(i, i) = values[i];
    return m;
}

template <class T>
bool Matrix<T>::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](const T& x) { return finite(x); });
}

ComplexMatrix to_complex(const RealMatrix& a) {
    ComplexMatrix out(a.rows(), a.cols());
    std::transform(a.data().begin(), a.data().end(), out.data().begin(), [](double x) { return Complex(x, 0.0); });
    return out;
}

ComplexMatrix conj(const ComplexMatrix& a) {
    ComplexMatrix out(a.rows(), a.cols());
    std::transform(a.data().begin(), a.data().end(), out.data().begin(), [](const Complex& x) { return std::conj(x); });
    return out;
}

ComplexMatrix adjoint(const ComplexMatrix& a) {
    ComplexMatrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            out(j, i) = std::conj(a(i, j));
    return out;
}

RealMatrix transpose(const RealMatrix& a) {
    RealMatrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            out(j, i) = a(i, j);
    return out;
}

RealMatrix abs(const ComplexMatrix& a) {
    RealMatrix out(a.rows(), a.cols());
    std::transform(a.data().begin(), a.data().end(), out.data().begin(), [](const Complex& x) { return std::abs(x); });
    return out;
}

template <class T>
Matrix<T> subtract(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionMismatch("matrix difference dimensions disagree");
    Matrix<T> out = a;
    for (std::size_t k = 0; k < out.data().size(); ++k)
        out.data()[k] -= b.data()[k];
    return out;
}

template <class T>
double norm_inf(const Matrix<T>& a) {
    double best = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (const T& x : a.row(i))
            s += magnitude(x);
        best = std::max(best, s);
    }
    return best;
}

template <class T>
double norm_fro(const Matrix<T>& a) {
    double s = 0.0;
    for (const T& x : a.data())
        s += magnitude(x) * magnitude(x);
    return std::sqrt(s);
}

template <class T>
double max_abs(const Matrix<T>& a) {
    double best = 0.0;
    for (const T& x : a.data())
        best = std::max(best, magnitude(x));
    return best;
}

template <class T>
double norm_inf(std::span<const T> v) {
    double best = 0.0;
    for (const T& x : v)
        best = std::max(best, magnitude(x));
    return best;
}

// ------------------------------------------------------------------- LU

template <class T>
LuFactorization<T>::LuFactorization(Matrix<T> a, Execution exec) : lu_(std::move(a)) {
    factor_in_place(lu_, perm_, sign_, exec);
}

template <class T>
std::vector<T> LuFactorization<T>::solve(std::span<const T> b) const {
    if (b.size() != order())
        throw DimensionMismatch("right-hand side length does not match matrix order");
    std::vector<T> x(order());
    substitute<T>(lu_, perm_, b, x);
    return x;
}

template <class T>
Matrix<T> LuFactorization<T>::solve_many(const Matrix<T>& b, Execution exec) const {
    if (b.rows() != order())
        throw DimensionMismatch("right-hand side rows do not match matrix order");
    const std::size_t n = order();
    // Work on columns as rows of the transposed result.
    Matrix<T> xt(b.cols(), n);
    const auto cols = static_cast<std::ptrdiff_t>(b.cols());
    const bool parallel = exec == Execution::Parallel && b.cols() > kParallelThreshold;
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t rc = 0; rc < cols; ++rc) {
        const auto c = static_cast<std::size_t>(rc);
        std::vector<T> rhs(n);
        for (std::size_t i = 0; i < n; ++i)
            rhs[i] = b(i, c);
        substitute<T>(lu_, perm_, rhs, xt.row(c));
    }
    Matrix<T> x(n, b.cols());
    for (std::size_t c = 0; c < b.cols(); ++c)
        for (std::size_t i = 0; i < n; ++i)
            x(i, c) = xt(c, i);
    return x;
}

template <class T>
T LuFactorization<T>::determinant() const noexcept {
    T d = static_cast<T>(static_cast<double>(sign_));
    for (std::size_t i = 0; i < order(); ++i)
        d *= lu_(i, i);
    return d;
}

// ------------------------------------------------------------ operations

template <class T>
Matrix<T> multiply(const Matrix<T>& a, const Matrix<T>& b) {
    return multiply_impl(a, b, Execution::Parallel);
}

template <class T>
std::vector<T> multiply(const Matrix<T>& a, std::span<const T> x) {
    if (a.cols() != x.size())
        throw DimensionMismatch("matrix-vector product dimensions disagree");
    std::vector<T> y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        T s{};
        const auto r = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j)
            s += r[j] * x[j];
        y[i] = s;
    }
    return y;
}

template <class T>
std::vector<T> lu_solve(const Matrix<T>& a, std::span<const T> b) {
    if (!a.square() || b.size() != a.rows())
        throw DimensionMismatch("lu_solve needs a square matrix and matching right-hand side");
    return LuFactorization<T>(a).solve(b);
}

template <class T>
Matrix<T> invert(const Matrix<T>& a) {
    const LuFactorization<T> lu(a);
    return lu.solve_many(Matrix<T>::identity(a.rows()));
}

template <class T>
T determinant(const Matrix<T>& a) {
    if (!a.square())
        throw DimensionMismatch("determinant needs a square matrix");
    try {
        return LuFactorization<T>(a).determinant();
    } catch (const SingularMatrix&) {
        return T{};
    }
}

template <class T>
RealVector singular_values(const Matrix<T>& a) {
    // Columns of the working matrix are the longer dimension so the
    // count of values equals min(rows, cols).
    if (a.rows() >= a.cols()) {
        Matrix<T> w(a.cols(), a.rows());
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < a.cols(); ++j)
                w(j, i) = a(i, j);
        return jacobi_singular_values(std::move(w));
    }
    Matrix<T> w(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            w(i, j) = conj_of(a(i, j));
    return jacobi_singular_values(std::move(w));
}

template <class T>
double min_singular_value(const Matrix<T>& a) {
    return singular_values(a).back();
}

ComplexVector eigenvalues(const ComplexMatrix& a) {
    if (!a.square())
        throw DimensionMismatch("eigenvalues need a square matrix");
    const auto n = static_cast<Eigen::Index>(a.rows());
    Eigen::MatrixXcd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            m(i, j) = a(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver;
    solver.setMaxIterations(kIterationCap);
    solver.compute(m, false);
    if (solver.info() != Eigen::Success)
        throw NoConvergence("complex eigenvalue iteration did not converge");
    const auto& ev = solver.eigenvalues();
    return ComplexVector(ev.data(), ev.data() + ev.size());
}

double max_eigenvalue_magnitude(const ComplexMatrix& a) {
    if (max_abs(a) == 0.0) {
        if (!a.square())
            throw DimensionMismatch("eigenvalues need a square matrix");
        return 0.0;
    }
    double best = 0.0;
    for (const Complex& l : eigenvalues(a))
        best = std::max(best, std::abs(l));
    return best;
}

namespace serial {

template <class T>
Matrix<T> multiply(const Matrix<T>& a, const Matrix<T>& b) {
    return multiply_impl(a, b, Execution::Serial);
}

template <class T>
LuFactorization<T> lu_factor(Matrix<T> a) {
    return LuFactorization<T>(std::move(a), Execution::Serial);
}

template <class T>
Matrix<T> solve_many(const LuFactorization<T>& lu, const Matrix<T>& b) {
    return lu.solve_many(b, Execution::Serial);
}

template <class T>
Matrix<T> invert(const Matrix<T>& a) {
    const auto lu = lu_factor(a);
    return lu.solve_many(Matrix<T>::identity(a.rows()), Execution::Serial);
}

} // namespace serial

#define WIRTSTAB_INSTANTIATE(T)                                                                                        \
    template class Matrix<T>;                                                                                          \
    template class LuFactorization<T>;                                                                                 \
    template Matrix<T> subtract(const Matrix<T>&, const Matrix<T>&);                                                   \
    template double norm_inf(const Matrix<T>&);                                                                        \
    template double norm_fro(const Matrix<T>&);                                                                        \
    template double max_abs(const Matrix<T>&);                                                                         \
    template double norm_inf(std::span<const T>);                                                                      \
    template Matrix<T> multiply(const Matrix<T>&, const Matrix<T>&);                                                   \
    template std::vector<T> multiply(const Matrix<T>&, std::span<const T>);                                            \
    template std::vector<T> lu_solve(const Matrix<T>&, std::span<const T>);                                            \
    template Matrix<T> invert(const Matrix<T>&);                                                                       \
    template T determinant(const Matrix<T>&);                                                                          \
    template RealVector singular_values(const Matrix<T>&);                                                             \
    template double min_singular_value(const Matrix<T>&);                                                              \
    template Matrix<T> serial::multiply(const Matrix<T>&, const Matrix<T>&);                                           \
    template LuFactorization<T> serial::lu_factor(Matrix<T>);                                                          \
    template Matrix<T> serial::solve_many(const LuFactorization<T>&, const Matrix<T>&);                                \
    template Matrix<T> serial::invert(const Matrix<T>&);

WIRTSTAB_INSTANTIATE(double)
WIRTSTAB_INSTANTIATE(Complex)

#undef WIRTSTAB_INSTANTIATE

} // namespace wirtstab::numerics

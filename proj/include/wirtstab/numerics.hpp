#pragma once

// Dense real/complex linear algebra used throughout the toolkit.
//
// The default entry points in `wirtstab::numerics` run their data-parallel
// loops under OpenMP. `wirtstab::numerics::serial` keeps plain single-threaded
// versions of the same kernels; tests check the two agree bit for bit and the
// benchmark target compares their timings. Parallel loops only ever split
// independent outputs (rows or columns), never a reduction, so results do not
// depend on the thread count.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "wirtstab/errors.hpp"

namespace wirtstab::numerics {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;
using RealVector = std::vector<double>;

/// Relative pivot threshold used by the LU kernels.
inline constexpr double kPivotTolerance = 1e-13;
/// Iteration cap shared by the SVD and eigenvalue routines.
inline constexpr int kIterationCap = 10000;

/// Dense row-major matrix with at least one row and one column.
template <class T>
class Matrix {
  public:
    using value_type = T;

    Matrix(std::size_t rows, std::size_t cols, T fill = T{});
    Matrix(std::initializer_list<std::initializer_list<T>> rows);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const T> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    T& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<T> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const T> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

    bool all_finite() const noexcept;

    bool operator==(const Matrix&) const = default;

  private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<T> data_;
};

using ComplexMatrix = Matrix<Complex>;
using RealMatrix = Matrix<double>;

ComplexMatrix to_complex(const RealMatrix& a);
ComplexMatrix conj(const ComplexMatrix& a);
ComplexMatrix adjoint(const ComplexMatrix& a);
RealMatrix transpose(const RealMatrix& a);
/// Elementwise modulus.
RealMatrix abs(const ComplexMatrix& a);

template <class T>
Matrix<T> subtract(const Matrix<T>& a, const Matrix<T>& b);

template <class T>
double norm_inf(const Matrix<T>& a); // max absolute row sum
template <class T>
double norm_fro(const Matrix<T>& a);
template <class T>
double max_abs(const Matrix<T>& a);
template <class T>
double norm_inf(std::span<const T> v);

/// Selects the OpenMP kernels or the single-threaded reference kernels.
enum class Execution { Parallel, Serial };

/// LU factorization with partial pivoting, P·A = L·U stored in place.
template <class T>
class LuFactorization {
  public:
    /// Throws SingularMatrix when a pivot falls below kPivotTolerance·max|a_ij|.
    explicit LuFactorization(Matrix<T> a, Execution exec = Execution::Parallel);

    std::size_t order() const noexcept { return lu_.rows(); }
    std::vector<T> solve(std::span<const T> b) const;
    /// Solves for every column of `b`; columns are independent.
    Matrix<T> solve_many(const Matrix<T>& b, Execution exec = Execution::Parallel) const;
    T determinant() const noexcept;

    bool operator==(const LuFactorization&) const = default;

  private:
    Matrix<T> lu_;
    std::vector<std::size_t> perm_;
    int sign_ = 1;
};

template <class T>
Matrix<T> multiply(const Matrix<T>& a, const Matrix<T>& b);
template <class T>
std::vector<T> multiply(const Matrix<T>& a, std::span<const T> x);

template <class T>
std::vector<T> lu_solve(const Matrix<T>& a, std::span<const T> b);
template <class T>
Matrix<T> invert(const Matrix<T>& a);
template <class T>
T determinant(const Matrix<T>& a);

/// All singular values in descending order (one-sided Jacobi).
template <class T>
RealVector singular_values(const Matrix<T>& a);
template <class T>
double min_singular_value(const Matrix<T>& a);

/// Spectral radius max|λ_i| of a square complex matrix.
double max_eigenvalue_magnitude(const ComplexMatrix& a);
/// Eigenvalues of a square complex matrix (unordered).
ComplexVector eigenvalues(const ComplexMatrix& a);

namespace serial {

template <class T>
Matrix<T> multiply(const Matrix<T>& a, const Matrix<T>& b);
template <class T>
LuFactorization<T> lu_factor(Matrix<T> a);
template <class T>
Matrix<T> solve_many(const LuFactorization<T>& lu, const Matrix<T>& b);
template <class T>
Matrix<T> invert(const Matrix<T>& a);

} // namespace serial

} // namespace wirtstab::numerics

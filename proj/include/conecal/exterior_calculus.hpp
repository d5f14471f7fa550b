#pragma once

#include "conecal/cone_geometry.hpp"

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace conecal {

/// Strictly increasing tuple of 0-based coordinate indices, stored as a bit set.
class MultiIndex {
  public:
    MultiIndex() = default;

    /// Throws std::invalid_argument unless the indices are strictly increasing.
    static MultiIndex from_sorted(std::span<const int> indices);
    static MultiIndex from_sorted(std::initializer_list<int> indices);
    /// (0, 1, ..., n-1)
    static MultiIndex full(int n);

    /// Sorts an arbitrary index tuple by insertion sort and reports the parity
    /// of the permutation. Returns nullopt when an index repeats.
    static std::optional<std::pair<int, MultiIndex>> canonicalize(std::span<const int> tuple);

    int degree() const;
    bool contains(int i) const { return (bits_ >> i) & 1u; }
    bool overlaps(MultiIndex other) const { return (bits_ & other.bits_) != 0; }
    std::vector<int> indices() const;
    MultiIndex without(int i) const;
    MultiIndex complement(int n) const;
    std::uint32_t bits() const { return bits_; }

    friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;

  private:
    explicit MultiIndex(std::uint32_t bits) : bits_(bits) {}
    std::uint32_t bits_ = 0;
};

/// All strictly increasing multi-indices of length k in [0, n).
std::vector<MultiIndex> basis_indices(int n, int k);

/// Pointwise alternating k-form on R^n: sum of coeff * dx_alpha.
class KForm {
  public:
    KForm(int n, int k);

    static KForm scalar(int n, double value);
    static KForm dx(int n, int i, double coeff = 1.0);
    static KForm basis(int n, MultiIndex alpha, double coeff = 1.0);

    int n() const { return n_; }
    int degree() const { return k_; }
    const std::map<MultiIndex, double>& terms() const { return coeffs_; }

    double coeff(MultiIndex alpha) const;
    /// Adds value to the coefficient of dx_alpha.
    void add(MultiIndex alpha, double value);

    KForm& operator+=(const KForm& other);
    KForm& operator-=(const KForm& other);
    KForm& operator*=(double s);

    /// max |a_alpha - b_alpha| over the union of supports.
    friend double max_abs_diff(const KForm& a, const KForm& b);
    double max_abs_coeff() const;

  private:
    int n_;
    int k_;
    std::map<MultiIndex, double> coeffs_;
};

KForm operator+(KForm a, const KForm& b);
KForm operator-(KForm a, const KForm& b);
KForm operator*(double s, KForm a);

/// Volume form sqrt(det g) dx_1 ^ ... ^ dx_n at one point.
struct Orientation {
    double volume_density = 1.0;

    static Orientation from_metric(const MetricAtPoint& m);
    KForm volume_form(int n) const;
};

/// Builds g^{-1} and det g from a symmetric positive definite g.
MetricAtPoint metric_from_matrix(const Matrix& g);

KForm wedge(const KForm& a, const KForm& b);

/// <dx_alpha, dx_beta>_g = det(g^{-1}[alpha, beta]).
double basis_inner(MultiIndex alpha, MultiIndex beta, const MetricAtPoint& m);
double form_inner(const KForm& a, const KForm& b, const MetricAtPoint& m);
double form_norm(const KForm& a, const MetricAtPoint& m);

/// Solves a ^ (*psi) = <a, psi>_g nu against the basis: for every dx_alpha the
/// coefficient of dx_{complement(alpha)} is read off the wedge with nu.
KForm hodge_star(const KForm& a, const MetricAtPoint& m, const Orientation& o);

KForm flat(const Vector& v, const MetricAtPoint& m);
Vector sharp(const KForm& a, const MetricAtPoint& m);
double vector_norm(const Vector& v, const MetricAtPoint& m);

KForm interior_product(const Vector& v, const KForm& a);

using FormField = std::function<KForm(const BasePoint&)>;
using VectorField = std::function<Vector(const BasePoint&)>;
using MetricField = std::function<MetricAtPoint(const BasePoint&)>;

/// 1e-4 * max(1, rho), clamped to a quarter of the distance to {r = 0}.
double default_step(const BasePoint& x);

/// Central-difference d: sum_i dx_i ^ (F(x + h e_i) - F(x - h e_i)) / 2h.
/// Throws DomainError unless 0 < 2 step < r(x).
KForm exterior_derivative_numeric(const FormField& field, const BasePoint& x, double step);

/// (1/sqrt(det g)) sum_i d_i(sqrt(det g) X_i) by central differences, with X
/// given by its coefficients in the coordinate frame.
double divergence_coords(const VectorField& field, const MetricField& metric, const BasePoint& x,
                         double step);

}  // namespace conecal

#include "conecal/exterior_calculus.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace conecal {

namespace {

void check_dim(int n)
{
    if (n < 1 || n > 31) {
        throw std::invalid_argument("exterior calculus supports 1 <= n <= 31, got " +
                                    std::to_string(n));
    }
}

double small_det(const Matrix& a)
{
    switch (a.rows()) {
    case 0: return 1.0;
    case 1: return a(0, 0);
    case 2: return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    default: return a.partialPivLu().determinant();
    }
}

}  // namespace

MultiIndex MultiIndex::from_sorted(std::span<const int> indices)
{
    std::uint32_t bits = 0;
    int prev = -1;
    for (int i : indices) {
        if (i <= prev || i > 31) {
            throw std::invalid_argument("MultiIndex: indices must be strictly increasing in [0, 31]");
        }
        bits |= 1u << i;
        prev = i;
    }
    return MultiIndex(bits);
}

MultiIndex MultiIndex::from_sorted(std::initializer_list<int> indices)
{
    return from_sorted(std::span<const int>(indices.begin(), indices.size()));
}

MultiIndex MultiIndex::full(int n)
{
    check_dim(n);
    return MultiIndex(n == 32 ? ~0u : ((1u << n) - 1u));
}

std::optional<std::pair<int, MultiIndex>> MultiIndex::canonicalize(std::span<const int> tuple)
{
    std::vector<int> work(tuple.begin(), tuple.end());
    int swaps = 0;
    for (std::size_t i = 1; i < work.size(); ++i) {
        for (std::size_t j = i; j > 0 && work[j - 1] >= work[j]; --j) {
            if (work[j - 1] == work[j]) {
                return std::nullopt;
            }
            std::swap(work[j - 1], work[j]);
            ++swaps;
        }
    }
    return std::make_pair(swaps % 2 == 0 ? 1 : -1, from_sorted(work));
}

int MultiIndex::degree() const
{
    return std::popcount(bits_);
}

std::vector<int> MultiIndex::indices() const
{
    std::vector<int> out;
    out.reserve(degree());
    for (std::uint32_t b = bits_; b != 0; b &= b - 1) {
        out.push_back(std::countr_zero(b));
    }
    return out;
}

MultiIndex MultiIndex::without(int i) const
{
    return MultiIndex(bits_ & ~(1u << i));
}

MultiIndex MultiIndex::complement(int n) const
{
    return MultiIndex(full(n).bits_ & ~bits_);
}

std::vector<MultiIndex> basis_indices(int n, int k)
{
    check_dim(n);
    if (k < 0 || k > n) {
        throw std::invalid_argument("basis_indices: degree out of range");
    }
    std::vector<MultiIndex> out;
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) {
        idx[i] = i;
    }
    while (true) {
        out.push_back(MultiIndex::from_sorted(idx));
        int pos = k - 1;
        while (pos >= 0 && idx[pos] == n - k + pos) {
            --pos;
        }
        if (pos < 0) {
            break;
        }
        ++idx[pos];
        for (int j = pos + 1; j < k; ++j) {
            idx[j] = idx[j - 1] + 1;
        }
    }
    return out;
}

KForm::KForm(int n, int k) : n_(n), k_(k)
{
    check_dim(n);
    if (k < 0 || k > n) {
        throw std::invalid_argument("KForm: degree " + std::to_string(k) +
                                    " out of range for n = " + std::to_string(n));
    }
}

KForm KForm::scalar(int n, double value)
{
    KForm f(n, 0);
    f.add(MultiIndex{}, value);
    return f;
}

KForm KForm::dx(int n, int i, double coeff)
{
    KForm f(n, 1);
    f.add(MultiIndex::from_sorted({i}), coeff);
    return f;
}

KForm KForm::basis(int n, MultiIndex alpha, double coeff)
{
    KForm f(n, alpha.degree());
    f.add(alpha, coeff);
    return f;
}

double KForm::coeff(MultiIndex alpha) const
{
    const auto it = coeffs_.find(alpha);
    return it == coeffs_.end() ? 0.0 : it->second;
}

void KForm::add(MultiIndex alpha, double value)
{
    if (alpha.degree() != k_ || (alpha.bits() >> n_) != 0) {
        throw std::invalid_argument("KForm::add: multi-index does not match degree/dimension");
    }
    if (value == 0.0) {
        return;
    }
    coeffs_[alpha] += value;
}

KForm& KForm::operator+=(const KForm& other)
{
    if (other.n_ != n_ || other.k_ != k_) {
        throw std::invalid_argument("KForm: adding forms of different type");
    }
    for (const auto& [alpha, c] : other.coeffs_) {
        coeffs_[alpha] += c;
    }
    return *this;
}

KForm& KForm::operator-=(const KForm& other)
{
    if (other.n_ != n_ || other.k_ != k_) {
        throw std::invalid_argument("KForm: subtracting forms of different type");
    }
    for (const auto& [alpha, c] : other.coeffs_) {
        coeffs_[alpha] -= c;
    }
    return *this;
}

KForm& KForm::operator*=(double s)
{
    for (auto& entry : coeffs_) {
        entry.second *= s;
    }
    return *this;
}

double max_abs_diff(const KForm& a, const KForm& b)
{
    if (a.n_ != b.n_ || a.k_ != b.k_) {
        throw std::invalid_argument("max_abs_diff: forms of different type");
    }
    double worst = 0.0;
    for (const auto& [alpha, c] : a.coeffs_) {
        worst = std::max(worst, std::abs(c - b.coeff(alpha)));
    }
    for (const auto& [alpha, c] : b.coeffs_) {
        if (!a.coeffs_.contains(alpha)) {
            worst = std::max(worst, std::abs(c));
        }
    }
    return worst;
}

double KForm::max_abs_coeff() const
{
    double worst = 0.0;
    for (const auto& entry : coeffs_) {
        worst = std::max(worst, std::abs(entry.second));
    }
    return worst;
}

KForm operator+(KForm a, const KForm& b)
{
    a += b;
    return a;
}

KForm operator-(KForm a, const KForm& b)
{
    a -= b;
    return a;
}

KForm operator*(double s, KForm a)
{
    a *= s;
    return a;
}

Orientation Orientation::from_metric(const MetricAtPoint& m)
{
    if (!(m.det_g > 0.0)) {
        throw std::invalid_argument("Orientation: metric determinant must be positive");
    }
    return Orientation{std::sqrt(m.det_g)};
}

KForm Orientation::volume_form(int n) const
{
    return KForm::basis(n, MultiIndex::full(n), volume_density);
}

MetricAtPoint metric_from_matrix(const Matrix& g)
{
    if (g.rows() != g.cols()) {
        throw std::invalid_argument("metric_from_matrix: matrix must be square");
    }
    MetricAtPoint m;
    m.g = g;
    const auto lu = g.partialPivLu();
    m.g_inv = lu.inverse();
    m.det_g = lu.determinant();
    m.det_g_closed = m.det_g;
    return m;
}

KForm wedge(const KForm& a, const KForm& b)
{
    if (a.n() != b.n()) {
        throw std::invalid_argument("wedge: forms live in different dimensions");
    }
    if (a.degree() + b.degree() > a.n()) {
        throw std::invalid_argument("wedge: degree overflow");
    }
    KForm out(a.n(), a.degree() + b.degree());
    std::vector<int> tuple;
    for (const auto& [alpha, ca] : a.terms()) {
        for (const auto& [beta, cb] : b.terms()) {
            if (alpha.overlaps(beta)) {
                continue;
            }
            tuple = alpha.indices();
            const auto tail = beta.indices();
            tuple.insert(tuple.end(), tail.begin(), tail.end());
            const auto canon = MultiIndex::canonicalize(tuple);
            out.add(canon->second, canon->first * ca * cb);
        }
    }
    return out;
}

double basis_inner(MultiIndex alpha, MultiIndex beta, const MetricAtPoint& m)
{
    const int k = alpha.degree();
    if (beta.degree() != k) {
        throw std::invalid_argument("basis_inner: degree mismatch");
    }
    const auto rows = alpha.indices();
    const auto cols = beta.indices();
    Matrix sub(k, k);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            sub(i, j) = m.g_inv(rows[i], cols[j]);
        }
    }
    return small_det(sub);
}

double form_inner(const KForm& a, const KForm& b, const MetricAtPoint& m)
{
    if (a.degree() != b.degree() || a.n() != b.n()) {
        throw std::invalid_argument("form_inner: degree mismatch");
    }
    double sum = 0.0;
    for (const auto& [alpha, ca] : a.terms()) {
        for (const auto& [beta, cb] : b.terms()) {
            sum += ca * cb * basis_inner(alpha, beta, m);
        }
    }
    return sum;
}

double form_norm(const KForm& a, const MetricAtPoint& m)
{
    return std::sqrt(std::max(0.0, form_inner(a, a, m)));
}

namespace {

// Sign of dx_alpha ^ dx_beta against dx of the sorted union, for disjoint alpha, beta:
// the parity of pairs (i in alpha, j in beta) with i > j.
double concat_sign(MultiIndex alpha, MultiIndex beta)
{
    int inversions = 0;
    for (int j : beta.indices()) {
        inversions += std::popcount(alpha.bits() >> (j + 1));
    }
    return inversions % 2 == 0 ? 1.0 : -1.0;
}

}  // namespace

KForm hodge_star(const KForm& a, const MetricAtPoint& m, const Orientation& o)
{
    const int n = a.n();
    const int k = a.degree();
    KForm out(n, n - k);
    for (MultiIndex alpha : basis_indices(n, k)) {
        double pairing = 0.0;
        for (const auto& [beta, cb] : a.terms()) {
            pairing += cb * basis_inner(alpha, beta, m);
        }
        if (pairing == 0.0) {
            continue;
        }
        // dx_alpha ^ (c dx_comp) = c s dx_top must equal pairing * vol dx_top.
        const MultiIndex comp = alpha.complement(n);
        out.add(comp, pairing * o.volume_density * concat_sign(alpha, comp));
    }
    return out;
}

KForm flat(const Vector& v, const MetricAtPoint& m)
{
    const auto n = static_cast<int>(v.size());
    const Vector lowered = m.g * v;
    KForm out(n, 1);
    for (int j = 0; j < n; ++j) {
        out.add(MultiIndex::from_sorted({j}), lowered[j]);
    }
    return out;
}

Vector sharp(const KForm& a, const MetricAtPoint& m)
{
    if (a.degree() != 1) {
        throw std::invalid_argument("sharp: expects a 1-form");
    }
    Vector coeffs = Vector::Zero(a.n());
    for (const auto& [alpha, c] : a.terms()) {
        coeffs[std::countr_zero(alpha.bits())] = c;
    }
    return m.g_inv * coeffs;
}

double vector_norm(const Vector& v, const MetricAtPoint& m)
{
    return std::sqrt(std::max(0.0, v.dot(m.g * v)));
}

KForm interior_product(const Vector& v, const KForm& a)
{
    if (a.degree() < 1) {
        throw std::invalid_argument("interior_product: expects degree >= 1");
    }
    KForm out(a.n(), a.degree() - 1);
    for (const auto& [alpha, c] : a.terms()) {
        const auto idx = alpha.indices();
        for (std::size_t p = 0; p < idx.size(); ++p) {
            const double sign = (p % 2 == 0) ? 1.0 : -1.0;
            out.add(alpha.without(idx[p]), sign * v[idx[p]] * c);
        }
    }
    return out;
}

double default_step(const BasePoint& x)
{
    return std::min(1e-4 * std::max(1.0, x.rho()), 0.25 * x.r());
}

namespace {

void check_stencil(const BasePoint& x, double step)
{
    if (!(step > 0.0)) {
        throw std::invalid_argument("finite-difference step must be positive");
    }
    if (!(2.0 * step < x.r())) {
        throw DomainError("step too large for domain: stencil reaches the plane x' = 0");
    }
}

}  // namespace

KForm exterior_derivative_numeric(const FormField& field, const BasePoint& x, double step)
{
    check_stencil(x, step);
    const int n = x.dim();
    std::optional<KForm> out;
    for (int i = 0; i < n; ++i) {
        KForm diff = field(x.shifted(i, step)) - field(x.shifted(i, -step));
        diff *= 1.0 / (2.0 * step);
        if (!out) {
            if (diff.degree() >= n) {
                throw std::invalid_argument("exterior derivative of a top-degree form");
            }
            out.emplace(n, diff.degree() + 1);
        }
        *out += wedge(KForm::dx(n, i), diff);
    }
    return *out;
}

double divergence_coords(const VectorField& field, const MetricField& metric, const BasePoint& x,
                         double step)
{
    check_stencil(x, step);
    const int n = x.dim();
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const BasePoint plus = x.shifted(i, step);
        const BasePoint minus = x.shifted(i, -step);
        const double fp = std::sqrt(metric(plus).det_g) * field(plus)[i];
        const double fm = std::sqrt(metric(minus).det_g) * field(minus)[i];
        sum += (fp - fm) / (2.0 * step);
    }
    return sum / std::sqrt(metric(x).det_g);
}

}  // namespace conecal

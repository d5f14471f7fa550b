#include "conecal/cone_geometry.hpp"

#include <cmath>
#include <utility>

namespace conecal {

ConeParams::ConeParams(int n, double lambda) : n_(n), lambda_(lambda)
{
    if (n < 2 || n > kMaxBaseDim) {
        throw std::invalid_argument("ConeParams: n must lie in [2, " +
                                    std::to_string(kMaxBaseDim) + "], got " + std::to_string(n));
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("ConeParams: lambda must be positive and finite");
    }
}

BasePoint::BasePoint(Vector x) : x_(std::move(x))
{
    if (x_.size() < 2) {
        throw std::invalid_argument("BasePoint: dimension must be at least 2");
    }
    r_ = x_.tail(x_.size() - 1).norm();
    rho_ = x_.norm();
    if (rho_ == 0.0) {
        throw DomainError("BasePoint: the origin is excluded from M");
    }
}

double BasePoint::theta() const
{
    if (r_ == 0.0) {
        throw DomainError("theta is undefined on the plane x' = 0");
    }
    return std::atan(x_[0] / r_);
}

double BasePoint::u() const
{
    if (r_ == 0.0) {
        throw DomainError("u is undefined on the plane x' = 0");
    }
    return x_[0] / r_;
}

BasePoint BasePoint::shifted(int coord, double delta) const
{
    Vector y = x_;
    y[coord] += delta;
    return BasePoint(std::move(y));
}

Vector AmbientPoint::stacked() const
{
    Vector v(x.size() + 1);
    v.head(x.size()) = x;
    v[x.size()] = t;
    return v;
}

std::string_view to_string(Region region)
{
    switch (region) {
    case Region::origin: return "origin";
    case Region::exterior: return "exterior";
    case Region::interior: return "interior";
    case Region::interior_primed: return "interior_primed";
    case Region::axis2plane: return "axis2plane";
    case Region::surface: return "surface";
    case Region::surface_primed: return "surface_primed";
    }
    return "unknown";
}

Region classify(const AmbientPoint& p, const ConeParams& cone, double band)
{
    if (p.dim() != cone.n()) {
        throw std::invalid_argument("classify: point dimension does not match the cone");
    }
    const double rho = p.x.norm();
    const double r = p.x.tail(p.x.size() - 1).norm();
    const double gap = p.t - cone.lambda() * rho;
    const bool on_surface =
        band == 0.0 ? gap == 0.0 : std::abs(gap) <= band * std::max(1.0, rho);

    if (rho == 0.0 && (p.t == 0.0 || on_surface)) {
        return Region::origin;
    }
    if (on_surface) {
        return r > 0.0 ? Region::surface_primed : Region::surface;
    }
    if (gap > 0.0) {
        if (rho == 0.0) {
            return Region::axis2plane;
        }
        return r > 0.0 ? Region::interior_primed : Region::interior;
    }
    return Region::exterior;
}

bool in_open_cone(Region region)
{
    return region == Region::interior || region == Region::interior_primed ||
           region == Region::axis2plane;
}

bool on_cone_surface(Region region)
{
    return region == Region::surface || region == Region::surface_primed;
}

MetricAtPoint metric_at(const BasePoint& x, const ConeParams& cone)
{
    if (x.dim() != cone.n()) {
        throw std::invalid_argument("metric_at: point dimension does not match the cone");
    }
    const int n = cone.n();
    const double lsq = cone.lambda_sq();
    const Vector dir = x.x() / x.rho();

    MetricAtPoint m;
    m.g = Matrix::Identity(n, n) + lsq * dir * dir.transpose();
    m.g_inv = Matrix::Identity(n, n) - (lsq / (1.0 + lsq)) * dir * dir.transpose();
    m.det_g = m.g.partialPivLu().determinant();
    m.det_g_closed = 1.0 + lsq;
    return m;
}

IsometryFrame isometry_frame(const BasePoint& x, const ConeParams& cone)
{
    const int n = cone.n();
    if (x.dim() != n) {
        throw std::invalid_argument("isometry_frame: point dimension does not match the cone");
    }
    IsometryFrame f;
    f.surface_point.resize(n + 1);
    f.surface_point.head(n) = x.x();
    f.surface_point[n] = cone.lambda() * x.rho();

    f.frame = Matrix::Zero(n + 1, n);
    for (int i = 0; i < n; ++i) {
        f.frame(i, i) = 1.0;
        f.frame(n, i) = cone.lambda() * x.x()[i] / x.rho();
    }
    return f;
}

double frame_volume_with_vertical(const IsometryFrame& frame)
{
    const auto dim = frame.frame.rows();
    Matrix full(dim, dim);
    full.leftCols(dim - 1) = frame.frame;
    full.col(dim - 1).setZero();
    full(dim - 1, dim - 1) = 1.0;
    return std::abs(full.partialPivLu().determinant());
}

Vector surface_normal(const AmbientPoint& p, const ConeParams& cone)
{
    const Region region = classify(p, cone, kSampledSurfaceBand);
    if (region != Region::surface_primed && region != Region::surface) {
        throw DomainError("surface_normal: point is not on S_lambda minus the vertex");
    }
    const int n = cone.n();
    const double rho = p.x.norm();
    Vector nu(n + 1);
    nu.head(n) = -cone.lambda() * p.x / rho;
    nu[n] = 1.0;
    return nu / std::sqrt(cone.one_plus_lambda_sq());
}

BasePoint base_of(const AmbientPoint& p)
{
    return BasePoint(p.x);
}

}  // namespace conecal

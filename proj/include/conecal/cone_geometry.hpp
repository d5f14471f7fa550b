#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>

namespace conecal {

/// Largest supported base dimension n (ambient space is R^{n+1}).
inline constexpr int kMaxBaseDim = 11;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxBaseDim + 1, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxBaseDim + 1,
                             kMaxBaseDim + 1>;

/// Raised when a point lies outside the set where a quantity is defined
/// (origin, the 2-plane x' = 0, outside the closed cone, oversized stencils).
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// The circular cone {(x,t) in R^{n+1} : t > lambda |x|}.
class ConeParams {
  public:
    ConeParams(int n, double lambda);

    int n() const { return n_; }
    double lambda() const { return lambda_; }
    double lambda_sq() const { return lambda_ * lambda_; }
    double one_plus_lambda_sq() const { return 1.0 + lambda_ * lambda_; }

  private:
    int n_;
    double lambda_;
};

/// A point of M = R^n \ {0}. Caches r = |x'| and rho = |x|.
class BasePoint {
  public:
    explicit BasePoint(Vector x);

    const Vector& x() const { return x_; }
    int dim() const { return static_cast<int>(x_.size()); }
    double x1() const { return x_[0]; }
    double r() const { return r_; }
    double rho() const { return rho_; }
    bool on_axis_plane() const { return r_ == 0.0; }

    /// arctan(x1 / r); throws DomainError on the plane x' = 0.
    double theta() const;
    /// x1 / r; throws DomainError on the plane x' = 0.
    double u() const;

    BasePoint shifted(int coord, double delta) const;

  private:
    Vector x_;
    double r_;
    double rho_;
};

struct AmbientPoint {
    Vector x;
    double t = 0.0;

    int dim() const { return static_cast<int>(x.size()); }
    Vector stacked() const;
};

enum class Region {
    origin,
    exterior,
    interior,          // in the open cone, on the 2-plane x' = 0, x != 0
    interior_primed,   // in the open cone, x' != 0
    axis2plane,        // the cone axis x = 0, t > 0 (in the open cone, no base point)
    surface,           // on S_lambda with x' = 0
    surface_primed,    // on S_lambda with x' != 0
};

std::string_view to_string(Region region);

/// Half-width of the membership band used for sampled surface points,
/// relative to max(1, |x|).
inline constexpr double kSampledSurfaceBand = 1e-12;

/// Finest region tag of p. With band == 0 surface membership is exact;
/// otherwise |t - lambda|x|| <= band * max(1, |x|) counts as on the surface.
Region classify(const AmbientPoint& p, const ConeParams& cone, double band = 0.0);

bool in_open_cone(Region region);
bool on_cone_surface(Region region);

struct MetricAtPoint {
    Matrix g;
    Matrix g_inv;
    double det_g = 0.0;         // LU factorization of g
    double det_g_closed = 0.0;  // 1 + lambda^2 for the cone metric
};

/// Pull-back of the Euclidean metric through x -> (x, lambda|x|).
MetricAtPoint metric_at(const BasePoint& x, const ConeParams& cone);

struct IsometryFrame {
    Vector surface_point;  // (x, lambda |x|)
    Matrix frame;          // (n+1) x n, column i is d_i = e_i + lambda x_i/|x| e_t
};

IsometryFrame isometry_frame(const BasePoint& x, const ConeParams& cone);

/// |d_1 ^ ... ^ d_n ^ e_t| computed as a determinant in R^{n+1}.
double frame_volume_with_vertical(const IsometryFrame& frame);

/// Inward unit normal (-lambda x/|x|, 1)/sqrt(1+lambda^2). Defined on all of
/// S_lambda except the vertex, including the trace of the plane x' = 0.
Vector surface_normal(const AmbientPoint& p, const ConeParams& cone);

/// Maps (x, t) to its base point; throws DomainError if x = 0.
BasePoint base_of(const AmbientPoint& p);

}  // namespace conecal

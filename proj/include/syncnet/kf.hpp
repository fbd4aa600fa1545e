#ifndef SYNCNET_KF_HPP
#define SYNCNET_KF_HPP

#include "syncnet/ptp.hpp"

namespace syncnet {

struct Vec2 {
    double offset = 0.0;  // ns
    double drift = 0.0;   // dimensionless
};

/// Row-major 2x2 matrix.
struct Mat2 {
    double a00 = 0.0, a01 = 0.0;
    double a10 = 0.0, a11 = 0.0;

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static Mat2 diagonal(double d0, double d1) { return {d0, 0.0, 0.0, d1}; }

    Mat2 transposed() const { return {a00, a10, a01, a11}; }
    double determinant() const { return a00 * a11 - a01 * a10; }
    double trace() const { return a00 + a11; }
    /// Closed-form inverse; throws EstimationError when |det| is negligible
    /// relative to the diagonal product.
    Mat2 inverse() const;
    bool is_symmetric(double rel_tol = 1e-12) const;
    /// Smallest eigenvalue of the symmetric part.
    double min_eigenvalue() const;
};

Mat2 operator+(const Mat2& x, const Mat2& y);
Mat2 operator-(const Mat2& x, const Mat2& y);
Mat2 operator*(const Mat2& x, const Mat2& y);
Vec2 operator*(const Mat2& m, const Vec2& v);
Vec2 operator+(const Vec2& x, const Vec2& y);
Vec2 operator-(const Vec2& x, const Vec2& y);

struct KfConfig {
    double delta_t = 1e9;                         // ns between exchange rounds
    double sigma2 = 32.0;                         // ns^2, from training
    Mat2 q{};                                     // process noise, zero by default
    Mat2 p0 = Mat2::diagonal(1e6, 1e-6);          // diffuse initial covariance

    /// Throws ConfigError unless delta_t > 0, sigma2 > 0 and q is symmetric PSD.
    void validate() const;
};

/// Filter state for the offset/drift of a KF-node relative to its parent.
/// `round` counts processed measurements.
struct KfState {
    Vec2 x{};
    Mat2 p{};
    int round = 0;
};

KfState kf_initial_state(const KfConfig& cfg);

/// sigma2 * [[1, 1/dT], [1/dT, 2/dT^2]].
Mat2 kf_measurement_cov(const KfConfig& cfg);

/// x <- A x, P <- A P A^T + Q with A = [[1, dT], [0, 1]].
KfState kf_predict(const KfState& s, const KfConfig& cfg);

/// Full update with H = I: K = P (P + R)^-1, x += K (z - x), P = (I - K) P.
KfState kf_update(const KfState& s, const Vec2& z, const KfConfig& cfg);

/// Scalar update on the offset only, using R(0,0). Used for the first round,
/// where no drift measurement exists yet.
KfState kf_update_offset(const KfState& s, double measured, const KfConfig& cfg);

/// One filter iteration for a new exchange round. Without a previous round
/// (the first call) the state is updated with the measured offset only;
/// afterwards it predicts and applies the full [offset; drift] update. With
/// q = 0 the two steps are fused in information form, which gives the same
/// posterior without forming the predicted covariance.
KfState kf_step(const KfState& s, const TimestampQuad& quad_k, const TimestampQuad* quad_prev,
                const KfConfig& cfg);

}  // namespace syncnet

#endif  // SYNCNET_KF_HPP

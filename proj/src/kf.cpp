#include "syncnet/kf.hpp"

#include <algorithm>
#include <cmath>

#include "syncnet/errors.hpp"

namespace syncnet {

Mat2 operator+(const Mat2& x, const Mat2& y) {
    return {x.a00 + y.a00, x.a01 + y.a01, x.a10 + y.a10, x.a11 + y.a11};
}

Mat2 operator-(const Mat2& x, const Mat2& y) {
    return {x.a00 - y.a00, x.a01 - y.a01, x.a10 - y.a10, x.a11 - y.a11};
}

Mat2 operator*(const Mat2& x, const Mat2& y) {
    return {x.a00 * y.a00 + x.a01 * y.a10, x.a00 * y.a01 + x.a01 * y.a11,
            x.a10 * y.a00 + x.a11 * y.a10, x.a10 * y.a01 + x.a11 * y.a11};
}

Vec2 operator*(const Mat2& m, const Vec2& v) {
    return {m.a00 * v.offset + m.a01 * v.drift, m.a10 * v.offset + m.a11 * v.drift};
}

Vec2 operator+(const Vec2& x, const Vec2& y) { return {x.offset + y.offset, x.drift + y.drift}; }
Vec2 operator-(const Vec2& x, const Vec2& y) { return {x.offset - y.offset, x.drift - y.drift}; }

Mat2 Mat2::inverse() const {
    const double det = determinant();
    const double scale = std::abs(a00 * a11) + std::abs(a01 * a10);
    if (!(std::abs(det) > 1e-14 * scale) || !std::isfinite(det)) {
        throw EstimationError("2x2 matrix is numerically singular");
    }
    return {a11 / det, -a01 / det, -a10 / det, a00 / det};
}

bool Mat2::is_symmetric(double rel_tol) const {
    const double scale = std::max({std::abs(a01), std::abs(a10), std::sqrt(std::abs(a00 * a11))});
    return std::abs(a01 - a10) <= rel_tol * scale;
}

double Mat2::min_eigenvalue() const {
    const double off = 0.5 * (a01 + a10);
    const double mean = 0.5 * (a00 + a11);
    const double half_gap = std::hypot(0.5 * (a00 - a11), off);
    // det / lambda_max avoids cancellation when the eigenvalues differ by many orders of magnitude.
    const double largest = mean + half_gap;
    if (largest > 0.0) return (a00 * a11 - off * off) / largest;
    return mean - half_gap;
}

void KfConfig::validate() const {
    if (!(delta_t > 0.0)) throw ConfigError("KF delta_t must be positive");
    if (!(sigma2 > 0.0)) throw ConfigError("KF sigma2 must be positive (measurement covariance would be singular)");
    if (!q.is_symmetric() || q.min_eigenvalue() < -1e-12 * std::max(1.0, q.trace())) {
        throw ConfigError("KF process noise must be symmetric positive semi-definite");
    }
}

KfState kf_initial_state(const KfConfig& cfg) {
    KfState s;
    s.p = cfg.p0;
    return s;
}

Mat2 kf_measurement_cov(const KfConfig& cfg) {
    const double dt = cfg.delta_t;
    return {cfg.sigma2, cfg.sigma2 / dt, cfg.sigma2 / dt, 2.0 * cfg.sigma2 / (dt * dt)};
}

namespace {

Mat2 symmetrized(const Mat2& m) {
    const double off = 0.5 * (m.a01 + m.a10);
    return {m.a00, off, off, m.a11};
}

// The filter works internally on [offset; drift * dT], where every entry is
// in nanoseconds and R becomes sigma2 * [[1, 1], [1, 2]]. With dT = 1 s the
// unscaled covariance spans about twenty orders of magnitude.
Mat2 to_scaled(const Mat2& p, double dt) { return {p.a00, p.a01 * dt, p.a10 * dt, p.a11 * dt * dt}; }
Mat2 from_scaled(const Mat2& p, double dt) { return {p.a00, p.a01 / dt, p.a10 / dt, p.a11 / (dt * dt)}; }
Vec2 to_scaled(const Vec2& x, double dt) { return {x.offset, x.drift * dt}; }
Vec2 from_scaled(const Vec2& x, double dt) { return {x.offset, x.drift / dt}; }

Mat2 scaled_measurement_cov(double sigma2) { return {sigma2, sigma2, sigma2, 2.0 * sigma2}; }

bool is_zero(const Mat2& m) { return m.a00 == 0.0 && m.a01 == 0.0 && m.a10 == 0.0 && m.a11 == 0.0; }

}  // namespace

KfState kf_predict(const KfState& s, const KfConfig& cfg) {
    const Mat2 a{1.0, cfg.delta_t, 0.0, 1.0};
    KfState out = s;
    out.x = a * s.x;
    out.p = symmetrized(a * s.p * a.transposed() + cfg.q);
    return out;
}

KfState kf_update(const KfState& s, const Vec2& z, const KfConfig& cfg) {
    const double dt = cfg.delta_t;
    const Mat2 p = to_scaled(s.p, dt);
    const Mat2 r = scaled_measurement_cov(cfg.sigma2);
    const Mat2 gain = p * (p + r).inverse();
    const Mat2 ikg = Mat2::identity() - gain;
    KfState out = s;
    out.x = from_scaled(to_scaled(s.x, dt) + gain * (to_scaled(z, dt) - to_scaled(s.x, dt)), dt);
    // Joseph form of (I - K) P: identical for this gain, and stays PSD under rounding.
    const Mat2 post = ikg * p * ikg.transposed() + gain * r * gain.transposed();
    out.p = from_scaled(symmetrized(post), dt);
    return out;
}

KfState kf_update_offset(const KfState& s, double measured, const KfConfig& cfg) {
    const double innovation_var = s.p.a00 + cfg.sigma2;
    if (!(innovation_var > 0.0)) throw EstimationError("offset update has non-positive innovation variance");
    // Gain column K = P h / (h' P h + r) with h = [1, 0].
    const double k0 = s.p.a00 / innovation_var;
    const double k1 = s.p.a10 / innovation_var;
    const double innovation = measured - s.x.offset;
    KfState out = s;
    out.x.offset += k0 * innovation;
    out.x.drift += k1 * innovation;
    // Joseph form with I - K h = [[1 - k0, 0], [-k1, 1]], where 1 - k0 is taken as r / (h' P h + r).
    const Mat2 ikh{cfg.sigma2 / innovation_var, 0.0, -k1, 1.0};
    const Mat2 kkt{k0 * k0, k0 * k1, k1 * k0, k1 * k1};
    out.p = symmetrized(ikh * s.p * ikh.transposed() + Mat2{kkt.a00 * cfg.sigma2, kkt.a01 * cfg.sigma2,
                                                             kkt.a10 * cfg.sigma2, kkt.a11 * cfg.sigma2});
    return out;
}

namespace {

// Predict followed by the full update, carried out in information form. With
// zero process noise the predicted information A^-T P^-1 A^-1 never needs the
// predicted covariance, which is numerically rank-deficient while the drift is
// still diffuse.
KfState predict_update_information(const KfState& s, const Vec2& z, const KfConfig& cfg) {
    const double dt = cfg.delta_t;
    const Mat2 info = to_scaled(s.p, dt).inverse();
    const Vec2 x = to_scaled(s.x, dt);
    const Mat2 a_inv{1.0, -1.0, 0.0, 1.0};
    const Mat2 info_pred = a_inv.transposed() * info * a_inv;
    const Vec2 eta_pred = a_inv.transposed() * (info * x);

    const double w = 1.0 / cfg.sigma2;
    const Mat2 r_inv{2.0 * w, -w, -w, w};
    const Mat2 info_post = symmetrized(info_pred + r_inv);
    const Vec2 eta_post = eta_pred + r_inv * to_scaled(z, dt);

    const Mat2 p_post = symmetrized(info_post.inverse());
    KfState out = s;
    out.x = from_scaled(p_post * eta_post, dt);
    out.p = from_scaled(p_post, dt);
    return out;
}

}  // namespace

KfState kf_step(const KfState& s, const TimestampQuad& quad_k, const TimestampQuad* quad_prev,
                const KfConfig& cfg) {
    KfState out;
    if (quad_prev == nullptr) {
        out = kf_update_offset(s, measured_offset(quad_k), cfg);
    } else {
        const Vec2 z{measured_offset(quad_k), measured_drift(quad_k, *quad_prev)};
        out = is_zero(cfg.q) ? predict_update_information(s, z, cfg) : kf_update(kf_predict(s, cfg), z, cfg);
    }
    out.round = s.round + 1;
    return out;
}

}  // namespace syncnet

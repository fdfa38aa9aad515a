#pragma once

#include "blayer/tensor_field.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace blayer {

class MonotoneMap;
using MapPtr = std::shared_ptr<const MonotoneMap>;

/// Scalar flux map a(y, p): R^d × R^d → R^d of the equation −∇·a(y, ∇u) = 0.
///
/// Implementations are immutable. `jacobian` writes ∂a_i/∂p_j row-major.
class MonotoneMap : public std::enable_shared_from_this<MonotoneMap> {
public:
    virtual ~MonotoneMap() = default;

    virtual int dim() const = 0;
    virtual std::string name() const = 0;
    virtual void flux(std::span<const double> y, std::span<const double> p, std::span<double> out) const = 0;
    virtual void jacobian(std::span<const double> y, std::span<const double> p, std::span<double> out) const;

    /// Convex potential F with a = D_p F, when one exists.
    virtual bool has_potential() const { return false; }
    virtual double potential(std::span<const double> y, std::span<const double> p) const;

    virtual bool is_homogeneous() const { return false; }
    virtual bool depends_on_y() const { return true; }
    virtual double declared_lambda() const { return 0.0; }
    /// Positive smoothing width of a regularized kink, 0 if exact.
    virtual double smoothing() const { return 0.0; }
    /// Copy with its kink smoothed to width tau. Maps without a kink return themselves.
    virtual MapPtr smoothed(double tau) const;

    /// The map seen by functions of (x·b_0, x·b_1) only: p2 ↦ Bᵀ a(B p2) with B = [b_0 b_1].
    /// `tau` is a smoothing width offered to maps with a kink in that plane.
    virtual MapPtr restrict_to_plane(const Vec& b0, const Vec& b1, double tau) const;

    /// a(m·y, p): the operator with coefficients oscillating at scale 1/m.
    virtual MapPtr rescaled(std::int64_t m) const;

    Vec flux(const Vec& y, const Vec& p) const;
};

/// a(y, p) = A(y) p for a scalar tensor field. Has a potential when A is symmetric.
class LinearMap final : public MonotoneMap {
public:
    explicit LinearMap(LinearTensorField A);
    int dim() const override { return A_.dim(); }
    std::string name() const override { return "linear"; }
    using MonotoneMap::flux;
    void flux(std::span<const double> y, std::span<const double> p, std::span<double> out) const override;
    void jacobian(std::span<const double> y, std::span<const double> p, std::span<double> out) const override;
    bool has_potential() const override { return symmetric_; }
    double potential(std::span<const double> y, std::span<const double> p) const override;
    bool is_homogeneous() const override { return true; }
    bool depends_on_y() const override { return !A_.is_constant(); }
    double declared_lambda() const override { return A_.lambda(); }
    MapPtr rescaled(std::int64_t m) const override;
    const LinearTensorField& tensor() const noexcept { return A_; }

private:
    LinearTensorField A_;
    bool symmetric_ = false;
};

/// The three-dimensional operator a(p) = (p1, p2, p3 + f(p1, p3)) with
/// f = (sqrt(8 p1² + 9 p3²) + p3) / 8. Positively 1-homogeneous, y-independent,
/// not a gradient field.
class KinkedMap3d final : public MonotoneMap {
public:
    int dim() const override { return 3; }
    std::string name() const override { return "kinked3d"; }
    using MonotoneMap::flux;
    void flux(std::span<const double> y, std::span<const double> p, std::span<double> out) const override;
    void jacobian(std::span<const double> y, std::span<const double> p, std::span<double> out) const override;
    bool is_homogeneous() const override { return true; }
    bool depends_on_y() const override { return false; }
    double declared_lambda() const override { return 0.5; }
    /// Planes with no p1 component reduce to a gradient map with a |·| kink.
    MapPtr restrict_to_plane(const Vec& b0, const Vec& b1, double tau) const override;
    MapPtr rescaled(std::int64_t) const override { return shared_from_this(); }

    static double f(double p1, double p3);
};

/// Two-dimensional gradient map
///   a(p) = p + c [ (1/8)(c·p) + (3/8) H_τ(c·p) ],
///   F(p) = |p|²/2 + (c·p)²/16 + (3/8) ∫_0^{c·p} H_τ,
/// with H_τ the Huber smoothing of |t| (H_0 = |t|). For c = (0,1) this is
/// (p1, (9/8) p2 + (3/8)|p2|), the e2-approach reduction of KinkedMap3d.
class KinkedPlaneMap final : public MonotoneMap {
public:
    KinkedPlaneMap(Vec c, double tau);
    static std::shared_ptr<KinkedPlaneMap> reduced2d(double tau) { return std::make_shared<KinkedPlaneMap>(Vec{0.0, 1.0}, tau); }

    int dim() const override { return 2; }
    std::string name() const override { return tau_ > 0 ? "kinked_reduced_huber" : "kinked_reduced"; }
    using MonotoneMap::flux;
    void flux(std::span<const double> y, std::span<const double> p, std::span<double> out) const override;
    void jacobian(std::span<const double> y, std::span<const double> p, std::span<double> out) const override;
    bool has_potential() const override { return true; }
    double potential(std::span<const double> y, std::span<const double> p) const override;
    bool is_homogeneous() const override { return tau_ == 0.0; }
    bool depends_on_y() const override { return false; }
    double declared_lambda() const override { return 0.75; }
    double smoothing() const override { return tau_; }
    MapPtr smoothed(double tau) const override { return std::make_shared<KinkedPlaneMap>(c_, tau); }
    MapPtr rescaled(std::int64_t) const override { return shared_from_this(); }
    const Vec& direction() const noexcept { return c_; }

    static double huber(double t, double tau);
    static double huber_slope(double t, double tau);
    static double huber_integral(double t, double tau);

private:
    Vec c_;
    double tau_;
};

/// p2 ↦ Bᵀ a(y(x), B p2) for a generic base map; y is the physical point
/// y = origin + B x. Potential inherited from the base.
class ProjectedMap final : public MonotoneMap {
public:
    ProjectedMap(MapPtr base, Vec b0, Vec b1);
    int dim() const override { return 2; }
    std::string name() const override { return "projected(" + base_->name() + ")"; }
    using MonotoneMap::flux;
    void flux(std::span<const double> y, std::span<const double> p, std::span<double> out) const override;
    void jacobian(std::span<const double> y, std::span<const double> p, std::span<double> out) const override;
    bool has_potential() const override { return base_->has_potential(); }
    double potential(std::span<const double> y, std::span<const double> p) const override;
    bool is_homogeneous() const override { return base_->is_homogeneous(); }
    bool depends_on_y() const override { return base_->depends_on_y(); }
    double declared_lambda() const override { return base_->declared_lambda(); }

private:
    void lift(std::span<const double> x, std::span<double> y) const;
    MapPtr base_;
    Vec b0_, b1_;
};

/// a(m·y, p) for a base map that is not closed under rescaling.
class RescaledMap final : public MonotoneMap {
public:
    RescaledMap(MapPtr base, std::int64_t m) : base_(std::move(base)), m_(m) {}
    int dim() const override { return base_->dim(); }
    std::string name() const override { return base_->name() + "@x" + std::to_string(m_); }
    using MonotoneMap::flux;
    void flux(std::span<const double> y, std::span<const double> p, std::span<double> out) const override;
    void jacobian(std::span<const double> y, std::span<const double> p, std::span<double> out) const override;
    bool has_potential() const override { return base_->has_potential(); }
    double potential(std::span<const double> y, std::span<const double> p) const override;
    bool is_homogeneous() const override { return base_->is_homogeneous(); }
    bool depends_on_y() const override { return base_->depends_on_y(); }
    double declared_lambda() const override { return base_->declared_lambda(); }

private:
    MapPtr base_;
    std::int64_t m_;
};

/// Map given by callables. Without a jacobian callable, central differences are used.
class FunctionMap final : public MonotoneMap {
public:
    using FluxFn = std::function<void(std::span<const double>, std::span<const double>, std::span<double>)>;
    using PotentialFn = std::function<double(std::span<const double>, std::span<const double>)>;

    FunctionMap(int dim, std::string name, FluxFn flux, PotentialFn potential = {}, bool homogeneous = false,
                bool depends_on_y = true, double lambda = 0.0);
    int dim() const override { return dim_; }
    std::string name() const override { return name_; }
    using MonotoneMap::flux;
    void flux(std::span<const double> y, std::span<const double> p, std::span<double> out) const override;
    bool has_potential() const override { return static_cast<bool>(potential_); }
    double potential(std::span<const double> y, std::span<const double> p) const override;
    bool is_homogeneous() const override { return homogeneous_; }
    bool depends_on_y() const override { return depends_on_y_; }
    double declared_lambda() const override { return lambda_; }

private:
    int dim_;
    std::string name_;
    FluxFn flux_;
    PotentialFn potential_;
    bool homogeneous_;
    bool depends_on_y_;
    double lambda_;
};

// ---------------------------------------------------------------------------
// Sampled structural checks

struct MonotonicityReport {
    double lambda_hat = 0.0;     ///< min (a(p)−a(q))·(p−q)/|p−q|²
    double lipschitz_hat = 0.0;  ///< max |a(p)−a(q)|/|p−q|
    int samples = 0;
    Vec worst_p, worst_q;
};

/// Samples y in the unit cell and pairs (p, q) in the ball of the given radius.
/// Throws OperatorInvalid with the witness pair when lambda_hat ≤ 0.
MonotonicityReport validate_operator(const MonotoneMap& op, int sample_count, double radius, std::uint64_t seed);

/// max over samples (p, t ∈ [0.1, 10]) of |a(tp) − t a(p)| / (t|p| + 1e-300).
double homogeneity_check(const MonotoneMap& op, int sample_count, std::uint64_t seed);

/// max over samples of |a − central-difference gradient of F| at step h.
double potential_gradient_consistency(const MonotoneMap& op, int sample_count, double h, double radius, std::uint64_t seed);

/// Sampled |8f² − 2 p3 f − (p1² + p3²)| / (p1² + p3²) for the KinkedMap3d f.
double kinked_identity_defect(int sample_count, std::uint64_t seed);

}  // namespace blayer

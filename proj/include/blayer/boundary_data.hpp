#pragma once

#include "blayer/field.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace blayer {

/// Dirichlet data evaluated at physical points of the bottom boundary.
class BoundaryData {
public:
    virtual ~BoundaryData() = default;
    virtual int components() const = 0;
    virtual void evaluate(std::span<const double> y, std::span<double> out) const = 0;
    virtual std::string describe() const = 0;
};

using DataPtr = std::shared_ptr<const BoundaryData>;

/// Data given by a periodic field φ(y).
class FieldData final : public BoundaryData {
public:
    explicit FieldData(PeriodicField field) : field_(std::move(field)) {}
    int components() const override { return field_.components(); }
    void evaluate(std::span<const double> y, std::span<double> out) const override { field_.evaluate(y, out); }
    std::string describe() const override { return "field"; }
    const PeriodicField& field() const noexcept { return field_; }

private:
    PeriodicField field_;
};

enum class Interpolation { Linear, CubicSpline };

/// Periodic interpolant through samples f(t_j), t_j = j·P/n, of a function
/// with period P. Components are interpolated independently.
class PeriodicInterpolant {
public:
    PeriodicInterpolant(double period, std::vector<Vec> samples, Interpolation kind);

    int components() const noexcept { return static_cast<int>(samples_.front().size()); }
    double period() const noexcept { return period_; }
    std::size_t size() const noexcept { return samples_.size(); }
    Interpolation kind() const noexcept { return kind_; }
    void evaluate(double t, std::span<double> out) const;
    Vec evaluate(double t) const;

private:
    double period_;
    std::vector<Vec> samples_;
    std::vector<Vec> second_;  ///< spline second derivatives
    Interpolation kind_;
};

/// Data depending on the first coordinate only: g(y) = interpolant(y_0).
/// Used on planar strips whose lateral coordinate is t.
class ProfileData final : public BoundaryData {
public:
    explicit ProfileData(PeriodicInterpolant profile) : profile_(std::move(profile)) {}
    int components() const override { return profile_.components(); }
    void evaluate(std::span<const double> y, std::span<double> out) const override { profile_.evaluate(y[0], out); }
    std::string describe() const override { return "profile"; }
    const PeriodicInterpolant& profile() const noexcept { return profile_; }

private:
    PeriodicInterpolant profile_;
};

}  // namespace blayer

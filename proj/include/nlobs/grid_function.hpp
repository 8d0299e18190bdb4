#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "nlobs/geometry.hpp"

namespace nlobs {

/// Cell-wise constant function on a Geometry. Values are finite at construction;
/// element writes are not re-validated.
class GridFunction {
public:
    GridFunction(std::shared_ptr<const Geometry> geom, std::vector<double> values);

    static GridFunction zeros(std::shared_ptr<const Geometry> geom);
    static GridFunction constant(std::shared_ptr<const Geometry> geom, double c);
    /// f evaluated at every cell center.
    static GridFunction sample(std::shared_ptr<const Geometry> geom,
                               const std::function<double(double)>& f);

    const Geometry& geometry() const noexcept { return *geom_; }
    const std::shared_ptr<const Geometry>& geometry_ptr() const noexcept { return geom_; }

    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }

    bool same_geometry(const GridFunction& other) const noexcept;

private:
    std::shared_ptr<const Geometry> geom_;
    std::vector<double> values_;
};

/// Throws ContractError when the two functions live on different geometries.
void require_same_geometry(const GridFunction& a, const GridFunction& b);

}  // namespace nlobs

#include "nlobs/grid_function.hpp"

#include <cmath>

#include "nlobs/error.hpp"

namespace nlobs {

GridFunction::GridFunction(std::shared_ptr<const Geometry> geom, std::vector<double> values)
    : geom_(std::move(geom)), values_(std::move(values)) {
    if (!geom_) throw ContractError("grid function needs a geometry");
    if (values_.size() != geom_->n_cells())
        throw ContractError("grid function length must equal the number of cells");
    for (double v : values_)
        if (!std::isfinite(v)) throw DomainError("grid function values must be finite");
}

GridFunction GridFunction::zeros(std::shared_ptr<const Geometry> geom) { return constant(std::move(geom), 0.0); }

GridFunction GridFunction::constant(std::shared_ptr<const Geometry> geom, double c) {
    const std::size_t n = geom ? geom->n_cells() : 0;
    return GridFunction(std::move(geom), std::vector<double>(n, c));
}

GridFunction GridFunction::sample(std::shared_ptr<const Geometry> geom,
                                  const std::function<double(double)>& f) {
    if (!geom) throw ContractError("grid function needs a geometry");
    std::vector<double> v(geom->n_cells());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(geom->center(i));
    return GridFunction(std::move(geom), std::move(v));
}

bool GridFunction::same_geometry(const GridFunction& other) const noexcept {
    return geom_ == other.geom_ || *geom_ == *other.geom_;
}

void require_same_geometry(const GridFunction& a, const GridFunction& b) {
    if (!a.same_geometry(b)) throw ContractError("grid functions live on different geometries");
}

}  // namespace nlobs

#pragma once

#include <Eigen/Dense>

#include "droplet/space.hpp"

namespace droplet {

using Vector = Eigen::VectorXd;

/// Coefficient vector attached to a function space.
struct Field {
    const FunctionSpace* space = nullptr;
    Vector coeffs;

    Field() = default;
    explicit Field(const FunctionSpace& s) : space(&s), coeffs(Vector::Zero(s.dof_count())) {}
    Field(const FunctionSpace& s, Vector c) : space(&s), coeffs(std::move(c)) {
        if (coeffs.size() != s.dof_count())
            throw std::invalid_argument("Field: coefficient length does not match dof count");
    }
};

}  // namespace droplet

#pragma once

#include <string>

#include "error.hpp"

namespace bgkmc {

/// Uniform cell-centred mesh on [a, b].
struct SpatialMesh
{
    double a = 0.0;
    double b = 1.0;
    int nx = 2;

    SpatialMesh() = default;
    SpatialMesh(double a_, double b_, int nx_)
        : a(a_)
        , b(b_)
        , nx(nx_)
    {
        if (nx < 2)
            throw InvalidArgument("SpatialMesh: need at least 2 cells, got " + std::to_string(nx));
        if (!(b > a))
            throw InvalidArgument("SpatialMesh: need b > a");
    }

    double dx() const { return (b - a) / nx; }
    double center(int j) const { return a + (j + 0.5) * dx(); }
    double length() const { return b - a; }

    SpatialMesh refined() const { return SpatialMesh(a, b, 2 * nx); }
};

} // namespace bgkmc

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "maxwellian.hpp"
#include "mesh.hpp"
#include "quadrature.hpp"

namespace bgkmc {

/// Ghost layers on each side of the mesh, enough for the MUSCL stencil.
inline constexpr int kGhosts = 2;

enum class BoundaryKind { periodic, dirichlet, diffusive_wall, neumann };

/// Prescribed (phi, psi) at a point x and time t, one value per velocity node.
using DirichletData = std::function<void(double x, double t, std::span<double> phi,
                                         std::span<double> psi)>;

/// Condition on one side of the domain.
struct BoundarySpec
{
    BoundaryKind kind = BoundaryKind::periodic;
    double wall_temperature = 0.0; // diffusive_wall only
    DirichletData data;            // dirichlet only

    static BoundarySpec periodic() { return {}; }
    static BoundarySpec neumann() { return {BoundaryKind::neumann, 0.0, {}}; }
    static BoundarySpec dirichlet(DirichletData g) { return {BoundaryKind::dirichlet, 0.0, std::move(g)}; }
    static BoundarySpec diffusive_wall(double T_w)
    {
        if (!(T_w > 0.0))
            throw InvalidArgument("diffusive wall requires T_w > 0");
        return {BoundaryKind::diffusive_wall, T_w, {}};
    }
};

struct BoundaryPair
{
    BoundarySpec left;
    BoundarySpec right;

    void validate() const
    {
        if ((left.kind == BoundaryKind::periodic) != (right.kind == BoundaryKind::periodic))
            throw InvalidArgument("periodic boundary must be used on both sides");
        for (const auto* s : {&left, &right})
        {
            if (s->kind == BoundaryKind::diffusive_wall && !(s->wall_temperature > 0.0))
                throw InvalidArgument("diffusive wall requires T_w > 0");
            if (s->kind == BoundaryKind::dirichlet && !s->data)
                throw InvalidArgument("dirichlet boundary needs prescribed data");
        }
    }
};

/// Wall densities chosen by the last apply_boundary call (0 where unused).
struct WallDensities
{
    double left = 0.0;
    double right = 0.0;
};

/// minmod of three arguments: smallest magnitude when all share a sign, else 0.
inline double minmod(double a, double b, double c)
{
    const double lo = std::min(a, std::min(b, c));
    const double hi = std::max(a, std::max(b, c));
    return lo > 0.0 ? lo : (hi < 0.0 ? hi : 0.0);
}

/// MC-limited slope of the cell with neighbours qm, qp.
inline double muscl_slope(double qm, double q0, double qp, double dx, double theta = 2.0)
{
    return minmod((qp - qm) / (2.0 * dx), theta * (q0 - qm) / dx, theta * (qp - q0) / dx);
}

/// Upwind numerical flux for velocity node xi.
inline double upwind_flux(double xi, double left, double right)
{
    return std::max(0.0, xi) * left + std::min(0.0, xi) * right;
}

/**
 * @brief Fill the ghost rows of ghosted arrays (nx + 4 rows of nv values)
 * whose interior rows are already set.
 *
 * Diffusive wall: incoming nodes get the wall Maxwellian in both ghost rows
 * (so the limited slope in the first ghost is zero and the face value is
 * exactly M_w), outgoing nodes copy the adjacent interior cell. The wall
 * density balances the discrete outgoing particle flux.
 */
inline WallDensities apply_boundary(const BoundaryPair& bc, const VelocityGrid& grid,
                                    const SpatialMesh& mesh, double t, std::span<double> ext_phi,
                                    std::span<double> ext_psi)
{
    const int nx = mesh.nx;
    const auto nv = static_cast<int>(grid.size());
    const auto xi = grid.nodes();
    const auto w = grid.weights();
    auto row = [nv](std::span<double> a, int r) { return a.subspan(static_cast<std::size_t>(r) * nv, nv); };
    auto copy_row = [&](int dst, int src) {
        std::copy_n(&ext_phi[src * nv], nv, &ext_phi[dst * nv]);
        std::copy_n(&ext_psi[src * nv], nv, &ext_psi[dst * nv]);
    };

    WallDensities walls;
    // side = -1 for left, +1 for right; ghost rows and the adjacent interior row
    auto fill_side = [&](const BoundarySpec& spec, int side) {
        const int g_near = side < 0 ? 1 : nx + 2;
        const int g_far = side < 0 ? 0 : nx + 3;
        const int inner = side < 0 ? 2 : nx + 1;
        switch (spec.kind)
        {
        case BoundaryKind::periodic:
            if (side < 0)
            {
                copy_row(1, nx + 1);
                copy_row(0, nx);
            }
            else
            {
                copy_row(nx + 2, 2);
                copy_row(nx + 3, 3);
            }
            break;
        case BoundaryKind::neumann:
            copy_row(g_near, inner);
            copy_row(g_far, inner);
            break;
        case BoundaryKind::dirichlet: {
            const double dx = mesh.dx();
            const double x_near = side < 0 ? mesh.a - 0.5 * dx : mesh.b + 0.5 * dx;
            const double x_far = side < 0 ? mesh.a - 1.5 * dx : mesh.b + 1.5 * dx;
            spec.data(x_near, t, row(ext_phi, g_near), row(ext_psi, g_near));
            spec.data(x_far, t, row(ext_phi, g_far), row(ext_psi, g_far));
            break;
        }
        case BoundaryKind::diffusive_wall: {
            // outward normal n = side; incoming nodes have xi * side < 0
            const double Tw = spec.wall_temperature;
            double out_flux = 0.0;
            double in_flux_unit = 0.0;
            const double* interior = &ext_phi[inner * nv];
            for (int k = 0; k < nv; ++k)
            {
                const double vn = xi[k] * side;
                if (vn > 0.0)
                    out_flux += vn * w[k] * interior[k];
                else if (vn < 0.0)
                    in_flux_unit -= vn * w[k] * std::exp(-xi[k] * xi[k] / (2.0 * Tw));
            }
            if (!(out_flux > 0.0) || !(in_flux_unit > 0.0))
                throw DegenerateWall("diffusive wall: vanishing outgoing particle flux");
            // amplitude rho_w / sqrt(2 pi T_w) absorbed in `amp`
            const double amp = out_flux / in_flux_unit;
            const double rho_w = amp * std::sqrt(2.0 * std::numbers::pi * Tw);
            (side < 0 ? walls.left : walls.right) = rho_w;
            for (int g : {g_near, g_far})
            {
                for (int k = 0; k < nv; ++k)
                {
                    if (xi[k] * side < 0.0)
                    {
                        const double m = amp * std::exp(-xi[k] * xi[k] / (2.0 * Tw));
                        ext_phi[g * nv + k] = m;
                        ext_psi[g * nv + k] = Tw * m;
                    }
                    else
                    {
                        ext_phi[g * nv + k] = ext_phi[inner * nv + k];
                        ext_psi[g * nv + k] = ext_psi[inner * nv + k];
                    }
                }
            }
            break;
        }
        }
    };
    fill_side(bc.left, -1);
    fill_side(bc.right, +1);
    return walls;
}

/**
 * @brief MUSCL (MC limiter, theta = 2) upwind transport operator
 * T(q)_j = (F_{j+1/2} - F_{j-1/2}) / dx for the pair (phi, psi).
 *
 * Holds scratch buffers; one instance per solve.
 */
class TransportOperator
{
public:
    TransportOperator(const VelocityGrid& grid, const SpatialMesh& mesh, BoundaryPair bc,
                      double theta = 2.0)
        : grid_(&grid)
        , mesh_(mesh)
        , bc_(std::move(bc))
        , theta_(theta)
    {
        bc_.validate();
        const std::size_t nv = grid.size();
        const std::size_t rows = static_cast<std::size_t>(mesh.nx) + 2 * kGhosts;
        ext_phi_.resize(rows * nv);
        ext_psi_.resize(rows * nv);
        slope_.resize(rows * nv);
        flux_.resize((static_cast<std::size_t>(mesh.nx) + 1) * nv);
        xi_pos_.resize(nv);
        xi_neg_.resize(nv);
        for (std::size_t k = 0; k < nv; ++k)
        {
            xi_pos_[k] = std::max(0.0, grid.nodes()[k]);
            xi_neg_[k] = std::min(0.0, grid.nodes()[k]);
        }
    }

    const SpatialMesh& mesh() const { return mesh_; }
    const BoundaryPair& boundary() const { return bc_; }
    const WallDensities& last_walls() const { return walls_; }

    /// Writes T(phi), T(psi) (nx x nv, row-major by cell) for interior data at time t.
    void apply(std::span<const double> phi, std::span<const double> psi, double t,
               std::span<double> out_phi, std::span<double> out_psi)
    {
        const std::size_t nv = grid_->size();
        const std::size_t nx = static_cast<std::size_t>(mesh_.nx);
        std::copy(phi.begin(), phi.end(), ext_phi_.begin() + kGhosts * nv);
        std::copy(psi.begin(), psi.end(), ext_psi_.begin() + kGhosts * nv);
        walls_ = apply_boundary(bc_, *grid_, mesh_, t, ext_phi_, ext_psi_);
        divergence(ext_phi_, out_phi, nx, nv);
        divergence(ext_psi_, out_psi, nx, nv);
    }

private:
    void divergence(const std::vector<double>& ext, std::span<double> out, std::size_t nx,
                    std::size_t nv)
    {
        const double dx = mesh_.dx();
        const double inv_dx = 1.0 / dx;
        const double th = theta_;
        // slopes on rows 1 .. nx + 2 (interior plus the first ghost each side)
        for (std::size_t r = 1; r <= nx + 2; ++r)
        {
            const double* qm = &ext[(r - 1) * nv];
            const double* q0 = &ext[r * nv];
            const double* qp = &ext[(r + 1) * nv];
            double* s = &slope_[r * nv];
            for (std::size_t k = 0; k < nv; ++k)
            {
                const double c = 0.5 * (qp[k] - qm[k]) * inv_dx;
                const double bwd = th * (q0[k] - qm[k]) * inv_dx;
                const double fwd = th * (qp[k] - q0[k]) * inv_dx;
                s[k] = minmod(c, bwd, fwd);
            }
        }
        // interface i sits between rows i + 1 and i + 2, i = 0 .. nx
        const double h = 0.5 * dx;
        for (std::size_t i = 0; i <= nx; ++i)
        {
            const std::size_t rl = i + 1;
            const std::size_t rr = i + 2;
            const double* ql = &ext[rl * nv];
            const double* sl = &slope_[rl * nv];
            const double* qr = &ext[rr * nv];
            const double* sr = &slope_[rr * nv];
            double* f = &flux_[i * nv];
            for (std::size_t k = 0; k < nv; ++k)
                f[k] = xi_pos_[k] * (ql[k] + h * sl[k]) + xi_neg_[k] * (qr[k] - h * sr[k]);
        }
        for (std::size_t j = 0; j < nx; ++j)
        {
            const double* fl = &flux_[j * nv];
            const double* fr = &flux_[(j + 1) * nv];
            double* o = &out[j * nv];
            for (std::size_t k = 0; k < nv; ++k)
                o[k] = (fr[k] - fl[k]) * inv_dx;
        }
    }

    const VelocityGrid* grid_;
    SpatialMesh mesh_;
    BoundaryPair bc_;
    double theta_;
    WallDensities walls_;
    std::vector<double> ext_phi_, ext_psi_, slope_, flux_, xi_pos_, xi_neg_;
};

} // namespace bgkmc

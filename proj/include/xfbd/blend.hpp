#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "xfbd/geometry.hpp"
#include "xfbd/image.hpp"
#include "xfbd/raster.hpp"

namespace xfbd {

/// Interior pixel set (omega) for one blend. Interior pixels never lie on
/// the image border, so every interior pixel has all 4 neighbors in frame.
struct BlendRegion {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> mask;  // 1 = interior
    PixelBox bbox;
    int interior_count = 0;

    bool interior(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height &&
               mask[static_cast<std::size_t>(y) * width + x] != 0;
    }
};

/// Rasterizes the polygon, then dilates it `dilation` times with the
/// 8-neighborhood. The dilation band is clipped one pixel inside the frame;
/// if the rasterized polygon itself touches row/col 0 or max, the blend has
/// no Dirichlet boundary there and RegionTouchesBorder is thrown.
BlendRegion make_blend_region(const BuildingPolygon& poly, int width, int height, int dilation);

/// 5-point Laplacian over the interior: row p reads
///   4 f_p - sum_{q in N_p ∩ omega} f_q
///     = sum_{q in N_p ∩ boundary} target_q + sum_{q in N_p} (source_p - source_q).
/// Values are in raw intensity units (0..255).
struct PoissonSystem {
    int width = 0;
    int height = 0;
    int n = 0;
    std::vector<int> index_map;                 // width*height, -1 outside omega
    std::vector<std::array<int, 4>> neighbors;  // unknown indices, -1 when the neighbor is boundary
    std::vector<std::vector<double>> rhs;       // one vector per channel

    // y = A x
    void apply(const std::vector<double>& x, std::vector<double>& y) const;
};

PoissonSystem assemble(const ImageBuffer& target, const ImageBuffer& source,
                       const BlendRegion& region);

struct SolveReport {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Conjugate gradients from a zero initial guess. Converges when the true
/// residual satisfies both ||r||_2 <= tolerance * ||b||_2 and
/// ||r||_inf <= tolerance (absolute, intensity units); the second bound is
/// what keeps the composite's interior Laplacian pinned to the source.
/// Non-convergence returns the best iterate with converged=false.
std::pair<std::vector<std::vector<double>>, SolveReport> solve(const PoissonSystem& system,
                                                               double tolerance,
                                                               int max_iterations);

struct BlendConfig {
    int dilation_px = 2;
    double cg_tolerance = 1e-6;
    int cg_max_iters = 10000;
    int window_margin_px = 8;
};

struct BlendResult {
    ImageBuffer composite;
    SolveReport report;
};

/// Diagnostics for tests and tooling: the cropped working window and the
/// pre-clamp per-channel solution over it.
struct BlendDetail {
    PixelBox window;
    BlendRegion window_region;
    std::vector<int> index_map;  // window-local pixel -> unknown index, -1 outside
    std::vector<std::vector<double>> solution;
};

/// Splices source gradients into target over the region. Pixels outside the
/// region are bit-identical to target; solved interior values are clamped to
/// [0,255] and rounded half-to-even. Channels are solved independently over
/// a working window of region bbox + window_margin_px.
BlendResult blend(const ImageBuffer& target, const ImageBuffer& source, const BlendRegion& region,
                  const BlendConfig& config, BlendDetail* detail = nullptr);

}  // namespace xfbd

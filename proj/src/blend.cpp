#include "xfbd/blend.hpp"

#include <algorithm>
#include <cmath>

#include "xfbd/errors.hpp"

namespace xfbd {

namespace {

constexpr int kDx[4] = {-1, 1, 0, 0};
constexpr int kDy[4] = {0, 0, -1, 1};

PixelBox mask_bbox(const std::vector<std::uint8_t>& mask, int width, int height) {
    PixelBox box{width, height, -1, -1};
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (mask[static_cast<std::size_t>(y) * width + x]) {
                box.x0 = std::min(box.x0, x);
                box.y0 = std::min(box.y0, y);
                box.x1 = std::max(box.x1, x);
                box.y1 = std::max(box.y1, y);
            }
    if (box.x1 < box.x0) box = PixelBox{};
    return box;
}

}  // namespace

BlendRegion make_blend_region(const BuildingPolygon& poly, int width, int height, int dilation) {
    ClassMask raster = ClassMask::zeros(width, height);
    const int count = rasterize_polygon(poly, raster, DamageClass::NoDamage);
    if (count == 0) throw EmptyPolygon("polygon " + poly.uid + " rasterizes to 0 pixels");

    // The polygon itself must not sit on the frame border: those pixels have
    // no exterior neighborhood to take Dirichlet values from.
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (raster.at(x, y) && (x == 0 || y == 0 || x == width - 1 || y == height - 1))
                throw RegionTouchesBorder("polygon " + poly.uid + " touches the image border");

    std::vector<std::uint8_t> mask = raster.data;
    for (int round = 0; round < dilation; ++round) {
        std::vector<std::uint8_t> grown = mask;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                if (!mask[static_cast<std::size_t>(y) * width + x]) continue;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx, ny = y + dy;
                        if (nx >= 0 && nx < width && ny >= 0 && ny < height)
                            grown[static_cast<std::size_t>(ny) * width + nx] = 1;
                    }
            }
        mask.swap(grown);
    }

    // Clip the dilation band one pixel inside the frame.
    for (int x = 0; x < width; ++x) {
        mask[x] = 0;
        mask[static_cast<std::size_t>(height - 1) * width + x] = 0;
    }
    for (int y = 0; y < height; ++y) {
        mask[static_cast<std::size_t>(y) * width] = 0;
        mask[static_cast<std::size_t>(y) * width + width - 1] = 0;
    }

    BlendRegion region;
    region.width = width;
    region.height = height;
    region.mask = std::move(mask);
    region.bbox = mask_bbox(region.mask, width, height);
    region.interior_count = static_cast<int>(
        std::count(region.mask.begin(), region.mask.end(), std::uint8_t{1}));
    return region;
}

void PoissonSystem::apply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 4.0 * x[i];
        for (const int j : neighbors[i])
            if (j >= 0) acc -= x[j];
        y[i] = acc;
    }
}

PoissonSystem assemble(const ImageBuffer& target, const ImageBuffer& source,
                       const BlendRegion& region) {
    if (!target.same_shape(source))
        throw DimensionMismatch("target and source images differ in shape");
    if (target.width != region.width || target.height != region.height)
        throw DimensionMismatch("region does not match image dimensions");

    PoissonSystem system;
    system.width = region.width;
    system.height = region.height;
    system.index_map.assign(static_cast<std::size_t>(region.width) * region.height, -1);

    std::vector<std::pair<int, int>> interior;
    for (int y = 0; y < region.height; ++y)
        for (int x = 0; x < region.width; ++x)
            if (region.interior(x, y)) {
                system.index_map[static_cast<std::size_t>(y) * region.width + x] =
                    static_cast<int>(interior.size());
                interior.emplace_back(x, y);
            }
    system.n = static_cast<int>(interior.size());
    system.neighbors.resize(system.n);
    system.rhs.assign(target.channels, std::vector<double>(system.n, 0.0));

    for (int i = 0; i < system.n; ++i) {
        const auto [x, y] = interior[i];
        for (int k = 0; k < 4; ++k) {
            const int nx = x + kDx[k];
            const int ny = y + kDy[k];
            const int j = system.index_map[static_cast<std::size_t>(ny) * region.width + nx];
            system.neighbors[i][k] = j;
            for (int c = 0; c < target.channels; ++c) {
                const double guidance =
                    static_cast<double>(source.at(x, y, c)) - source.at(nx, ny, c);
                system.rhs[c][i] += guidance;
                if (j < 0) system.rhs[c][i] += target.at(nx, ny, c);  // Dirichlet boundary
            }
        }
    }
    return system;
}

std::pair<std::vector<std::vector<double>>, SolveReport> solve(const PoissonSystem& system,
                                                               double tolerance,
                                                               int max_iterations) {
    SolveReport report;
    report.converged = true;
    std::vector<std::vector<double>> solutions;
    solutions.reserve(system.rhs.size());

    const int n = system.n;
    for (const auto& b : system.rhs) {
        std::vector<double> x(n, 0.0);
        if (n == 0) {
            solutions.push_back(std::move(x));
            continue;
        }

        double b_norm2 = 0.0, b_max = 0.0;
        for (const double v : b) {
            b_norm2 += v * v;
            b_max = std::max(b_max, std::abs(v));
        }
        b_norm2 = std::sqrt(b_norm2);

        std::vector<double> r = b, p = b, ap(n);
        auto residual_ok = [&](double r_norm2, double r_max) {
            return r_norm2 <= tolerance * b_norm2 && r_max <= tolerance;
        };

        double r_dot = 0.0, r_max = 0.0;
        for (const double v : r) {
            r_dot += v * v;
            r_max = std::max(r_max, std::abs(v));
        }

        int iter = 0;
        bool converged = residual_ok(std::sqrt(r_dot), r_max);
        while (!converged && iter < max_iterations) {
            ++iter;
            system.apply(p, ap);
            double p_ap = 0.0;
            for (int i = 0; i < n; ++i) p_ap += p[i] * ap[i];
            if (p_ap <= 0.0) break;  // numerical breakdown; keep best iterate
            const double alpha = r_dot / p_ap;
            for (int i = 0; i < n; ++i) x[i] += alpha * p[i];

            if (iter % 50 == 0) {
                system.apply(x, r);  // periodic true-residual refresh
                for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
            } else {
                for (int i = 0; i < n; ++i) r[i] -= alpha * ap[i];
            }
            double r_dot_new = 0.0;
            r_max = 0.0;
            for (const double v : r) {
                r_dot_new += v * v;
                r_max = std::max(r_max, std::abs(v));
            }
            const double beta = r_dot_new / r_dot;
            r_dot = r_dot_new;
            for (int i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
            converged = residual_ok(std::sqrt(r_dot), r_max);
        }

        // Report the true residual of the final iterate.
        system.apply(x, ap);
        double true_norm2 = 0.0, true_max = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = b[i] - ap[i];
            true_norm2 += v * v;
            true_max = std::max(true_max, std::abs(v));
        }
        true_norm2 = std::sqrt(true_norm2);
        converged = residual_ok(true_norm2, true_max);

        report.iterations = std::max(report.iterations, iter);
        report.relative_residual =
            std::max(report.relative_residual, b_norm2 > 0.0 ? true_norm2 / b_norm2 : 0.0);
        report.converged = report.converged && converged;
        solutions.push_back(std::move(x));
    }
    return {std::move(solutions), report};
}

namespace {

std::uint8_t quantize(double v) {
    v = std::clamp(v, 0.0, 255.0);
    return static_cast<std::uint8_t>(std::nearbyint(v));  // ties to even
}

}  // namespace

BlendResult blend(const ImageBuffer& target, const ImageBuffer& source, const BlendRegion& region,
                  const BlendConfig& config, BlendDetail* detail) {
    if (!target.same_shape(source))
        throw DimensionMismatch("target and source images differ in shape");
    if (target.width != region.width || target.height != region.height)
        throw DimensionMismatch("region does not match image dimensions");

    BlendResult result;
    result.composite = target;
    result.report.converged = true;
    if (region.interior_count == 0) {
        if (detail) *detail = BlendDetail{};
        return result;
    }

    // Work on a cropped window; unknowns scale with the region, not the scene.
    const int margin = std::max(1, config.window_margin_px);
    PixelBox window;
    window.x0 = std::max(0, region.bbox.x0 - margin);
    window.y0 = std::max(0, region.bbox.y0 - margin);
    window.x1 = std::min(target.width - 1, region.bbox.x1 + margin);
    window.y1 = std::min(target.height - 1, region.bbox.y1 + margin);
    const int ww = window.x1 - window.x0 + 1;
    const int wh = window.y1 - window.y0 + 1;

    ImageBuffer target_w = ImageBuffer::zeros(ww, wh, target.channels);
    ImageBuffer source_w = ImageBuffer::zeros(ww, wh, target.channels);
    BlendRegion region_w;
    region_w.width = ww;
    region_w.height = wh;
    region_w.mask.assign(static_cast<std::size_t>(ww) * wh, 0);
    for (int y = 0; y < wh; ++y)
        for (int x = 0; x < ww; ++x) {
            const int gx = x + window.x0;
            const int gy = y + window.y0;
            for (int c = 0; c < target.channels; ++c) {
                target_w.at(x, y, c) = target.at(gx, gy, c);
                source_w.at(x, y, c) = source.at(gx, gy, c);
            }
            region_w.mask[static_cast<std::size_t>(y) * ww + x] = region.interior(gx, gy) ? 1 : 0;
        }
    region_w.bbox = PixelBox{region.bbox.x0 - window.x0, region.bbox.y0 - window.y0,
                             region.bbox.x1 - window.x0, region.bbox.y1 - window.y0};
    region_w.interior_count = region.interior_count;

    const PoissonSystem system = assemble(target_w, source_w, region_w);
    auto [solution, report] = solve(system, config.cg_tolerance, config.cg_max_iters);
    result.report = report;

    for (int y = 0; y < wh; ++y)
        for (int x = 0; x < ww; ++x) {
            const int idx = system.index_map[static_cast<std::size_t>(y) * ww + x];
            if (idx < 0) continue;
            for (int c = 0; c < target.channels; ++c)
                result.composite.at(x + window.x0, y + window.y0, c) = quantize(solution[c][idx]);
        }

    if (detail) {
        detail->window = window;
        detail->window_region = std::move(region_w);
        detail->index_map = system.index_map;
        detail->solution = std::move(solution);
    }
    return result;
}

}  // namespace xfbd

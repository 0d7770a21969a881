#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace xfbd {

/// Predictions are clamped into [kProbClamp, 1 - kProbClamp] before any log.
constexpr double kProbClamp = 1e-7;

/// Flattened target / prediction pair. Targets are binary {0,1} except for
/// the localization loss, where entries may be class indices {0,1,...}.
struct LossTensor {
    std::vector<double> y;
    std::vector<double> y_hat;

    std::size_t size() const { return y.size(); }
};

struct LossConfig {
    double gamma = 2.0;
    double beta = 1.0;
    double lambda_contour = 1.0;
    double lambda_edge = 1.0;  // lambda_1
    double lambda_loc = 1.0;   // lambda_4
    double epsilon_dice = 1.0;
};

struct LossResult {
    double value = 0.0;
    std::vector<double> gradient;
    bool degenerate = false;  // a defined-by-convention branch was taken
};

/// 1 - 2*sum(y*yh) / sum(y+yh); all-zero inputs return 0 by convention.
LossResult soft_dice(const LossTensor& t);

/// Mean over pixels of -(1-p)^gamma * log(p), p = y*yh + (1-y)(1-yh).
/// gamma = 0 reduces exactly to bce/n on binary targets.
LossResult focal_restated(const LossTensor& t, const LossConfig& cfg);

/// soft_dice + focal_restated.
LossResult focal_4ps(const LossTensor& t, const LossConfig& cfg);

/// Summed binary cross-entropy: -sum(y*log(yh) + (1-y)*log(1-yh)).
LossResult bce(const LossTensor& t);

/// lambda * bce + squared-magnitude dice with epsilon smoothing:
/// 1 - (sum(y*yh)+eps) / (sum(y^2)+sum(yh^2)+eps).
LossResult contour(const LossTensor& t, const LossConfig& cfg);

/// bce + lambda_1 * (sum(y - yh))^2 / 2.
LossResult edge_ecl(const LossTensor& t, const LossConfig& cfg);

/// Focal with piecewise h: h = yh if y == 1 else 1 - yh. Coincides with
/// focal_restated on binary targets.
LossResult focal_v1(const LossTensor& t, const LossConfig& cfg);

/// Modulating factor removed: mean of -log(h(y, gamma*y*yh + beta)) / gamma
/// with the piecewise h. Can be negative as defined; the y = 0 branch is
/// degenerate at beta = 1 (log argument clamps to kProbClamp).
LossResult focal_v2(const LossTensor& t, const LossConfig& cfg);

/// bce + lambda_4 * sum over {i : y_i >= 1} of smooth_l1(y_i - yh_i).
LossResult localization_smooth_l1(const LossTensor& t, const LossConfig& cfg);

/// 0.5 x^2 for |x| < 1, |x| - 0.5 otherwise; continuous and C1 at |x| = 1.
double smooth_l1(double x);
double smooth_l1_derivative(double x);

/// Central finite-difference gradient check for one loss over random
/// instances; powers the loss-check CLI.
struct LossCheckRow {
    std::string name;
    double max_rel_err = 0.0;
    bool pass = false;
};

std::vector<LossCheckRow> run_loss_check(std::uint64_t seed, int instances, int length,
                                         double tolerance = 1e-5);

}  // namespace xfbd

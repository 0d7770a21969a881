#include "xfbd/losses.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

namespace xfbd {

namespace {

double clamp_prob(double v) { return std::clamp(v, kProbClamp, 1.0 - kProbClamp); }

void check_tensor(const LossTensor& t) {
    if (t.y.size() != t.y_hat.size() || t.y.empty())
        throw std::invalid_argument("loss tensor: y and y_hat must share a length >= 1");
}

}  // namespace

LossResult soft_dice(const LossTensor& t) {
    check_tensor(t);
    const std::size_t n = t.size();
    LossResult result;
    result.gradient.assign(n, 0.0);

    double overlap = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        overlap += t.y[i] * t.y_hat[i];
        total += t.y[i] + t.y_hat[i];
    }
    if (total == 0.0) {
        result.value = 0.0;  // all-zero convention
        result.degenerate = true;
        return result;
    }
    const double numer = 2.0 * overlap;
    result.value = 1.0 - numer / total;
    for (std::size_t i = 0; i < n; ++i)
        result.gradient[i] = (numer - 2.0 * t.y[i] * total) / (total * total);
    return result;
}

LossResult focal_restated(const LossTensor& t, const LossConfig& cfg) {
    check_tensor(t);
    const std::size_t n = t.size();
    const double gamma = cfg.gamma;
    LossResult result;
    result.gradient.assign(n, 0.0);

    for (std::size_t i = 0; i < n; ++i) {
        const double yh = clamp_prob(t.y_hat[i]);
        const double y = t.y[i];
        const double p = y * yh + (1.0 - y) * (1.0 - yh);
        const double one_minus_p = 1.0 - p;
        const double log_p = std::log(p);
        result.value += -std::pow(one_minus_p, gamma) * log_p / n;

        const double dp = 2.0 * y - 1.0;
        const double dmod =
            gamma == 0.0 ? 0.0 : gamma * std::pow(one_minus_p, gamma - 1.0) * log_p;
        result.gradient[i] = (dmod - std::pow(one_minus_p, gamma) / p) * dp / n;
    }
    return result;
}

LossResult focal_4ps(const LossTensor& t, const LossConfig& cfg) {
    LossResult dice = soft_dice(t);
    const LossResult focal = focal_restated(t, cfg);
    dice.value += focal.value;
    for (std::size_t i = 0; i < dice.gradient.size(); ++i) dice.gradient[i] += focal.gradient[i];
    dice.degenerate = dice.degenerate || focal.degenerate;
    return dice;
}

LossResult bce(const LossTensor& t) {
    check_tensor(t);
    const std::size_t n = t.size();
    LossResult result;
    result.gradient.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double yh = clamp_prob(t.y_hat[i]);
        const double y = t.y[i];
        result.value += -(y * std::log(yh) + (1.0 - y) * std::log(1.0 - yh));
        result.gradient[i] = (yh - y) / (yh * (1.0 - yh));
    }
    return result;
}

LossResult contour(const LossTensor& t, const LossConfig& cfg) {
    LossResult result = bce(t);
    const std::size_t n = t.size();
    result.value *= cfg.lambda_contour;
    for (auto& g : result.gradient) g *= cfg.lambda_contour;

    double overlap = 0.0, magnitude = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        overlap += t.y[i] * t.y_hat[i];
        magnitude += t.y[i] * t.y[i] + t.y_hat[i] * t.y_hat[i];
    }
    const double numer = overlap + cfg.epsilon_dice;
    const double denom = magnitude + cfg.epsilon_dice;
    result.value += 1.0 - numer / denom;
    for (std::size_t i = 0; i < n; ++i)
        result.gradient[i] += (2.0 * t.y_hat[i] * numer - t.y[i] * denom) / (denom * denom);
    return result;
}

LossResult edge_ecl(const LossTensor& t, const LossConfig& cfg) {
    LossResult result = bce(t);
    double diff = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) diff += t.y[i] - t.y_hat[i];
    result.value += cfg.lambda_edge * diff * diff / 2.0;
    for (auto& g : result.gradient) g += cfg.lambda_edge * -diff;
    return result;
}

LossResult focal_v1(const LossTensor& t, const LossConfig& cfg) {
    check_tensor(t);
    const std::size_t n = t.size();
    const double gamma = cfg.gamma;
    LossResult result;
    result.gradient.assign(n, 0.0);

    for (std::size_t i = 0; i < n; ++i) {
        const double yh = clamp_prob(t.y_hat[i]);
        const bool positive = t.y[i] == 1.0;
        const double h = positive ? yh : 1.0 - yh;
        const double one_minus_h = 1.0 - h;
        const double log_h = std::log(h);
        result.value += -std::pow(one_minus_h, gamma) * log_h / n;

        const double dh = positive ? 1.0 : -1.0;
        const double dmod =
            gamma == 0.0 ? 0.0 : gamma * std::pow(one_minus_h, gamma - 1.0) * log_h;
        result.gradient[i] = (dmod - std::pow(one_minus_h, gamma) / h) * dh / n;
    }
    return result;
}

LossResult focal_v2(const LossTensor& t, const LossConfig& cfg) {
    check_tensor(t);
    if (cfg.gamma <= 0.0) throw std::invalid_argument("focal_v2 requires gamma > 0");
    const std::size_t n = t.size();
    LossResult result;
    result.gradient.assign(n, 0.0);

    for (std::size_t i = 0; i < n; ++i) {
        const double shifted = cfg.gamma * t.y[i] * t.y_hat[i] + cfg.beta;
        const bool positive = t.y[i] == 1.0;
        double h = positive ? shifted : 1.0 - shifted;
        double dh = (positive ? 1.0 : -1.0) * cfg.gamma * t.y[i];
        if (h < kProbClamp) {  // degenerate branch: log argument clamped
            h = kProbClamp;
            dh = 0.0;
            result.degenerate = true;
        }
        result.value += -std::log(h) / cfg.gamma / n;
        result.gradient[i] = -dh / (cfg.gamma * h) / n;
    }
    return result;
}

double smooth_l1(double x) { return std::abs(x) < 1.0 ? 0.5 * x * x : std::abs(x) - 0.5; }

double smooth_l1_derivative(double x) {
    return std::abs(x) < 1.0 ? x : (x > 0.0 ? 1.0 : -1.0);
}

LossResult localization_smooth_l1(const LossTensor& t, const LossConfig& cfg) {
    LossResult result = bce(t);
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t.y[i] < 1.0) continue;  // Iverson bracket [y_i >= 1]
        const double x = t.y[i] - t.y_hat[i];
        result.value += cfg.lambda_loc * smooth_l1(x);
        result.gradient[i] += cfg.lambda_loc * -smooth_l1_derivative(x);
    }
    return result;
}

namespace {

using LossFn = std::function<LossResult(const LossTensor&)>;

double max_relative_error(const LossFn& fn, const LossTensor& t) {
    constexpr double kStep = 1e-5;
    constexpr double kAbsFloor = 1e-8;
    const LossResult analytic = fn(t);
    double worst = 0.0;
    LossTensor probe = t;
    for (std::size_t i = 0; i < t.size(); ++i) {
        probe.y_hat[i] = t.y_hat[i] + kStep;
        const double up = fn(probe).value;
        probe.y_hat[i] = t.y_hat[i] - kStep;
        const double down = fn(probe).value;
        probe.y_hat[i] = t.y_hat[i];
        const double numeric = (up - down) / (2.0 * kStep);
        const double denom = std::max({std::abs(analytic.gradient[i]), std::abs(numeric), kAbsFloor});
        worst = std::max(worst, std::abs(numeric - analytic.gradient[i]) / denom);
    }
    return worst;
}

}  // namespace

std::vector<LossCheckRow> run_loss_check(std::uint64_t seed, int instances, int length,
                                         double tolerance) {
    const LossConfig cfg;
    const std::vector<std::pair<std::string, LossFn>> losses = {
        {"soft_dice", [](const LossTensor& t) { return soft_dice(t); }},
        {"focal_restated", [&](const LossTensor& t) { return focal_restated(t, cfg); }},
        {"focal_4ps", [&](const LossTensor& t) { return focal_4ps(t, cfg); }},
        {"bce", [](const LossTensor& t) { return bce(t); }},
        {"contour", [&](const LossTensor& t) { return contour(t, cfg); }},
        {"edge_ecl", [&](const LossTensor& t) { return edge_ecl(t, cfg); }},
        {"focal_v1", [&](const LossTensor& t) { return focal_v1(t, cfg); }},
        {"focal_v2", [&](const LossTensor& t) { return focal_v2(t, cfg); }},
        {"localization_smooth_l1",
         [&](const LossTensor& t) { return localization_smooth_l1(t, cfg); }},
    };

    std::vector<LossCheckRow> rows;
    for (const auto& [name, fn] : losses) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> prob(0.05, 0.95);
        std::bernoulli_distribution coin(0.5);
        std::uniform_int_distribution<int> loc_target(0, 2);

        LossCheckRow row;
        row.name = name;
        const bool localization = name == "localization_smooth_l1";
        for (int k = 0; k < instances; ++k) {
            LossTensor t;
            t.y.resize(length);
            t.y_hat.resize(length);
            for (int i = 0; i < length; ++i) {
                t.y[i] = localization ? static_cast<double>(loc_target(rng))
                                      : (coin(rng) ? 1.0 : 0.0);
                t.y_hat[i] = prob(rng);
            }
            row.max_rel_err = std::max(row.max_rel_err, max_relative_error(fn, t));
        }
        row.pass = row.max_rel_err <= tolerance;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace xfbd

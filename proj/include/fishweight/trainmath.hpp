#ifndef FISHWEIGHT_TRAINMATH_HPP
#define FISHWEIGHT_TRAINMATH_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "fishweight/error.hpp"
#include "fishweight/imaging.hpp"

namespace fishweight {

/// Composite segmentation loss with its parts.
struct LossValue {
    double total = 0.0;
    double bce_part = 0.0;
    double dice_value = 0.0;
};

/// Weight-regression quality. R² is absent when the actual weights have zero
/// variance (or fewer than two samples).
struct Metrics {
    double mape = 0.0;
    double mae = 0.0;
    double mse = 0.0;
    std::optional<double> r_squared;
};

/// Linear learning-rate annealing with a reduced rate for encoder layers.
struct LrSchedule {
    double lr_start = 1e-3;
    double lr_end = 1e-5;
    int total_epochs = 100;
    double encoder_factor = 10.0;

    void validate() const
    {
        if (!(lr_end > 0.0) || !(lr_start >= lr_end)) { throw InvalidArgument("schedule: need lr_start >= lr_end > 0"); }
        if (total_epochs < 1) { throw InvalidArgument("schedule: total_epochs must be at least 1"); }
        if (!(encoder_factor >= 1.0)) { throw InvalidArgument("schedule: encoder_factor must be at least 1"); }
    }
};

inline constexpr double kDefaultBceEps = 1e-7;
inline constexpr double kDefaultDiceSmooth = 1e-6;

namespace detail {

inline void require_same_shape(const MaskImage& y, const ProbMap& p, const char* what)
{
    if (!y.same_shape(p)) { throw InvalidArgument(std::string(what) + ": mask and map dimensions differ"); }
}

inline void require_same_length(std::span<const double> a, std::span<const double> p, const char* what)
{
    if (a.size() != p.size()) { throw InvalidArgument(std::string(what) + ": length mismatch"); }
    if (a.empty()) { throw InvalidArgument(std::string(what) + ": empty input"); }
}

} // namespace detail

/// Pixel-mean binary cross entropy with predictions clamped to [eps, 1-eps].
inline double bce(const MaskImage& y, const ProbMap& p, double eps = kDefaultBceEps)
{
    detail::require_same_shape(y, p, "bce");
    if (!(eps > 0.0 && eps < 0.5)) { throw InvalidArgument("bce: eps must lie in (0, 0.5)"); }
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double q = std::clamp(p.pixels()[i], eps, 1.0 - eps);
        sum -= y.pixels()[i] ? std::log(q) : std::log1p(-q);
    }
    return sum / static_cast<double>(y.size());
}

/// Soft Dice coefficient: (2·Σyp + smooth) / (Σy + Σp + smooth).
inline double dice(const MaskImage& y, const ProbMap& p, double smooth = kDefaultDiceSmooth)
{
    detail::require_same_shape(y, p, "dice");
    if (!(smooth >= 0.0)) { throw InvalidArgument("dice: smooth must be non-negative"); }
    double inter = 0.0, sy = 0.0, sp = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double yi = y.pixels()[i];
        const double pi = p.pixels()[i];
        inter += yi * pi;
        sy += yi;
        sp += pi;
    }
    const double denom = sy + sp + smooth;
    if (denom == 0.0) { throw InvalidArgument("dice: undefined for empty mask and map with smooth = 0"); }
    return (2.0 * inter + smooth) / denom;
}

/// bce + (1 - dice)
inline LossValue loss_linear_dice(const MaskImage& y, const ProbMap& p, double eps = kDefaultBceEps,
                                  double smooth = kDefaultDiceSmooth)
{
    LossValue v;
    v.bce_part = bce(y, p, eps);
    v.dice_value = dice(y, p, smooth);
    v.total = v.bce_part + (1.0 - v.dice_value);
    return v;
}

/// bce - ln(dice); smooth must be positive so the log stays finite.
inline LossValue loss_log_dice(const MaskImage& y, const ProbMap& p, double eps = kDefaultBceEps,
                               double smooth = kDefaultDiceSmooth)
{
    if (!(smooth > 0.0)) { throw InvalidArgument("loss_log_dice: smooth must be positive"); }
    LossValue v;
    v.bce_part = bce(y, p, eps);
    v.dice_value = dice(y, p, smooth);
    v.total = v.bce_part - std::log(v.dice_value);
    return v;
}

/// Mean absolute percentage error, in percent. Actual values must be positive.
inline double mape(std::span<const double> actual, std::span<const double> predicted)
{
    detail::require_same_length(actual, predicted, "mape");
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (!(actual[i] > 0.0)) { throw InvalidArgument("mape: actual values must be positive"); }
        sum += std::abs(actual[i] - predicted[i]) / actual[i];
    }
    return 100.0 * sum / static_cast<double>(actual.size());
}

inline double mae(std::span<const double> actual, std::span<const double> predicted)
{
    detail::require_same_length(actual, predicted, "mae");
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) { sum += std::abs(actual[i] - predicted[i]); }
    return sum / static_cast<double>(actual.size());
}

inline double mse(std::span<const double> actual, std::span<const double> predicted)
{
    detail::require_same_length(actual, predicted, "mse");
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double e = actual[i] - predicted[i];
        sum += e * e;
    }
    return sum / static_cast<double>(actual.size());
}

/// Coefficient of determination, 1 - SSres/SStot.
inline double r_squared(std::span<const double> actual, std::span<const double> predicted)
{
    detail::require_same_length(actual, predicted, "r_squared");
    if (actual.size() < 2) { throw InvalidArgument("r_squared: need at least two values"); }
    double mean = 0.0;
    for (double a : actual) { mean += a; }
    mean /= static_cast<double>(actual.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
        ss_tot += (actual[i] - mean) * (actual[i] - mean);
    }
    if (ss_tot == 0.0) { throw InvalidArgument("r_squared: actual values have zero variance"); }
    return 1.0 - ss_res / ss_tot;
}

/// All four metrics; R² is left empty instead of throwing when undefined.
inline Metrics compute_metrics(std::span<const double> actual, std::span<const double> predicted)
{
    Metrics m;
    m.mape = mape(actual, predicted);
    m.mae = mae(actual, predicted);
    m.mse = mse(actual, predicted);
    if (actual.size() >= 2 && std::adjacent_find(actual.begin(), actual.end(), std::not_equal_to<>()) != actual.end()) {
        m.r_squared = r_squared(actual, predicted);
    }
    return m;
}

/// Learning rate at `epoch`, interpolated linearly from lr_start to lr_end.
inline double lr_at(int epoch, const LrSchedule& s = {}, bool is_encoder = false)
{
    s.validate();
    if (epoch < 0 || epoch > s.total_epochs) {
        throw InvalidArgument("lr_at: epoch " + std::to_string(epoch) + " outside [0, "
                              + std::to_string(s.total_epochs) + "]");
    }
    const double t = static_cast<double>(epoch) / static_cast<double>(s.total_epochs);
    const double base = epoch == s.total_epochs ? s.lr_end : s.lr_start - t * (s.lr_start - s.lr_end);
    return is_encoder ? base / s.encoder_factor : base;
}

} // namespace fishweight

#endif // FISHWEIGHT_TRAINMATH_HPP

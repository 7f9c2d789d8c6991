#ifndef FISHWEIGHT_FITTING_HPP
#define FISHWEIGHT_FITTING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fishweight/dataset.hpp"
#include "fishweight/error.hpp"
#include "fishweight/random.hpp"
#include "fishweight/trainmath.hpp"

namespace fishweight {

/// Exponent of the one-factor model: weight grows as area^(3/2).
inline constexpr double kIsometricExponent = 1.5;

enum class ModelKind { OneFactor, TwoFactor };
enum class FitMethod { LogMse, LinearMse, RansacLog };
enum class RSquaredScale { Linear, Log };

inline std::string_view to_string(ModelKind k) { return k == ModelKind::OneFactor ? "one-factor" : "two-factor"; }

inline std::string_view to_string(FitMethod m)
{
    switch (m) {
    case FitMethod::LogMse: return "log-mse";
    case FitMethod::LinearMse: return "linear-mse";
    case FitMethod::RansacLog: return "ransac-log";
    }
    return "";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s)
{
    if (s == "one-factor") { return ModelKind::OneFactor; }
    if (s == "two-factor") { return ModelKind::TwoFactor; }
    return std::nullopt;
}

inline std::optional<FitMethod> parse_fit_method(std::string_view s)
{
    if (s == "log-mse") { return FitMethod::LogMse; }
    if (s == "linear-mse") { return FitMethod::LinearMse; }
    if (s == "ransac-log") { return FitMethod::RansacLog; }
    return std::nullopt;
}

/// Weight-from-area power law, weight[g] = a * area[cm²]^b.
struct PowerLawModel {
    double a = 1.0;
    double b = kIsometricExponent;
    ModelKind kind = ModelKind::TwoFactor;
    FitMethod method = FitMethod::LogMse;

    void validate() const
    {
        if (!(a > 0.0) || !std::isfinite(a)) { throw InvalidArgument("model: coefficient a must be positive"); }
        if (!std::isfinite(b)) { throw InvalidArgument("model: exponent b must be finite"); }
        if (kind == ModelKind::OneFactor && b != kIsometricExponent) {
            throw InvalidArgument("model: one-factor model requires b = 1.5");
        }
    }

    static PowerLawModel one_factor(double c, FitMethod method = FitMethod::LogMse)
    {
        return {c, kIsometricExponent, ModelKind::OneFactor, method};
    }

    static PowerLawModel two_factor(double a, double b, FitMethod method = FitMethod::LogMse)
    {
        return {a, b, ModelKind::TwoFactor, method};
    }
};

struct RansacConfig {
    int iterations = 1000;
    /// Inlier band on |ln weight residual|; 0.10 is about a 10% multiplicative miss.
    double inlier_threshold = 0.10;
    double min_inlier_fraction = 0.5;
    std::uint64_t seed = 0;

    void validate() const
    {
        if (iterations < 1) { throw InvalidArgument("ransac: iterations must be at least 1"); }
        if (!(inlier_threshold > 0.0)) { throw InvalidArgument("ransac: inlier_threshold must be positive"); }
        if (!(min_inlier_fraction >= 0.0 && min_inlier_fraction <= 1.0)) {
            throw InvalidArgument("ransac: min_inlier_fraction must lie in [0, 1]");
        }
    }
};

struct LmConfig {
    double rel_tolerance = 1e-12;
    int max_iterations = 200;
};

struct FitReport {
    PowerLawModel model;
    Metrics metrics;
    /// One flag per fit-set sample; all set for non-robust fits.
    std::vector<bool> inlier_flags;
    /// ln(weight) - ln(predicted weight), per sample.
    std::vector<double> residuals;
    /// Optimizer iterations (linear-scale fit) or RANSAC hypotheses tried.
    int iterations = 0;

    std::size_t inlier_count() const { return static_cast<std::size_t>(std::count(inlier_flags.begin(), inlier_flags.end(), true)); }
};

/// A fit that could not meet its acceptance condition. `best()` carries the
/// final or best state reached.
class FitError : public Error {
public:
    FitError(const std::string& msg, FitReport best) : Error(msg), m_best(std::move(best)) {}
    const FitReport& best() const noexcept { return m_best; }

private:
    FitReport m_best;
};

/// Predicted weight in grams for an area in cm².
inline double predict(const PowerLawModel& model, double area)
{
    if (!(area >= 0.0)) { throw InvalidArgument("predict: area must be non-negative"); }
    if (area == 0.0) { return 0.0; }
    return model.a * std::pow(area, model.b);
}

namespace detail {

struct LogPoints {
    std::vector<double> x; // ln area
    std::vector<double> y; // ln weight
};

inline LogPoints log_points(const Dataset& ds, std::size_t min_size)
{
    if (ds.size() < std::max<std::size_t>(min_size, 1)) {
        throw InvalidArgument("fit: need at least " + std::to_string(std::max<std::size_t>(min_size, 1)) + " samples, got "
                              + std::to_string(ds.size()));
    }
    LogPoints pts;
    pts.x.reserve(ds.size());
    pts.y.reserve(ds.size());
    for (const auto& s : ds.samples) {
        if (!(s.area > 0.0) || !(s.weight > 0.0)) {
            throw InvalidArgument("fit: sample '" + s.id + "' needs positive area and weight");
        }
        pts.x.push_back(std::log(s.area));
        pts.y.push_back(std::log(s.weight));
    }
    return pts;
}

struct Line {
    double intercept = 0.0;
    double slope = 0.0;
};

/// Ordinary least squares of y on x over the selected points; nullopt when the
/// selected x values are all equal.
inline std::optional<Line> ols(std::span<const double> x, std::span<const double> y, const std::vector<bool>* select = nullptr)
{
    double n = 0.0, mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (select && !(*select)[i]) { continue; }
        n += 1.0;
        mx += x[i];
        my += y[i];
    }
    if (n < 2.0) { return std::nullopt; }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (select && !(*select)[i]) { continue; }
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) { return std::nullopt; }
    const double slope = sxy / sxx;
    return Line{my - slope * mx, slope};
}

} // namespace detail

/// ln(weight) - ln(predict(area)) for every sample.
inline std::vector<double> log_residuals(const PowerLawModel& model, const Dataset& ds)
{
    std::vector<double> r;
    r.reserve(ds.size());
    for (const auto& s : ds.samples) { r.push_back(std::log(s.weight) - std::log(model.a) - model.b * std::log(s.area)); }
    return r;
}

/// Metrics of `model` over `ds`; R² is left empty when undefined.
inline Metrics fit_metrics(const PowerLawModel& model, const Dataset& ds, RSquaredScale scale = RSquaredScale::Linear)
{
    std::vector<double> actual = ds.weights();
    std::vector<double> predicted;
    predicted.reserve(ds.size());
    for (const auto& s : ds.samples) { predicted.push_back(predict(model, s.area)); }
    Metrics m = compute_metrics(actual, predicted);
    if (scale == RSquaredScale::Log && m.r_squared) {
        for (auto& v : actual) { v = std::log(v); }
        for (auto& v : predicted) { v = std::log(v); }
        m.r_squared = r_squared(actual, predicted);
    }
    return m;
}

namespace detail {

inline FitReport make_report(const PowerLawModel& model, const Dataset& ds, std::vector<bool> flags = {}, int iterations = 0)
{
    FitReport r;
    r.model = model;
    r.metrics = fit_metrics(model, ds);
    r.residuals = log_residuals(model, ds);
    r.inlier_flags = flags.empty() ? std::vector<bool>(ds.size(), true) : std::move(flags);
    r.iterations = iterations;
    return r;
}

} // namespace detail

/// One-factor model by least squares in log space:
/// ln c = mean(ln M - 1.5 ln S).
inline FitReport fit_one_factor_log(const Dataset& ds)
{
    const auto pts = detail::log_points(ds, 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < pts.x.size(); ++i) { sum += pts.y[i] - kIsometricExponent * pts.x[i]; }
    const double c = std::exp(sum / static_cast<double>(pts.x.size()));
    return detail::make_report(PowerLawModel::one_factor(c, FitMethod::LogMse), ds);
}

/// Two-factor model by ordinary least squares of ln M on ln S.
inline FitReport fit_two_factor_log(const Dataset& ds)
{
    const auto pts = detail::log_points(ds, 2);
    const auto line = detail::ols(pts.x, pts.y);
    if (!line) { throw InvalidArgument("fit: all areas are equal, exponent is not identifiable"); }
    return detail::make_report(PowerLawModel::two_factor(std::exp(line->intercept), line->slope, FitMethod::LogMse), ds);
}

/**
 * Least squares on the linear weight scale, minimizing Σ(M - a·S^b)².
 *
 * The one-factor kind has the closed form a = Σ M·S^1.5 / Σ S^3. The
 * two-factor kind runs Levenberg-Marquardt over (ln a, b), starting from
 * `init` or from the log-space fit, and stops once an accepted step changes
 * the SSE by less than `lm.rel_tolerance` relative. Exceeding
 * `lm.max_iterations` raises FitError with the last state.
 */
inline FitReport fit_linear_mse(const Dataset& ds, ModelKind kind, std::optional<PowerLawModel> init = std::nullopt,
                                const LmConfig& lm = {})
{
    const auto pts = detail::log_points(ds, kind == ModelKind::OneFactor ? 1 : 2);
    if (kind == ModelKind::OneFactor) {
        double num = 0.0, den = 0.0;
        for (const auto& s : ds.samples) {
            const double s15 = std::pow(s.area, kIsometricExponent);
            num += s.weight * s15;
            den += s15 * s15;
        }
        return detail::make_report(PowerLawModel::one_factor(num / den, FitMethod::LinearMse), ds);
    }

    PowerLawModel start = init ? *init : fit_two_factor_log(ds).model;
    start.validate();
    double log_a = std::log(start.a);
    double b = start.b;
    const std::size_t n = pts.x.size();
    const auto& weights = ds.samples;

    auto sse_at = [&](double la, double bb) {
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = weights[i].weight - std::exp(la + bb * pts.x[i]);
            sse += r * r;
        }
        return sse;
    };

    double scale = 0.0;
    for (const auto& s : weights) { scale += s.weight * s.weight; }

    double sse = sse_at(log_a, b);
    double lambda = 1e-3;
    int iter = 0;
    bool converged = sse <= scale * 1e-30;
    while (!converged && iter < lm.max_iterations) {
        ++iter;
        // Normal equations for the model Jacobian J = [f, f·ln S].
        double jtj00 = 0.0, jtj01 = 0.0, jtj11 = 0.0, g0 = 0.0, g1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = std::exp(log_a + b * pts.x[i]);
            const double r = weights[i].weight - f;
            const double d0 = f;
            const double d1 = f * pts.x[i];
            jtj00 += d0 * d0;
            jtj01 += d0 * d1;
            jtj11 += d1 * d1;
            g0 += d0 * r;
            g1 += d1 * r;
        }
        bool accepted = false;
        while (!accepted && lambda < 1e16) {
            const double m00 = jtj00 * (1.0 + lambda);
            const double m11 = jtj11 * (1.0 + lambda);
            const double det = m00 * m11 - jtj01 * jtj01;
            if (det > 0.0 && std::isfinite(det)) {
                const double step0 = (m11 * g0 - jtj01 * g1) / det;
                const double step1 = (m00 * g1 - jtj01 * g0) / det;
                const double trial = sse_at(log_a + step0, b + step1);
                if (std::isfinite(trial) && trial < sse) {
                    log_a += step0;
                    b += step1;
                    const double rel = (sse - trial) / sse;
                    sse = trial;
                    lambda = std::max(lambda / 10.0, 1e-15);
                    accepted = true;
                    converged = rel < lm.rel_tolerance || sse <= scale * 1e-30;
                    break;
                }
            }
            lambda *= 10.0;
        }
        // No downhill step at any damping: the current point is a minimum to
        // working precision.
        if (!accepted) { converged = true; }
    }

    auto report = detail::make_report(PowerLawModel::two_factor(std::exp(log_a), b, FitMethod::LinearMse), ds, {}, iter);
    if (!converged) {
        throw FitError("linear-mse fit did not converge in " + std::to_string(lm.max_iterations) + " iterations", report);
    }
    return report;
}

/**
 * Robust two-factor fit by RANSAC on (ln S, ln M).
 *
 * Hypothesis i draws two distinct points from a generator keyed by
 * (seed, i), so results do not depend on evaluation order. A hypothesis
 * scores by consensus size, ties going to the lower inlier SSE and then to
 * the earlier hypothesis. The returned model is the least-squares refit on
 * the best consensus set, whose members are the inlier flags. If the best
 * consensus is smaller than min_inlier_fraction·n, FitError carries it.
 */
inline FitReport fit_ransac_log(const Dataset& ds, const RansacConfig& cfg = {})
{
    cfg.validate();
    const auto pts = detail::log_points(ds, 2);
    const std::size_t n = pts.x.size();

    std::size_t best_count = 0;
    double best_sse = std::numeric_limits<double>::infinity();
    std::vector<bool> best_flags;
    detail::Line best_line;

    std::vector<bool> flags(n);
    for (int it = 0; it < cfg.iterations; ++it) {
        Rng rng(cfg.seed, static_cast<std::uint64_t>(it));
        const std::size_t i1 = rng.below(n);
        std::size_t i2 = rng.below(n - 1);
        if (i2 >= i1) { ++i2; }
        const double dx = pts.x[i2] - pts.x[i1];
        if (dx == 0.0) { continue; }
        const double slope = (pts.y[i2] - pts.y[i1]) / dx;
        const double intercept = pts.y[i1] - slope * pts.x[i1];

        std::size_t count = 0;
        double sse = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double r = pts.y[k] - intercept - slope * pts.x[k];
            flags[k] = std::abs(r) <= cfg.inlier_threshold;
            if (flags[k]) {
                ++count;
                sse += r * r;
            }
        }
        if (count > best_count || (count == best_count && count > 0 && sse < best_sse)) {
            best_count = count;
            best_sse = sse;
            best_flags = flags;
            best_line = {intercept, slope};
        }
    }
    if (best_count == 0) {
        throw InvalidArgument("ransac: no non-degenerate hypothesis (areas may all be equal)");
    }

    const auto refit = detail::ols(pts.x, pts.y, &best_flags);
    const detail::Line line = refit ? *refit : best_line;
    auto report = detail::make_report(PowerLawModel::two_factor(std::exp(line.intercept), line.slope, FitMethod::RansacLog),
                                      ds, best_flags, cfg.iterations);
    const double needed = cfg.min_inlier_fraction * static_cast<double>(n);
    if (static_cast<double>(best_count) < needed) {
        throw FitError("ransac: best consensus " + std::to_string(best_count) + " of " + std::to_string(n)
                           + " samples is below min_inlier_fraction",
                       report);
    }
    return report;
}

/// Dispatches on (kind, method). RANSAC applies to the two-factor kind only.
inline FitReport fit(const Dataset& ds, ModelKind kind, FitMethod method, const RansacConfig& ransac = {})
{
    switch (method) {
    case FitMethod::LogMse: return kind == ModelKind::OneFactor ? fit_one_factor_log(ds) : fit_two_factor_log(ds);
    case FitMethod::LinearMse: return fit_linear_mse(ds, kind);
    case FitMethod::RansacLog:
        if (kind != ModelKind::TwoFactor) { throw InvalidArgument("ransac-log fitting requires the two-factor model"); }
        return fit_ransac_log(ds, ransac);
    }
    throw InvalidArgument("unknown fit method");
}

/// Held-out evaluation. Unlike fit-set metrics, a dataset of two or more
/// samples with constant weight is an error because R² is undefined; a single
/// sample leaves R² empty.
inline Metrics evaluate(const PowerLawModel& model, const Dataset& ds, RSquaredScale scale = RSquaredScale::Linear)
{
    model.validate();
    if (ds.empty()) { throw InvalidArgument("evaluate: empty dataset"); }
    for (const auto& s : ds.samples) {
        if (!(s.weight > 0.0)) { throw InvalidArgument("evaluate: sample '" + s.id + "' has non-positive weight"); }
    }
    Metrics m = fit_metrics(model, ds, scale);
    if (ds.size() >= 2 && !m.r_squared) { throw InvalidArgument("evaluate: r_squared undefined, actual weights have zero variance"); }
    return m;
}

struct FlaggedSample {
    Sample sample;
    double predicted = 0.0;
    /// 100·|M - predicted| / M
    double relative_error = 0.0;
};

/// Samples whose relative prediction error exceeds `rel_threshold` percent,
/// largest error first.
inline std::vector<FlaggedSample> flag_outliers(const PowerLawModel& model, const Dataset& ds, double rel_threshold)
{
    if (!(rel_threshold > 0.0)) { throw InvalidArgument("flag_outliers: threshold must be positive"); }
    std::vector<FlaggedSample> out;
    for (const auto& s : ds.samples) {
        const double p = predict(model, s.area);
        const double err = 100.0 * std::abs(s.weight - p) / s.weight;
        if (err > rel_threshold) { out.push_back({s, p, err}); }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const FlaggedSample& l, const FlaggedSample& r) { return l.relative_error > r.relative_error; });
    return out;
}

} // namespace fishweight

#endif // FISHWEIGHT_FITTING_HPP

#ifndef FISHWEIGHT_SERIALIZE_HPP
#define FISHWEIGHT_SERIALIZE_HPP

// JSON forms of models, reports and configs, plus the CSV tables written next
// to them for plotting.

#include <cmath>
#include <set>
#include <string>

#include "json.hpp"

#include "fishweight/augment.hpp"
#include "fishweight/dataset.hpp"
#include "fishweight/error.hpp"
#include "fishweight/fitting.hpp"
#include "fishweight/synth.hpp"
#include "fishweight/text.hpp"
#include "fishweight/trainmath.hpp"

namespace fishweight {

using json = nlohmann::ordered_json;

namespace detail {

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> known, const char* what)
{
    std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) { throw ParseError(std::string(what) + ": unknown field '" + key + "'"); }
    }
}

template <typename T>
T get_field(const json& j, const char* key, const char* what)
{
    if (!j.contains(key)) { throw ParseError(std::string(what) + ": missing field '" + key + "'"); }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ParseError(std::string(what) + ": field '" + key + "' has the wrong type");
    }
}

template <typename T>
void read_optional(const json& j, const char* key, T& out, const char* what)
{
    if (j.contains(key)) { out = get_field<T>(j, key, what); }
}

} // namespace detail

inline json to_json(const PowerLawModel& m)
{
    return json{{"kind", to_string(m.kind)}, {"method", to_string(m.method)}, {"a", m.a}, {"b", m.b}};
}

/// Parses `{"kind","method","a","b"}`. A document with a "model" object (a
/// fit report) is accepted too.
inline PowerLawModel model_from_json(const json& doc)
{
    constexpr const char* what = "model JSON";
    if (!doc.is_object()) { throw ParseError("model JSON: expected an object"); }
    const json& j = doc.contains("model") && doc.at("model").is_object() ? doc.at("model") : doc;
    PowerLawModel m;
    const auto kind = parse_model_kind(detail::get_field<std::string>(j, "kind", what));
    if (!kind) { throw ParseError("model JSON: field 'kind' must be one-factor or two-factor"); }
    const auto method = parse_fit_method(detail::get_field<std::string>(j, "method", what));
    if (!method) { throw ParseError("model JSON: field 'method' must be log-mse, linear-mse or ransac-log"); }
    m.kind = *kind;
    m.method = *method;
    m.a = detail::get_field<double>(j, "a", what);
    m.b = detail::get_field<double>(j, "b", what);
    try {
        m.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what());
    }
    return m;
}

inline json to_json(const Metrics& m)
{
    json j{{"mape", m.mape}, {"mae", m.mae}, {"mse", m.mse}};
    j["r_squared"] = m.r_squared ? json(*m.r_squared) : json(nullptr);
    return j;
}

inline json to_json(const FitReport& r, const Dataset& ds)
{
    json samples = json::array();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& s = ds.samples[i];
        samples.push_back(json{{"id", s.id},
                               {"area_cm2", s.area},
                               {"weight_g", s.weight},
                               {"predicted_g", predict(r.model, s.area)},
                               {"residual_ln", r.residuals[i]},
                               {"inlier", static_cast<bool>(r.inlier_flags[i])}});
    }
    return json{{"model", to_json(r.model)},
                {"metrics", to_json(r.metrics)},
                {"n", ds.size()},
                {"inliers", r.inlier_count()},
                {"iterations", r.iterations},
                {"samples", std::move(samples)}};
}

/// Per-sample table for weight-vs-area plots on linear and log-log axes.
inline std::string residuals_csv(const FitReport& r, const Dataset& ds)
{
    using text::format_number;
    std::string out = "id,area_cm2,weight_g,predicted_g,ln_area,ln_weight,ln_predicted,residual_ln,inlier\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& s = ds.samples[i];
        const double p = predict(r.model, s.area);
        out += text::quote_csv_field(s.id) + ',' + format_number(s.area) + ',' + format_number(s.weight) + ','
             + format_number(p) + ',' + format_number(std::log(s.area)) + ',' + format_number(std::log(s.weight)) + ','
             + format_number(std::log(p)) + ',' + format_number(r.residuals[i]) + ','
             + (r.inlier_flags[i] ? "1" : "0") + '\n';
    }
    return out;
}

inline std::string outliers_csv(const std::vector<FlaggedSample>& flagged)
{
    using text::format_number;
    std::string out = "id,area_cm2,weight_g,predicted_g,relative_error_pct\n";
    for (const auto& f : flagged) {
        out += text::quote_csv_field(f.sample.id) + ',' + format_number(f.sample.area) + ','
             + format_number(f.sample.weight) + ',' + format_number(f.predicted) + ','
             + format_number(f.relative_error) + '\n';
    }
    return out;
}

inline json to_json(const RansacConfig& c)
{
    return json{{"iterations", c.iterations},
                {"inlier_threshold", c.inlier_threshold},
                {"min_inlier_fraction", c.min_inlier_fraction},
                {"seed", c.seed}};
}

inline json to_json(const SynthConfig& c)
{
    return json{{"a", c.a},
                {"b", c.b},
                {"n", c.n},
                {"area_range", {c.area_min, c.area_max}},
                {"ln_noise_sigma", c.ln_noise_sigma},
                {"outlier_fraction", c.outlier_fraction},
                {"outlier_multipliers", c.outlier_multipliers},
                {"seed", c.seed}};
}

inline json to_json(const SilhouetteSpec& s)
{
    return json{{"body_length", s.body_length},
                {"aspect", s.aspect},
                {"fins", s.fins},
                {"mm_per_pixel", s.mm_per_pixel},
                {"body_exponent", s.body_exponent},
                {"fin_area_ratio", s.fin_area_ratio}};
}

inline json to_json(const LrSchedule& s)
{
    return json{{"lr_start", s.lr_start},
                {"lr_end", s.lr_end},
                {"total_epochs", s.total_epochs},
                {"encoder_factor", s.encoder_factor}};
}

inline json to_json(const AugmentConfig& c)
{
    return json{{"rotation_range", c.rotation_range},
                {"scale_range", {c.scale_min, c.scale_max}},
                {"enable_scale", c.enable_scale},
                {"preserve_calibration", c.preserve_calibration},
                {"crop", c.crop},
                {"flip_prob", c.flip_prob},
                {"blur_prob", c.blur_prob},
                {"clahe_prob", c.clahe_prob},
                {"clahe", {{"clip_limit", c.clahe.clip_limit}, {"tiles", {c.clahe.tiles_x, c.clahe.tiles_y}}}},
                {"seed", c.seed}};
}

/// Missing fields keep their defaults; unknown fields are rejected.
inline AugmentConfig augment_config_from_json(const json& j)
{
    constexpr const char* what = "augment config";
    if (!j.is_object()) { throw ParseError("augment config: expected an object"); }
    detail::reject_unknown_keys(j,
                                {"rotation_range", "scale_range", "enable_scale", "preserve_calibration", "crop",
                                 "flip_prob", "blur_prob", "clahe_prob", "clahe", "seed"},
                                what);
    AugmentConfig c;
    detail::read_optional(j, "rotation_range", c.rotation_range, what);
    if (j.contains("scale_range")) {
        const auto r = detail::get_field<std::vector<double>>(j, "scale_range", what);
        if (r.size() != 2) { throw ParseError("augment config: field 'scale_range' needs two values"); }
        c.scale_min = r[0];
        c.scale_max = r[1];
    }
    detail::read_optional(j, "enable_scale", c.enable_scale, what);
    detail::read_optional(j, "preserve_calibration", c.preserve_calibration, what);
    detail::read_optional(j, "crop", c.crop, what);
    detail::read_optional(j, "flip_prob", c.flip_prob, what);
    detail::read_optional(j, "blur_prob", c.blur_prob, what);
    detail::read_optional(j, "clahe_prob", c.clahe_prob, what);
    detail::read_optional(j, "seed", c.seed, what);
    if (j.contains("clahe")) {
        const json& cl = j.at("clahe");
        if (!cl.is_object()) { throw ParseError("augment config: field 'clahe' must be an object"); }
        detail::reject_unknown_keys(cl, {"clip_limit", "tiles"}, "augment config clahe");
        detail::read_optional(cl, "clip_limit", c.clahe.clip_limit, what);
        if (cl.contains("tiles")) {
            const auto t = detail::get_field<std::vector<std::size_t>>(cl, "tiles", what);
            if (t.size() != 2) { throw ParseError("augment config: field 'tiles' needs two values"); }
            c.clahe.tiles_x = t[0];
            c.clahe.tiles_y = t[1];
        }
    }
    try {
        c.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what());
    }
    return c;
}

} // namespace fishweight

#endif // FISHWEIGHT_SERIALIZE_HPP

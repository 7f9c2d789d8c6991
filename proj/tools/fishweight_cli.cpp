// fishweight: command-line front end for weight-from-area modelling.
//
//   fishweight gen samples     synthetic area-weight CSV plus truth flags
//   fishweight gen silhouettes whole/no-fins masks plus calibration CSV
//   fishweight fit             fit a power-law model, write a report
//   fishweight eval            held-out metrics and flagged outliers
//   fishweight predict         weight for an area or a mask
//   fishweight augment         seeded image-mask augmentations
//   fishweight schedule        per-epoch learning-rate table
//
// Errors go to stderr as one JSON line; the exit code is nonzero.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fishweight/fishweight.hpp"

namespace fs = std::filesystem;
using namespace fishweight;

namespace {

struct Diagnostic : Error {
    json extra;
    Diagnostic(const std::string& msg, json details) : Error(msg), extra(std::move(details)) {}
};

void emit(const std::optional<std::string>& out, const std::string& contents)
{
    if (out && !out->empty()) {
        text::write_file_atomic(*out, contents);
    } else {
        std::cout << contents;
        std::cout.flush();
    }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

Dataset load_dataset(const std::string& path, const std::string& schema)
{
    CsvSchema s = CsvSchema::Areas;
    if (schema == "masks") {
        s = CsvSchema::Masks;
    } else if (schema == "auto") {
        std::ifstream in(path, std::ios::binary);
        if (!in) { throw Error("cannot open " + path); }
        std::string header;
        std::getline(in, header);
        if (header.find("mask_path") != std::string::npos) { s = CsvSchema::Masks; }
    }
    return load_samples(path, s);
}

RSquaredScale parse_r2_scale(const std::string& s) { return s == "log" ? RSquaredScale::Log : RSquaredScale::Linear; }

PowerLawModel load_model(const std::string& path)
{
    json doc;
    try {
        doc = json::parse(text::read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": invalid JSON");
    }
    return model_from_json(doc);
}

// ---------------------------------------------------------------- gen

struct GenSamplesOptions {
    SynthConfig cfg;
    std::string out;
    std::string truth;
};

void run_gen_samples(const GenSamplesOptions& o)
{
    const auto synth = gen_samples(o.cfg);
    const fs::path out = o.out;
    fs::path truth = o.truth;
    if (truth.empty()) { truth = out.parent_path() / (out.stem().string() + ".truth.csv"); }

    save_samples(out, synth.dataset);
    std::string t = "id,is_outlier\n";
    for (std::size_t i = 0; i < synth.dataset.size(); ++i) {
        t += text::quote_csv_field(synth.dataset.samples[i].id) + (synth.is_outlier[i] ? ",1\n" : ",0\n");
    }
    text::write_file_atomic(truth, t);
    std::cout << dump(json{{"command", "gen samples"},
                           {"config", to_json(o.cfg)},
                           {"outputs", {out.string(), truth.string()}}});
}

struct GenSilhouettesOptions {
    std::size_t count = 1;
    double length = 300.0;
    std::optional<double> length_max;
    double aspect = 0.35;
    double mm_per_pixel = 1.0;
    double a = 0.124;
    double b = 1.55;
    double sigma = 0.0;
    double fin_area_ratio = 1.25;
    std::uint64_t seed = 0;
    std::string out;
    std::string image_format = "pgm";
};

void run_gen_silhouettes(const GenSilhouettesOptions& o)
{
    if (o.count == 0) { throw InvalidArgument("gen silhouettes: --count must be positive"); }
    const fs::path dir = o.out;
    fs::create_directories(dir);
    Rng rng(o.seed);
    std::string csv = "id,mask_path,weight_g,mm_per_pixel,cohort\n";
    json fish = json::array();
    for (std::size_t i = 0; i < o.count; ++i) {
        const double length = o.length_max ? rng.uniform(o.length, *o.length_max) : o.length;
        const double noise = rng.normal();
        SilhouetteSpec spec;
        spec.body_length = length;
        spec.aspect = o.aspect;
        spec.mm_per_pixel = o.mm_per_pixel;
        spec.fin_area_ratio = o.fin_area_ratio;
        // One weight per fish, generated from its body (no-fins) area.
        const double weight = o.a * std::pow(body_area_cm2(spec), o.b) * std::exp(o.sigma * noise);
        const std::string stem = detail::padded_id("fish_", i, o.count);
        for (bool fins : {true, false}) {
            spec.fins = fins;
            const std::string id = stem + (fins ? "_whole" : "_nofins");
            const std::string file = id + "." + o.image_format;
            io::write_mask(dir / file, gen_silhouette(spec));
            csv += id + "," + file + "," + text::format_number(weight) + "," + text::format_number(o.mm_per_pixel) + ","
                 + (fins ? "whole" : "no-fins") + "\n";
        }
        fish.push_back(json{{"id", stem}, {"body_length", length}, {"weight_g", weight}});
    }
    text::write_file_atomic(dir / "calibration.csv", csv);
    std::cout << dump(json{{"command", "gen silhouettes"},
                           {"config",
                            {{"count", o.count},
                             {"length", o.length},
                             {"length_max", o.length_max ? json(*o.length_max) : json(nullptr)},
                             {"aspect", o.aspect},
                             {"mm_per_pixel", o.mm_per_pixel},
                             {"a", o.a},
                             {"b", o.b},
                             {"sigma", o.sigma},
                             {"fin_area_ratio", o.fin_area_ratio},
                             {"seed", o.seed}}},
                           {"fish", fish},
                           {"outputs", {(dir / "calibration.csv").string()}}});
}

// ---------------------------------------------------------------- fit

struct FitOptions {
    std::string data;
    std::string schema = "auto";
    std::string kind = "two-factor";
    std::string method = "log-mse";
    RansacConfig ransac;
    std::string r2_scale = "linear";
    std::optional<std::string> out;
    std::string residuals;
    std::string format = "json";
};

void run_fit(const FitOptions& o)
{
    const auto kind = parse_model_kind(o.kind);
    const auto method = parse_fit_method(o.method);
    if (!kind) { throw InvalidArgument("fit: unknown --kind '" + o.kind + "'"); }
    if (!method) { throw InvalidArgument("fit: unknown --method '" + o.method + "'"); }
    const Dataset ds = load_dataset(o.data, o.schema);

    FitReport report;
    try {
        report = fit(ds, *kind, *method, o.ransac);
    } catch (const FitError& e) {
        throw Diagnostic(e.what(), json{{"best", to_json(e.best().model)}, {"inliers", e.best().inlier_count()}});
    }
    report.metrics = fit_metrics(report.model, ds, parse_r2_scale(o.r2_scale));

    json j = to_json(report, ds);
    json config{{"command", "fit"}, {"data", o.data}, {"kind", o.kind}, {"method", o.method}, {"r2_scale", o.r2_scale}};
    if (*method == FitMethod::RansacLog) { config["ransac"] = to_json(o.ransac); }
    j["config"] = std::move(config);

    if (!o.residuals.empty()) { text::write_file_atomic(o.residuals, residuals_csv(report, ds)); }
    emit(o.out, o.format == "csv" ? residuals_csv(report, ds) : dump(j));
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
    std::string model;
    std::string data;
    std::string schema = "auto";
    double threshold = 30.0;
    std::string r2_scale = "linear";
    std::optional<std::string> out;
    std::string outliers;
    std::string format = "json";
};

void run_eval(const EvalOptions& o)
{
    const PowerLawModel model = load_model(o.model);
    const Dataset ds = load_dataset(o.data, o.schema);
    const Metrics m = evaluate(model, ds, parse_r2_scale(o.r2_scale));
    const auto flagged = flag_outliers(model, ds, o.threshold);
    if (!o.outliers.empty()) { text::write_file_atomic(o.outliers, outliers_csv(flagged)); }
    if (o.format == "csv") {
        using text::format_number;
        emit(o.out, "n,mape,mae,mse,r_squared,flagged\n" + std::to_string(ds.size()) + "," + format_number(m.mape) + ","
                        + format_number(m.mae) + "," + format_number(m.mse) + ","
                        + (m.r_squared ? format_number(*m.r_squared) : std::string()) + ","
                        + std::to_string(flagged.size()) + "\n");
        return;
    }
    json flagged_ids = json::array();
    for (const auto& f : flagged) { flagged_ids.push_back(f.sample.id); }
    emit(o.out, dump(json{{"config",
                           {{"command", "eval"},
                            {"model", o.model},
                            {"data", o.data},
                            {"threshold", o.threshold},
                            {"r2_scale", o.r2_scale}}},
                          {"model", to_json(model)},
                          {"n", ds.size()},
                          {"metrics", to_json(m)},
                          {"flagged", flagged_ids}}));
}

// ---------------------------------------------------------------- predict

struct PredictOptions {
    std::string model;
    std::optional<double> area;
    std::string mask;
    std::optional<double> mm_per_pixel;
    std::string format;
};

void run_predict(const PredictOptions& o)
{
    const PowerLawModel model = load_model(o.model);
    double area = 0.0;
    if (!o.mask.empty()) {
        if (!o.mm_per_pixel) { throw InvalidArgument("predict: --mm-per-pixel is required with --mask"); }
        area = mask_area(io::read_mask(o.mask, *o.mm_per_pixel));
    } else if (o.area) {
        area = *o.area;
    } else {
        throw InvalidArgument("predict: give --area or --mask");
    }
    const double grams = predict(model, area);
    if (o.format == "json") {
        std::cout << json{{"area_cm2", area}, {"weight_g", grams}}.dump() << "\n";
    } else if (o.format == "csv") {
        std::cout << "area_cm2,weight_g\n" << text::format_number(area) << "," << text::format_number(grams) << "\n";
    } else {
        std::cout << text::format_number(grams) << "\n";
    }
}

// ---------------------------------------------------------------- augment

struct AugmentOptions {
    std::string image;
    std::string mask;
    std::string config;
    std::size_t draws = 1;
    std::optional<std::uint64_t> seed;
    double mm_per_pixel = 1.0;
    std::string out;
    std::string image_format;
};

void run_augment(const AugmentOptions& o)
{
    AugmentConfig cfg;
    if (!o.config.empty()) {
        json doc;
        try {
            doc = json::parse(text::read_file(o.config));
        } catch (const json::parse_error&) {
            throw ParseError(o.config + ": invalid JSON");
        }
        cfg = augment_config_from_json(doc);
    }
    if (o.seed) { cfg.seed = *o.seed; }
    const GrayImage img = io::read_gray(o.image, o.mm_per_pixel);
    const MaskImage mask = io::read_mask(o.mask, o.mm_per_pixel);
    if (!img.same_shape(mask)) { throw InvalidArgument("augment: image and mask dimensions differ"); }

    std::string ext = o.image_format;
    if (ext.empty()) { ext = fs::path(o.image).extension().string().substr(1); }
    const fs::path dir = o.out;
    fs::create_directories(dir);
    std::string params = "draw,angle,scale,crop_x,crop_y,hflip,vflip,blur_kernel,clahe\n";
    for (std::size_t d = 0; d < o.draws; ++d) {
        const auto p = draw_params(cfg, d, img.width(), img.height());
        const auto pair = apply_params(img, mask, cfg, p);
        const std::string stem = detail::padded_id("aug_", d, o.draws);
        io::write_gray(dir / (stem + "_image." + ext), pair.image);
        io::write_mask(dir / (stem + "_mask." + ext), pair.mask);
        params += std::to_string(d) + "," + text::format_number(p.angle) + "," + text::format_number(p.scale) + ","
                + std::to_string(p.crop_offset.x) + "," + std::to_string(p.crop_offset.y) + "," + (p.hflip ? "1" : "0")
                + "," + (p.vflip ? "1" : "0") + "," + std::to_string(p.blur_kernel) + "," + (p.clahe ? "1" : "0") + "\n";
    }
    text::write_file_atomic(dir / "augment_params.csv", params);
    std::cout << dump(json{{"command", "augment"},
                           {"config", to_json(cfg)},
                           {"image", o.image},
                           {"mask", o.mask},
                           {"draws", o.draws},
                           {"mm_per_pixel", o.mm_per_pixel}});
}

// ---------------------------------------------------------------- schedule

struct ScheduleOptions {
    LrSchedule schedule;
    std::optional<std::string> out;
    std::string format = "csv";
};

void run_schedule(const ScheduleOptions& o)
{
    o.schedule.validate();
    const auto& s = o.schedule;
    if (o.format == "json") {
        json rows = json::array();
        for (int e = 0; e <= s.total_epochs; ++e) {
            rows.push_back(json{{"epoch", e}, {"base_lr", lr_at(e, s)}, {"encoder_lr", lr_at(e, s, true)}});
        }
        emit(o.out, dump(json{{"schedule", to_json(s)}, {"epochs", rows}}));
        return;
    }
    std::string csv = "epoch,base_lr,encoder_lr\n";
    for (int e = 0; e <= s.total_epochs; ++e) {
        csv += std::to_string(e) + "," + text::format_number(lr_at(e, s)) + "," + text::format_number(lr_at(e, s, true)) + "\n";
    }
    emit(o.out, csv);
}

void report_error(const std::string& command, const std::string& type, const std::string& message, json extra = {})
{
    json j{{"error", message}, {"type", type}, {"command", command}};
    if (extra.is_object()) {
        for (auto& [k, v] : extra.items()) { j[k] = v; }
    }
    std::cerr << j.dump() << std::endl;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Fish weight from silhouette area: power-law fitting, evaluation and data tools"};
    app.require_subcommand(1);
    const std::vector<std::string> formats{"json", "csv"};

    // gen
    auto* gen = app.add_subcommand("gen", "Generate synthetic data");
    gen->require_subcommand(1);
    GenSamplesOptions gs;
    auto* gen_samples_cmd = gen->add_subcommand("samples", "Area-weight samples (CSV) plus truth flags");
    gen_samples_cmd->add_option("--a", gs.cfg.a, "Power-law coefficient")->capture_default_str();
    gen_samples_cmd->add_option("--b", gs.cfg.b, "Power-law exponent")->capture_default_str();
    gen_samples_cmd->add_option("--n", gs.cfg.n, "Number of samples")->capture_default_str();
    gen_samples_cmd->add_option("--area-min", gs.cfg.area_min, "Smallest area, cm²")->capture_default_str();
    gen_samples_cmd->add_option("--area-max", gs.cfg.area_max, "Largest area, cm²")->capture_default_str();
    gen_samples_cmd->add_option("--sigma", gs.cfg.ln_noise_sigma, "Log-normal weight noise std")->capture_default_str();
    gen_samples_cmd->add_option("--outlier-fraction", gs.cfg.outlier_fraction)->capture_default_str();
    gen_samples_cmd->add_option("--outlier-multipliers", gs.cfg.outlier_multipliers)->capture_default_str();
    gen_samples_cmd->add_option("--seed", gs.cfg.seed)->capture_default_str();
    gen_samples_cmd->add_option("--out", gs.out, "Schema-A CSV path")->required();
    gen_samples_cmd->add_option("--truth", gs.truth, "Truth-flag CSV path (default <out>.truth.csv)");

    GenSilhouettesOptions gsil;
    auto* gen_sil_cmd = gen->add_subcommand("silhouettes", "Whole and no-fins masks plus calibration CSV");
    gen_sil_cmd->add_option("--count", gsil.count)->capture_default_str();
    gen_sil_cmd->add_option("--length", gsil.length, "Body length, mm (lower bound with --length-max)")->capture_default_str();
    gen_sil_cmd->add_option("--length-max", gsil.length_max, "Upper body length, mm; lengths drawn uniformly");
    gen_sil_cmd->add_option("--aspect", gsil.aspect, "Body height / length")->capture_default_str();
    gen_sil_cmd->add_option("--mm-per-pixel", gsil.mm_per_pixel)->capture_default_str();
    gen_sil_cmd->add_option("--a", gsil.a)->capture_default_str();
    gen_sil_cmd->add_option("--b", gsil.b)->capture_default_str();
    gen_sil_cmd->add_option("--sigma", gsil.sigma, "Log-normal weight noise std")->capture_default_str();
    gen_sil_cmd->add_option("--fin-area-ratio", gsil.fin_area_ratio, "Whole / body area")->capture_default_str();
    gen_sil_cmd->add_option("--seed", gsil.seed)->capture_default_str();
    gen_sil_cmd->add_option("--out", gsil.out, "Output directory")->required();
    gen_sil_cmd->add_option("--image-format", gsil.image_format)
        ->check(CLI::IsMember({"pgm", "png"}))
        ->capture_default_str();

    // fit
    FitOptions fo;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a power-law weight model");
    fit_cmd->add_option("--data", fo.data, "Sample CSV")->required();
    fit_cmd->add_option("--schema", fo.schema)->check(CLI::IsMember({"auto", "areas", "masks"}))->capture_default_str();
    fit_cmd->add_option("--kind", fo.kind)->check(CLI::IsMember({"one-factor", "two-factor"}))->capture_default_str();
    fit_cmd->add_option("--method", fo.method)
        ->check(CLI::IsMember({"log-mse", "linear-mse", "ransac-log"}))
        ->capture_default_str();
    fit_cmd->add_option("--ransac-iterations", fo.ransac.iterations)->capture_default_str();
    fit_cmd->add_option("--ransac-threshold", fo.ransac.inlier_threshold, "Inlier band, ln units")->capture_default_str();
    fit_cmd->add_option("--ransac-min-inliers", fo.ransac.min_inlier_fraction, "Minimum consensus fraction")
        ->capture_default_str();
    fit_cmd->add_option("--seed", fo.ransac.seed)->capture_default_str();
    fit_cmd->add_option("--r2-scale", fo.r2_scale)->check(CLI::IsMember({"linear", "log"}))->capture_default_str();
    fit_cmd->add_option("--out", fo.out, "Output path (stdout if omitted)");
    fit_cmd->add_option("--residuals", fo.residuals, "Also write the per-sample residual CSV here");
    fit_cmd->add_option("--format", fo.format, "json report or csv residual table")
        ->check(CLI::IsMember(formats))
        ->capture_default_str();

    // eval
    EvalOptions eo;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a dataset and flag outliers");
    eval_cmd->add_option("--model", eo.model, "Model or fit-report JSON")->required();
    eval_cmd->add_option("--data", eo.data, "Sample CSV")->required();
    eval_cmd->add_option("--schema", eo.schema)->check(CLI::IsMember({"auto", "areas", "masks"}))->capture_default_str();
    eval_cmd->add_option("--threshold", eo.threshold, "Outlier relative-error threshold, percent")->capture_default_str();
    eval_cmd->add_option("--r2-scale", eo.r2_scale)->check(CLI::IsMember({"linear", "log"}))->capture_default_str();
    eval_cmd->add_option("--out", eo.out, "Metrics output (stdout if omitted)");
    eval_cmd->add_option("--outliers", eo.outliers, "Flagged-outlier CSV path");
    eval_cmd->add_option("--format", eo.format)->check(CLI::IsMember(formats))->capture_default_str();

    // predict
    PredictOptions po;
    auto* predict_cmd = app.add_subcommand("predict", "Predict weight (grams) from an area or a mask");
    predict_cmd->add_option("--model", po.model, "Model or fit-report JSON")->required();
    auto* area_opt = predict_cmd->add_option("--area", po.area, "Area, cm²");
    auto* mask_opt = predict_cmd->add_option("--mask", po.mask, "Mask image (.pgm/.png)");
    area_opt->excludes(mask_opt);
    predict_cmd->add_option("--mm-per-pixel", po.mm_per_pixel, "Mask calibration");
    predict_cmd->add_option("--format", po.format)->check(CLI::IsMember(formats));

    // augment
    AugmentOptions ao;
    auto* augment_cmd = app.add_subcommand("augment", "Write seeded augmentations of an image-mask pair");
    augment_cmd->add_option("--image", ao.image)->required();
    augment_cmd->add_option("--mask", ao.mask)->required();
    augment_cmd->add_option("--config", ao.config, "AugmentConfig JSON (defaults if omitted)");
    augment_cmd->add_option("--draws", ao.draws)->capture_default_str();
    augment_cmd->add_option("--seed", ao.seed, "Overrides the config seed");
    augment_cmd->add_option("--mm-per-pixel", ao.mm_per_pixel)->capture_default_str();
    augment_cmd->add_option("--out", ao.out, "Output directory")->required();
    augment_cmd->add_option("--image-format", ao.image_format, "pgm or png (default: input's)")
        ->check(CLI::IsMember({"pgm", "png"}));

    // schedule
    ScheduleOptions so;
    auto* schedule_cmd = app.add_subcommand("schedule", "Per-epoch learning-rate table");
    schedule_cmd->add_option("--lr-start", so.schedule.lr_start)->capture_default_str();
    schedule_cmd->add_option("--lr-end", so.schedule.lr_end)->capture_default_str();
    schedule_cmd->add_option("--epochs", so.schedule.total_epochs)->capture_default_str();
    schedule_cmd->add_option("--encoder-factor", so.schedule.encoder_factor)->capture_default_str();
    schedule_cmd->add_option("--out", so.out, "Output path (stdout if omitted)");
    schedule_cmd->add_option("--format", so.format)->check(CLI::IsMember(formats))->capture_default_str();

    std::string command = "fishweight";
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error(command, "UsageError", e.what());
        return 2;
    }

    try {
        if (gen_samples_cmd->parsed()) {
            command = "gen samples";
            run_gen_samples(gs);
        } else if (gen_sil_cmd->parsed()) {
            command = "gen silhouettes";
            run_gen_silhouettes(gsil);
        } else if (fit_cmd->parsed()) {
            command = "fit";
            run_fit(fo);
        } else if (eval_cmd->parsed()) {
            command = "eval";
            run_eval(eo);
        } else if (predict_cmd->parsed()) {
            command = "predict";
            run_predict(po);
        } else if (augment_cmd->parsed()) {
            command = "augment";
            run_augment(ao);
        } else if (schedule_cmd->parsed()) {
            command = "schedule";
            run_schedule(so);
        }
    } catch (const Diagnostic& e) {
        report_error(command, "FitError", e.what(), e.extra);
        return 1;
    } catch (const ParseError& e) {
        report_error(command, "ParseError", e.what(), e.row() ? json{{"row", e.row()}} : json{});
        return 1;
    } catch (const InvalidArgument& e) {
        report_error(command, "InvalidArgument", e.what());
        return 1;
    } catch (const std::exception& e) {
        report_error(command, "Error", e.what());
        return 1;
    }
    return 0;
}

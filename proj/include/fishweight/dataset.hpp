#ifndef FISHWEIGHT_DATASET_HPP
#define FISHWEIGHT_DATASET_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fishweight/error.hpp"
#include "fishweight/image_io.hpp"
#include "fishweight/imaging.hpp"
#include "fishweight/random.hpp"
#include "fishweight/text.hpp"

namespace fishweight {

/// One fish: silhouette area (cm²) and recorded weight (grams).
struct Sample {
    std::string id;
    double area = 0.0;
    double weight = 0.0;
    std::string cohort;
    /// Set when the area came from an empty mask (segmentation failure).
    bool zero_area = false;

    bool operator==(const Sample&) const = default;
};

struct Dataset {
    std::string name;
    std::vector<Sample> samples;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }

    std::vector<double> areas() const
    {
        std::vector<double> out;
        out.reserve(samples.size());
        for (const auto& s : samples) { out.push_back(s.area); }
        return out;
    }

    std::vector<double> weights() const
    {
        std::vector<double> out;
        out.reserve(samples.size());
        for (const auto& s : samples) { out.push_back(s.weight); }
        return out;
    }
};

struct SplitResult {
    Dataset train;
    Dataset validation;
    std::uint64_t seed = 0;
};

enum class CsvSchema {
    /// id,area_cm2,weight_g[,cohort]
    Areas,
    /// id,mask_path,weight_g,mm_per_pixel[,cohort]; areas measured from the masks
    Masks,
};

namespace detail {

inline int require_column(const text::CsvTable& t, const char* name)
{
    const int c = t.column(name);
    if (c < 0) { throw ParseError(std::string("missing column '") + name + "'", 1); }
    return c;
}

inline const std::string& field(const std::vector<std::string>& row, int col, std::size_t lineno, const char* name)
{
    if (col >= static_cast<int>(row.size())) {
        throw ParseError(std::string("missing field '") + name + "'", lineno);
    }
    return row[static_cast<std::size_t>(col)];
}

inline double numeric_field(const std::vector<std::string>& row, int col, std::size_t lineno, const char* name)
{
    double v = 0.0;
    if (!text::parse_number(field(row, col, lineno, name), v)) {
        throw ParseError(std::string("non-numeric value in '") + name + "'", lineno);
    }
    return v;
}

inline std::string trimmed(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) { return {}; }
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

} // namespace detail

/// Area of each mask becomes the sample area; an empty mask yields a
/// zero-area sample with `zero_area` set rather than an error.
struct MaskRecord {
    MaskImage mask;
    double weight = 0.0;
    std::string id;
    std::string cohort;
};

inline Dataset samples_from_masks(std::span<const MaskRecord> records, std::string name = {})
{
    Dataset ds{std::move(name), {}};
    ds.samples.reserve(records.size());
    for (const auto& r : records) {
        if (!(r.weight > 0.0)) { throw InvalidArgument("sample '" + r.id + "': weight must be positive"); }
        const double area = mask_area(r.mask);
        ds.samples.push_back(Sample{r.id, area, r.weight, r.cohort, area == 0.0});
    }
    return ds;
}

/**
 * Reads samples from a CSV file with a header row.
 *
 * Rows keep file order. Errors cite the 1-based file line: missing columns,
 * non-numeric fields, non-positive weights or areas, duplicate ids. For the
 * mask schema, relative mask paths resolve against the CSV's directory.
 */
inline Dataset load_samples(const std::filesystem::path& path, CsvSchema schema)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) { throw Error("cannot open " + path.string()); }
    const auto table = text::read_csv(in);

    Dataset ds{path.stem().string(), {}};
    const int c_id = detail::require_column(table, "id");
    const int c_weight = detail::require_column(table, "weight_g");
    const int c_cohort = table.column("cohort");
    int c_area = -1, c_mask = -1, c_scale = -1;
    if (schema == CsvSchema::Areas) {
        c_area = detail::require_column(table, "area_cm2");
    } else {
        c_mask = detail::require_column(table, "mask_path");
        c_scale = detail::require_column(table, "mm_per_pixel");
    }

    std::map<std::string, std::size_t> seen;
    for (const auto& [lineno, row] : table.rows) {
        Sample s;
        s.id = detail::trimmed(detail::field(row, c_id, lineno, "id"));
        if (s.id.empty()) { throw ParseError("empty id", lineno); }
        if (auto it = seen.find(s.id); it != seen.end()) {
            throw ParseError("duplicate id '" + s.id + "' (first seen on row " + std::to_string(it->second) + ")", lineno);
        }
        seen.emplace(s.id, lineno);
        s.weight = detail::numeric_field(row, c_weight, lineno, "weight_g");
        if (!(s.weight > 0.0)) { throw ParseError("weight_g must be positive", lineno); }
        if (c_cohort >= 0 && c_cohort < static_cast<int>(row.size())) {
            s.cohort = detail::trimmed(row[static_cast<std::size_t>(c_cohort)]);
        }
        if (schema == CsvSchema::Areas) {
            s.area = detail::numeric_field(row, c_area, lineno, "area_cm2");
            if (!(s.area > 0.0)) { throw ParseError("area_cm2 must be positive", lineno); }
        } else {
            const double scale = detail::numeric_field(row, c_scale, lineno, "mm_per_pixel");
            if (!(scale > 0.0)) { throw ParseError("mm_per_pixel must be positive", lineno); }
            std::filesystem::path mask_path = detail::trimmed(detail::field(row, c_mask, lineno, "mask_path"));
            if (mask_path.is_relative()) { mask_path = path.parent_path() / mask_path; }
            try {
                s.area = mask_area(io::read_mask(mask_path, scale));
            } catch (const Error& e) {
                throw ParseError(e.what(), lineno);
            }
            s.zero_area = s.area == 0.0;
        }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

/// Schema-A text: id,area_cm2,weight_g,cohort.
inline std::string format_samples_csv(const Dataset& ds)
{
    std::string out = "id,area_cm2,weight_g,cohort\n";
    for (const auto& s : ds.samples) {
        out += text::quote_csv_field(s.id) + ',' + text::format_number(s.area) + ',' + text::format_number(s.weight)
             + ',' + text::quote_csv_field(s.cohort) + '\n';
    }
    return out;
}

inline void save_samples(const std::filesystem::path& path, const Dataset& ds)
{
    text::write_file_atomic(path, format_samples_csv(ds));
}

/// Number of training samples: round-half-up of fraction * n.
inline std::size_t train_count(std::size_t n, double train_fraction)
{
    return static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 0.5));
}

/// Seeded uniform (unstratified) split. A Fisher-Yates permutation is drawn and
/// its first round(f*n) entries go to training, in permutation order.
inline SplitResult split(const Dataset& ds, double train_fraction, std::uint64_t seed)
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw InvalidArgument("split: train_fraction must lie in (0, 1)");
    }
    const std::size_t n = ds.size();
    const std::size_t n_train = train_count(n, train_fraction);
    if (n < 2 || n_train < 1 || n_train >= n) {
        throw InvalidArgument("split: dataset of " + std::to_string(n)
                              + " samples cannot leave at least one sample on each side");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) { std::swap(order[i], order[rng.below(i + 1)]); }

    SplitResult out;
    out.seed = seed;
    out.train.name = ds.name + "-train";
    out.validation.name = ds.name + "-validation";
    for (std::size_t i = 0; i < n; ++i) {
        (i < n_train ? out.train : out.validation).samples.push_back(ds.samples[order[i]]);
    }
    return out;
}

} // namespace fishweight

#endif // FISHWEIGHT_DATASET_HPP

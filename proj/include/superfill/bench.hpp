#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "image_io.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"

namespace superfill {

/// A sweep over images x strategies x ratios x algorithms x seeds.
struct BenchConfig {
    std::vector<std::filesystem::path> images;
    std::vector<SamplingStrategy::Kind> strategies{SamplingStrategy::Kind::Centroid};
    std::vector<double> ratios{0.5};
    std::vector<Algorithm> algorithms{Algorithm::Stnn};
    std::vector<std::uint64_t> seeds{0};
    AdmmParams admm;
    SlicParams slic;
    int stages = 2;                   ///< multistage
    double per_stage_fraction = 0.5;  ///< multistage
    std::filesystem::path output;     ///< empty: stdout
    unsigned threads = 0;             ///< 0: hardware concurrency
};

struct BenchCell {
    std::size_t image = 0;
    SamplingStrategy::Kind strategy{};
    double ratio = 0;
    Algorithm algorithm{};
    std::uint64_t seed = 0;
};

struct BenchRow {
    BenchCell cell;
    double achieved_ratio = 0;
    Index clusters = 0;
    MetricReport metrics;
    int iterations = 0;
    bool converged = false;
    std::string status = "ok";
    double wall_time = 0;  ///< seconds; kept out of the main CSV
};

namespace detail {

using json = nlohmann::json;

template <class T>
T json_get(const json& j, const char* key, const T& fallback) {
    if (!j.contains(key))
        return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParameterError(std::string("bench config: bad value for '") + key + "': " + e.what());
    }
}

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> known, const char* where) {
    if (!j.is_object())
        throw ParameterError(std::string("bench config: '") + where + "' must be an object");
    for (const auto& [key, value] : j.items())
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
            throw ParameterError("bench config: unknown key '" + key + "' in " + where);
}

template <class T, class Parse>
std::vector<T> json_list(const json& j, const char* key, std::vector<T> fallback, Parse parse) {
    if (!j.contains(key))
        return fallback;
    const json& arr = j.at(key);
    if (!arr.is_array() || arr.empty())
        throw ParameterError(std::string("bench config: '") + key + "' must be a non-empty array");
    std::vector<T> out;
    for (const auto& v : arr) {
        try {
            out.push_back(parse(v));
        } catch (const json::exception& e) {
            throw ParameterError(std::string("bench config: bad entry in '") + key + "': " + e.what());
        }
    }
    return out;
}

/// Quote a CSV field only when it needs it.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + '"';
}

inline std::string fixed(double v, int digits) {
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (std::isnan(v))
        return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace detail

/// Parses a JSON config. Relative image and output paths resolve against `base_dir`.
inline BenchConfig parse_bench_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    using detail::json;
    detail::reject_unknown_keys(j,
                                {"images", "strategies", "ratios", "algorithms", "seeds", "admm", "slic",
                                 "multistage", "output", "threads"},
                                "config");
    BenchConfig c;
    auto resolve = [&](const std::filesystem::path& p) { return p.is_absolute() ? p : base_dir / p; };
    c.images = detail::json_list<std::filesystem::path>(j, "images", {}, [&](const json& v) {
        return resolve(v.get<std::string>());
    });
    if (c.images.empty())
        throw ParameterError("bench config: 'images' is required");
    c.strategies = detail::json_list(j, "strategies", c.strategies,
                                     [](const json& v) { return parse_strategy(v.get<std::string>()); });
    c.ratios = detail::json_list(j, "ratios", c.ratios, [](const json& v) {
        const double r = v.get<double>();
        detail::require_ratio(r, "bench config");
        return r;
    });
    c.algorithms = detail::json_list(j, "algorithms", c.algorithms,
                                     [](const json& v) { return parse_algorithm(v.get<std::string>()); });
    c.seeds = detail::json_list(j, "seeds", c.seeds, [](const json& v) { return v.get<std::uint64_t>(); });

    if (j.contains("admm")) {
        const json& a = j.at("admm");
        detail::reject_unknown_keys(
            a, {"lambda", "mu0", "alpha", "mu_max", "tol", "max_iters", "smoothing", "transform", "unfold_mode"},
            "admm");
        if (a.contains("lambda"))
            c.admm.lambda = detail::json_get<double>(a, "lambda", 0.0);
        c.admm.mu0 = detail::json_get(a, "mu0", c.admm.mu0);
        c.admm.alpha = detail::json_get(a, "alpha", c.admm.alpha);
        c.admm.mu_max = detail::json_get(a, "mu_max", c.admm.mu_max);
        c.admm.tol = detail::json_get(a, "tol", c.admm.tol);
        c.admm.max_iters = detail::json_get(a, "max_iters", c.admm.max_iters);
        c.admm.unfold_mode = detail::json_get(a, "unfold_mode", c.admm.unfold_mode);
        c.admm.transform = parse_transform(detail::json_get<std::string>(a, "transform", "dft"));
        if (a.contains("smoothing")) {
            const json& s = a.at("smoothing");
            detail::reject_unknown_keys(s, {"enabled", "sigma", "every_n_iters"}, "admm.smoothing");
            c.admm.smoothing.enabled = detail::json_get(s, "enabled", c.admm.smoothing.enabled);
            c.admm.smoothing.sigma = detail::json_get(s, "sigma", c.admm.smoothing.sigma);
            c.admm.smoothing.every_n_iters = detail::json_get(s, "every_n_iters", c.admm.smoothing.every_n_iters);
        }
    }
    c.admm.validate();
    if (j.contains("slic")) {
        const json& s = j.at("slic");
        detail::reject_unknown_keys(s, {"m", "max_iters"}, "slic");
        c.slic.compactness = detail::json_get(s, "m", c.slic.compactness);
        c.slic.max_iters = detail::json_get(s, "max_iters", c.slic.max_iters);
    }
    if (j.contains("multistage")) {
        const json& s = j.at("multistage");
        detail::reject_unknown_keys(s, {"stages", "per_stage_fraction"}, "multistage");
        c.stages = detail::json_get(s, "stages", c.stages);
        c.per_stage_fraction = detail::json_get(s, "per_stage_fraction", c.per_stage_fraction);
    }
    if (j.contains("output"))
        c.output = resolve(detail::json_get<std::string>(j, "output", ""));
    c.threads = detail::json_get(j, "threads", c.threads);
    return c;
}

inline BenchConfig load_bench_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open bench config '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bench config '" + path.string() + "': " + e.what());
    }
    return parse_bench_config(j, path.parent_path());
}

/// Cells in config order: image, strategy, ratio, algorithm, seed (seed varies fastest).
inline std::vector<BenchCell> bench_cells(const BenchConfig& c) {
    std::vector<BenchCell> cells;
    for (std::size_t i = 0; i < c.images.size(); ++i)
        for (auto s : c.strategies)
            for (double r : c.ratios)
                for (auto a : c.algorithms)
                    for (auto seed : c.seeds)
                        cells.push_back({i, s, r, a, seed});
    return cells;
}

/// Runs one cell; failures are recorded in the row, not thrown.
inline BenchRow run_bench_cell(const BenchConfig& c, const BenchCell& cell, const Tensor3& image) {
    BenchRow row;
    row.cell = cell;
    const auto start = std::chrono::steady_clock::now();
    try {
        SamplingStrategy strategy;
        strategy.kind = cell.strategy;
        strategy.seed = cell.seed;
        strategy.stages = c.stages;
        strategy.per_stage_fraction = c.per_stage_fraction;
        const SampleResult s = sample_image(image, strategy, cell.ratio, c.slic);
        row.achieved_ratio = s.mask.observed_ratio();
        row.clusters = s.clusters;
        const CompletionReport r = complete(apply_mask(image, s.mask), s.mask, cell.algorithm, c.admm);
        row.iterations = r.iterations_run;
        row.converged = r.converged;
        row.metrics = evaluate(image, r.reconstruction);
    } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
    }
    row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
}

inline constexpr const char* kBenchHeader =
    "image,strategy,ratio,algorithm,seed,achieved_ratio,clusters,psnr_db,ssim,iterations,converged,status";

/// One CSV line (no newline). Every field is a deterministic function of the cell.
inline std::string bench_csv_row(const BenchConfig& c, const BenchRow& row) {
    const bool ok = row.status == "ok";
    std::string s = detail::csv_field(c.images[row.cell.image].filename().string());
    s += ',' + to_string(row.cell.strategy);
    s += ',' + detail::fixed(row.cell.ratio, 4);
    s += ',' + to_string(row.cell.algorithm);
    s += ',' + std::to_string(row.cell.seed);
    s += ',' + (ok ? detail::fixed(row.achieved_ratio, 6) : "");
    s += ',' + (ok ? std::to_string(row.clusters) : "");
    s += ',' + (ok ? detail::fixed(row.metrics.psnr_db, 6) : "");
    s += ',' + (ok ? detail::fixed(row.metrics.ssim, 6) : "");
    s += ',' + (ok ? std::to_string(row.iterations) : "");
    s += ',' + std::string(ok ? (row.converged ? "1" : "0") : "");
    s += ',' + detail::csv_field(row.status);
    return s;
}

/// Runs every cell (in parallel when threads > 1) and returns rows in config order.
/// Images are loaded once; a load failure marks all of that image's cells.
inline std::vector<BenchRow> run_bench(const BenchConfig& c) {
    std::vector<Tensor3> images(c.images.size());
    std::vector<std::string> load_errors(c.images.size());
    for (std::size_t i = 0; i < c.images.size(); ++i) {
        try {
            images[i] = read_image(c.images[i]);
        } catch (const std::exception& e) {
            load_errors[i] = std::string("error: ") + e.what();
        }
    }
    const auto cells = bench_cells(c);
    std::vector<BenchRow> rows(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
            if (!load_errors[cells[i].image].empty()) {
                rows[i].cell = cells[i];
                rows[i].status = load_errors[cells[i].image];
                continue;
            }
            rows[i] = run_bench_cell(c, cells[i], images[cells[i].image]);
        }
    };
    unsigned n = c.threads ? c.threads : std::max(1u, std::thread::hardware_concurrency());
    n = static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(cells.size(), 1)));
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n; ++t)
            pool.emplace_back(worker);
    }
    return rows;
}

inline void write_bench_csv(std::ostream& out, const BenchConfig& c, const std::vector<BenchRow>& rows) {
    out << kBenchHeader << '\n';
    for (const auto& r : rows)
        out << bench_csv_row(c, r) << '\n';
}

/// Wall times, kept apart so the main table stays byte-reproducible.
inline void write_bench_timing_csv(std::ostream& out, const BenchConfig& c, const std::vector<BenchRow>& rows) {
    out << "image,strategy,ratio,algorithm,seed,wall_time_s\n";
    for (const auto& r : rows)
        out << detail::csv_field(c.images[r.cell.image].filename().string()) << ',' << to_string(r.cell.strategy)
            << ',' << detail::fixed(r.cell.ratio, 4) << ',' << to_string(r.cell.algorithm) << ',' << r.cell.seed
            << ',' << detail::fixed(r.wall_time, 4) << '\n';
}

} // namespace superfill

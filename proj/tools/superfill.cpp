#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <superfill/superfill.hpp>

namespace fs = std::filesystem;
using namespace superfill;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct SlicOptions {
    double m = 10.0;
    int iters = 10;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--m", m, "SLIC compactness (recommended 1-20)")->capture_default_str();
        cmd.add_option("--slic-iters", iters, "SLIC iterations")->capture_default_str()->check(CLI::PositiveNumber);
    }

    SlicParams params() const {
        SlicParams p;
        p.compactness = m;
        p.max_iters = iters;
        if (!p.compactness_in_recommended_range())
            std::cerr << "warning: compactness m = " << m << " is outside the recommended range [1, 20]\n";
        return p;
    }
};

struct AdmmOptions {
    std::string algorithm = "stnn";
    std::optional<double> lambda;
    AdmmParams p;
    bool no_smoothing = false;
    std::string transform = "dft";

    void add_to(CLI::App& cmd) {
        cmd.add_option("--algorithm,-a", algorithm, "smnn or stnn")
            ->capture_default_str()
            ->check(CLI::IsMember({"smnn", "stnn"}));
        cmd.add_option("--lambda", lambda, "trade-off weight (default 1/sqrt(max(H,W)*C))");
        cmd.add_option("--mu0", p.mu0, "initial penalty")->capture_default_str();
        cmd.add_option("--alpha", p.alpha, "penalty growth")->capture_default_str();
        cmd.add_option("--mu-max", p.mu_max, "penalty cap")->capture_default_str();
        cmd.add_option("--tol", p.tol, "relative-change tolerance")->capture_default_str();
        cmd.add_option("--max-iters", p.max_iters, "iteration limit")->capture_default_str();
        cmd.add_flag("--no-smoothing", no_smoothing, "disable the Gaussian smoothing step");
        cmd.add_option("--sigma", p.smoothing.sigma, "smoothing standard deviation")->capture_default_str();
        cmd.add_option("--smooth-every", p.smoothing.every_n_iters, "smooth every n iterations")
            ->capture_default_str();
        cmd.add_option("--transform", transform, "STNN mode-3 transform")
            ->capture_default_str()
            ->check(CLI::IsMember({"dft", "dct"}));
        cmd.add_option("--unfold-mode", p.unfold_mode, "SMNN unfolding")->capture_default_str();
    }

    AdmmParams params() const {
        AdmmParams out = p;
        out.lambda = lambda;
        out.smoothing.enabled = !no_smoothing;
        out.transform = parse_transform(transform);
        out.validate();
        return out;
    }
};

/// Parses "HxW".
std::pair<Index, Index> parse_size(const std::string& s) {
    const auto x = s.find('x');
    try {
        if (x != std::string::npos) {
            const long long h = std::stoll(s.substr(0, x)), w = std::stoll(s.substr(x + 1));
            if (h > 0 && w > 0)
                return {h, w};
        }
    } catch (const std::exception&) {
    }
    throw ParameterError("bad size '" + s + "' (expected HxW)");
}

// --- sample ----------------------------------------------------------------

struct SampleCmd {
    std::string input, strategy = "centroid", mask_out, samples_out, labels_out, overlay_out;
    std::optional<double> ratio;
    std::optional<Index> clusters;
    std::uint64_t seed = 0;
    int stages = 2;
    double per_stage_fraction = 0.5;
    SlicOptions slic;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("sample", "select one pixel per superpixel and write the sparse samples");
        cmd->add_option("input", input, "image (PNG, PGM/PPM, or a band manifest)")->required();
        cmd->add_option("--strategy,-s", strategy, "centroid, boundary, multistage or uniform")
            ->capture_default_str()
            ->check(CLI::IsMember({"centroid", "boundary", "multistage", "uniform"}));
        auto* r = cmd->add_option("--ratio,-r", ratio, "target sampling ratio in (0, 1]");
        cmd->add_option("--clusters,-k", clusters, "requested superpixel count K")->excludes(r);
        cmd->add_option("--seed", seed, "seed for uniform sampling")->capture_default_str();
        cmd->add_option("--stages", stages, "multistage depth")->capture_default_str();
        cmd->add_option("--per-stage-fraction", per_stage_fraction, "multistage split fraction")
            ->capture_default_str();
        cmd->add_option("--mask", mask_out, "output mask PNG (255 = observed)");
        cmd->add_option("--samples", samples_out, "output sparse sample CSV");
        cmd->add_option("--labels", labels_out, "output 16-bit label map PNG");
        cmd->add_option("--overlay", overlay_out, "output PNG with superpixel boundaries drawn");
        slic.add_to(*cmd);
        cmd->callback([this] { run(); });
    }

    void run() {
        if (!ratio && !clusters)
            throw ParameterError("sample: give --ratio or --clusters");
        const Tensor3 image = read_image(input);
        const Index n = image.rows() * image.cols();
        SlicParams sp = slic.params();
        // --clusters K is the same as the ratio K / N.
        const double target = ratio ? *ratio : static_cast<double>(*clusters) / static_cast<double>(n);
        if (clusters && (*clusters < 1 || *clusters > n))
            throw ParameterError("sample: --clusters must lie in [1, H*W]");
        SamplingStrategy s;
        s.kind = parse_strategy(strategy);
        s.seed = seed;
        s.stages = stages;
        s.per_stage_fraction = per_stage_fraction;
        const SampleResult res = sample_image(image, s, target, sp);

        if (!mask_out.empty())
            write_mask(mask_out, res.mask);
        if (!samples_out.empty())
            write_samples_csv(samples_out, image, res.mask);
        if (!labels_out.empty() || !overlay_out.empty()) {
            if (s.kind == SamplingStrategy::Kind::UniformRandom)
                throw ParameterError("sample: --labels/--overlay need a superpixel strategy");
            sp.superpixels = k_for_ratio(n, target);
            const LabelMap lm = slic_segment(segmentation_lab(image), sp);
            if (!labels_out.empty())
                write_label_map(labels_out, lm);
            if (!overlay_out.empty()) {
                const Tensor3 rgb = image.slices() == 3 ? image : segmentation_rgb(image);
                write_png(overlay_out, boundary_overlay(rgb, lm));
            }
        }
        std::printf("size %lldx%lldx%lld\n", static_cast<long long>(image.rows()),
                    static_cast<long long>(image.cols()), static_cast<long long>(image.slices()));
        if (res.clusters > 0)
            std::printf("superpixels requested %lld, produced %lld\n", static_cast<long long>(k_for_ratio(n, target)),
                        static_cast<long long>(res.clusters));
        std::printf("observed %lld of %lld pixels, ratio %.6f (target %.6f)\n",
                    static_cast<long long>(res.mask.observed_count()), static_cast<long long>(n),
                    res.mask.observed_ratio(), target);
    }

    static Tensor3 segmentation_rgb(const Tensor3& image) {
        Tensor3 rgb(image.rows(), image.cols(), 3);
        for (Index c = 0; c < 3; ++c)
            rgb.slice(c) = image.slice(0);
        return rgb;
    }
};

// --- complete --------------------------------------------------------------

struct CompleteCmd {
    std::string samples, masked, mask, size, output, history, reference;
    int bit_depth = 8;
    AdmmOptions admm;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("complete", "reconstruct an image from sparse samples");
        auto* s = cmd->add_option("--samples", samples, "sparse sample CSV");
        auto* m = cmd->add_option("--masked", masked, "image whose unobserved pixels are ignored");
        s->excludes(m);
        cmd->add_option("--mask", mask, "mask PNG (required with --masked)");
        cmd->add_option("--size", size, "HxW grid for --samples when no --mask is given");
        cmd->add_option("--output,-o", output, "reconstruction (PNG, or .txt manifest for many bands)")->required();
        cmd->add_option("--history", history, "convergence history CSV");
        cmd->add_option("--reference", reference, "ground truth; prints PSNR/SSIM of the result");
        cmd->add_option("--bit-depth", bit_depth, "output bit depth")
            ->capture_default_str()
            ->check(CLI::IsMember({8, 16}));
        admm.add_to(*cmd);
        cmd->callback([this] { run(); });
    }

    void run() {
        Tensor3 observed;
        SampleMask m;
        if (!samples.empty()) {
            Index h = 0, w = 0;
            if (!mask.empty()) {
                const SampleMask file_mask = read_mask(mask);
                h = file_mask.height(), w = file_mask.width();
            } else if (!size.empty()) {
                std::tie(h, w) = parse_size(size);
            } else {
                throw ParameterError("complete: --samples needs --mask or --size for the grid");
            }
            SparseSamples sp = read_samples_csv(samples, h, w);
            observed = std::move(sp.values);
            m = std::move(sp.mask);
        } else if (!masked.empty()) {
            if (mask.empty())
                throw ParameterError("complete: --masked needs --mask");
            m = read_mask(mask);
            const Tensor3 img = read_image(masked);
            detail::require_mask_fits(img, m, "complete");
            observed = apply_mask(img, m);
        } else {
            throw ParameterError("complete: give --samples or --masked");
        }
        const AdmmParams params = admm.params();
        const CompletionReport r = complete(observed, m, parse_algorithm(admm.algorithm), params);
        write_image(output, r.reconstruction, bit_depth);
        if (!history.empty()) {
            std::ofstream out(history);
            if (!out)
                throw IoError("cannot write '" + history + "'");
            write_history_csv(out, r.history);
        }
        std::printf("%s: %d iterations, %s, %.3f s\n", admm.algorithm.c_str(), r.iterations_run,
                    r.converged ? "converged" : "iteration limit reached", r.wall_time);
        if (!reference.empty()) {
            const Tensor3 ref = read_image(reference);
            const MetricReport rep = evaluate(ref, quantized(r.reconstruction, bit_depth));
            std::printf("psnr_db %s ssim %.6f\n", format_psnr(rep.psnr_db).c_str(), rep.ssim);
        }
    }
};

// --- maskgen ---------------------------------------------------------------

struct MaskgenCmd {
    std::string size, like, pattern = "circles", orientation = "horizontal", output;
    StructuredPattern p;
    double ratio = 0.5;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("maskgen", "generate a structured or random missing-pixel mask");
        auto* s = cmd->add_option("--size", size, "HxW");
        cmd->add_option("--like", like, "take the size from this image")->excludes(s);
        cmd->add_option("--pattern", pattern, "circles, lines, scratches or uniform")
            ->capture_default_str()
            ->check(CLI::IsMember({"circles", "lines", "scratches", "uniform"}));
        cmd->add_option("--count", p.count, "number of shapes")->capture_default_str();
        cmd->add_option("--radius", p.radius, "circle radius")->capture_default_str();
        cmd->add_option("--thickness", p.thickness, "line or scratch thickness")->capture_default_str();
        cmd->add_option("--orientation", orientation, "line orientation")
            ->capture_default_str()
            ->check(CLI::IsMember({"horizontal", "vertical"}));
        cmd->add_option("--length", p.length, "scratch length")->capture_default_str();
        cmd->add_option("--ratio", ratio, "observed ratio for the uniform pattern")->capture_default_str();
        cmd->add_option("--seed", p.seed, "random seed")->capture_default_str();
        cmd->add_option("--output,-o", output, "mask PNG (255 = observed)")->required();
        cmd->callback([this] { run(); });
    }

    void run() {
        Index h, w;
        if (!like.empty()) {
            const Tensor3 img = read_image(like);
            h = img.rows(), w = img.cols();
        } else if (!size.empty()) {
            std::tie(h, w) = parse_size(size);
        } else {
            throw ParameterError("maskgen: give --size or --like");
        }
        SampleMask m;
        if (pattern == "uniform") {
            m = sample_uniform_random(h, w, ratio, p.seed);
        } else {
            p.kind = pattern == "lines"       ? StructuredPattern::Kind::Lines
                     : pattern == "scratches" ? StructuredPattern::Kind::Scratches
                                              : StructuredPattern::Kind::Circles;
            p.orientation = orientation == "vertical" ? StructuredPattern::Orientation::Vertical
                                                      : StructuredPattern::Orientation::Horizontal;
            m = structured_mask(h, w, p);
        }
        write_mask(output, m);
        std::printf("missing %lld of %lld pixels (%.4f%%)\n", static_cast<long long>(m.missing_count()),
                    static_cast<long long>(m.pixel_count()), 100.0 * m.missing_count() / m.pixel_count());
    }
};

// --- eval ------------------------------------------------------------------

struct EvalCmd {
    std::string reference, estimate, csv;
    double peak = 1.0;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("eval", "PSNR and SSIM of a reconstruction against a reference");
        cmd->add_option("reference", reference, "reference image")->required();
        cmd->add_option("estimate", estimate, "reconstructed image")->required();
        cmd->add_option("--peak", peak, "peak value on the [0, 1] scale")->capture_default_str();
        cmd->add_option("--csv", csv, "append the row to this CSV (header written when new)");
        cmd->callback([this] { run(); });
    }

    void run() {
        const Tensor3 ref = read_image(reference), est = read_image(estimate);
        if (ref.dims() != est.dims())
            throw DimensionError("eval: " + to_string(ref.dims()) + " vs " + to_string(est.dims()));
        const MetricReport r = evaluate(ref, est, peak);
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", r.ssim);
        const std::string row = detail::csv_field(fs::path(estimate).filename().string()) + "," +
                                format_psnr(r.psnr_db) + "," + buf;
        std::cout << "file,psnr_db,ssim\n" << row << '\n';
        if (!csv.empty()) {
            const bool fresh = !fs::exists(csv) || fs::file_size(csv) == 0;
            std::ofstream out(csv, std::ios::app);
            if (!out)
                throw IoError("cannot write '" + csv + "'");
            if (fresh)
                out << "file,psnr_db,ssim\n";
            out << row << '\n';
        }
    }
};

// --- bench -----------------------------------------------------------------

struct BenchCmd {
    std::string config, output, timing;
    std::optional<unsigned> threads;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("bench", "run a sampling/completion sweep from a JSON config");
        cmd->add_option("config", config, "JSON config")->required();
        cmd->add_option("--output,-o", output, "results CSV (overrides the config; '-' for stdout)");
        cmd->add_option("--threads,-j", threads, "parallel cells (overrides the config)");
        cmd->add_option("--timing", timing, "wall-time CSV (default <output>.timing.csv)");
        cmd->callback([this] { run(); });
    }

    void run() {
        BenchConfig c = load_bench_config(config);
        if (!output.empty())
            c.output = output == "-" ? fs::path{} : fs::path(output);
        if (threads)
            c.threads = *threads;
        if (!c.slic.compactness_in_recommended_range())
            std::cerr << "warning: compactness m = " << c.slic.compactness
                      << " is outside the recommended range [1, 20]\n";
        const auto rows = run_bench(c);
        if (c.output.empty()) {
            write_bench_csv(std::cout, c, rows);
        } else {
            std::ofstream out(c.output);
            if (!out)
                throw IoError("cannot write '" + c.output.string() + "'");
            write_bench_csv(out, c, rows);
        }
        const fs::path timing_path = !timing.empty()      ? fs::path(timing)
                                     : !c.output.empty() ? fs::path(c.output.string() + ".timing.csv")
                                                          : fs::path{};
        if (!timing_path.empty()) {
            std::ofstream out(timing_path);
            if (!out)
                throw IoError("cannot write '" + timing_path.string() + "'");
            write_bench_timing_csv(out, c, rows);
        }
        std::size_t failed = 0;
        for (const auto& r : rows)
            failed += r.status != "ok";
        std::cerr << rows.size() << " cells, " << failed << " failed\n";
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Superpixel sampling and low-rank image completion"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "superfill 0.1.0");
    SampleCmd sample;
    CompleteCmd complete_cmd;
    MaskgenCmd maskgen;
    EvalCmd eval;
    BenchCmd bench;
    sample.add(app);
    complete_cmd.add(app);
    maskgen.add(app);
    eval.add(app);
    bench.add(app);
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {  // ParameterError, DimensionError
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

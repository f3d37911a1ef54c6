// Acceptance checks. Prints one PASS/FAIL line per criterion; details are
// indented above each verdict.
//
//   acceptance            run AC1..AC8
//   acceptance AC3 AC5    run a subset

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <superfill/superfill.hpp>

namespace fs = std::filesystem;
using namespace superfill;

namespace {

const std::vector<std::string> kImages{"astronaut", "chelsea", "coffee", "rocket", "retina"};
constexpr std::uint64_t kUniformSeed = 1;

Tensor3 load(const std::string& name) { return read_image(std::string(SUPERFILL_TEST_DATA_DIR) + "/" + name + ".png"); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string join(const std::vector<double>& v, const char* f = "%+.4f") {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? ", " : "") + fmt(f, v[i]);
    return s + "]";
}

Tensor3 random_tensor(const Dims& d, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor3 t(d);
    for (double& v : t.array())
        v = u(rng);
    return t;
}

/// Entries with magnitude in [0.5, 1] and random sign.
Tensor3 flat_factor(const Dims& d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mag(0.5, 1.0);
    Tensor3 t(d);
    for (double& v : t.array())
        v = (rng() & 1 ? 1.0 : -1.0) * mag(rng);
    return t;
}

double max_abs(const Tensor3& a, const Tensor3& b) { return (a.array() - b.array()).abs().maxCoeff(); }

/// Completion runs shared between criteria.
class RunCache {
public:
    struct Key {
        std::string image;
        std::string mask_tag;
        Algorithm algorithm;
        bool smoothing;
        auto operator<=>(const Key&) const = default;
    };

    const Tensor3& image(const std::string& name) {
        auto it = images_.find(name);
        if (it == images_.end())
            it = images_.emplace(name, load(name)).first;
        return it->second;
    }

    const SampleMask& mask(const std::string& name, const std::string& tag,
                           const std::function<SampleMask(const Tensor3&)>& make) {
        const auto key = name + "/" + tag;
        auto it = masks_.find(key);
        if (it == masks_.end())
            it = masks_.emplace(key, make(image(name))).first;
        return it->second;
    }

    SampleMask sampling_mask(const std::string& name, const std::string& strategy, double ratio) {
        return mask(name, strategy + fmt("%.2f", ratio), [&](const Tensor3& img) {
            SamplingStrategy s;
            s.kind = parse_strategy(strategy);
            s.seed = kUniformSeed;
            return sample_image(img, s, ratio).mask;
        });
    }

    double psnr_of(const std::string& name, const std::string& tag, const SampleMask& m, Algorithm a,
                   bool smoothing) {
        const Key key{name, tag, a, smoothing};
        auto it = psnr_.find(key);
        if (it != psnr_.end())
            return it->second;
        AdmmParams p;
        p.smoothing.enabled = smoothing;
        const Tensor3& img = image(name);
        const CompletionReport r = complete(apply_mask(img, m), m, a, p);
        const double v = psnr(img, r.reconstruction);
        std::printf("    run %-9s %-14s %s smoothing %-3s: %3d iterations, %.3f s, PSNR %.4f dB\n", name.c_str(),
                    tag.c_str(), to_string(a).c_str(), smoothing ? "on" : "off", r.iterations_run, r.wall_time, v);
        std::fflush(stdout);
        psnr_.emplace(key, v);
        return v;
    }

    double sampled_psnr(const std::string& name, const std::string& strategy, double ratio, Algorithm a,
                        bool smoothing = true) {
        return psnr_of(name, strategy + fmt("%.2f", ratio), sampling_mask(name, strategy, ratio), a, smoothing);
    }

private:
    std::map<std::string, Tensor3> images_;
    std::map<std::string, SampleMask> masks_;
    std::map<Key, double> psnr_;
};

struct Verdict {
    bool pass = false;
    std::string summary;
};

// --- AC1: algebra -----------------------------------------------------------

/// sum over all DFT slices of the slice nuclear norms, from the independent half.
double spectral_nuclear_sum(const Tensor3& x) {
    const auto sig = detail::spectral_singular_values(x);
    const Index n = x.slices();
    double total = 0;
    for (Index k = 0; k < static_cast<Index>(sig.size()); ++k) {
        const bool self_conjugate = k == 0 || (n % 2 == 0 && k == n / 2);
        total += (self_conjugate ? 1.0 : 2.0) * sig[static_cast<std::size_t>(k)].sum();
    }
    return total;
}

Verdict ac1() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    double ident = 0, assoc = 0, reversal = 0, tsvd = 0, tnn_gap = 0, prox_violation = 0;
    int trials = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const auto dim = [&](Index lo, Index hi) { return lo + static_cast<Index>(rng() % (hi - lo + 1)); };
        const Index a = dim(1, 16), b = dim(1, 16), c = dim(1, 16), d = dim(1, 16), n = dim(1, 8);
        const Tensor3 x = random_tensor({a, b, n}, rng()), y = random_tensor({b, c, n}, rng()),
                      z = random_tensor({c, d, n}, rng());
        const double scale = std::max(1.0, fro_norm(x));
        ident = std::max({ident, max_abs(t_product(x, t_identity(b, n)), x) / scale,
                          max_abs(t_product(t_identity(a, n), x), x) / scale});
        const Tensor3 lhs = t_product(t_product(x, y), z), rhs = t_product(x, t_product(y, z));
        assoc = std::max(assoc, fro_norm(lhs - rhs) / std::max(1.0, fro_norm(lhs)));
        const Tensor3 xy = t_product(x, y);
        reversal = std::max(reversal, fro_norm(t_transpose(xy) - t_product(t_transpose(y), t_transpose(x))) /
                                          std::max(1.0, fro_norm(xy)));
        const auto f = t_svd(x, std::min(a, b));
        tsvd = std::max(tsvd, fro_norm(f.reconstruct() - x) / fro_norm(x));
        double traces = 0;
        for (Index k = 0; k < n; ++k)
            traces += f.s.slice(k).trace();
        tnn_gap = std::max(tnn_gap, std::abs(tnn(x) - traces) / std::max(1.0, tnn(x)));
        // Tensor SVT minimizes beta/n * sum_k ||X_k||_* + 0.5 ||X - A||_F^2 (DFT slices X_k).
        const double beta = 0.05 + 0.5 * static_cast<double>(rng() % 100) / 100.0;
        const Tensor3 p = tensor_svt(x, beta);
        auto objective = [&](const Tensor3& t) {
            return beta / static_cast<double>(n) * spectral_nuclear_sum(t) + 0.5 * std::pow(fro_norm(t - x), 2);
        };
        const double best = objective(p);
        for (int s = 0; s < 10; ++s) {
            const Tensor3 cand = p + random_tensor(p.dims(), rng(), -1.0, 1.0) * (s < 5 ? 1e-3 : 0.3);
            prox_violation = std::max(prox_violation, best - objective(cand));
        }
        ++trials;
    }
    const double t = seconds_since(t0);
    std::printf("    %d random trials up to 16x16x8\n", trials);
    std::printf("    identity %.2e  associativity %.2e  transpose reversal %.2e\n", ident, assoc, reversal);
    std::printf("    t-SVD full-rank rel. error %.2e  tnn vs core trace %.2e  SVT prox violation %.2e\n", tsvd,
                tnn_gap, prox_violation);
    const bool pass = ident < 1e-10 && assoc < 1e-10 && reversal < 1e-10 && tsvd < 1e-9 && tnn_gap < 1e-8 &&
                      prox_violation <= 1e-10 && t < 30.0;
    return {pass, "algebra suite: t-SVD rel. error " + fmt("%.1e", tsvd) + ", tnn gap " + fmt("%.1e", tnn_gap) +
                      ", prox violation " + fmt("%.1e", prox_violation) + ", " + fmt("%.1f s", t)};
}

// --- AC2: exact recovery -------------------------------------------------------

Verdict ac2() {
    const auto t0 = std::chrono::steady_clock::now();
    Tensor3 truth = t_product(random_tensor({16, 1, 3}, 11), random_tensor({1, 16, 3}, 12));
    truth *= 1.0 / truth.array().abs().maxCoeff();
    AdmmParams off;
    off.smoothing.enabled = false;
    off.max_iters = 500;

    const SampleMask uniform = sample_uniform_random(16, 16, 0.6, 3);
    // Centroid masks come from segmenting a natural image patch of the same size.
    const Tensor3 patch = [] {
        const Tensor3 img = load("chelsea");
        Tensor3 p(16, 16, 3);
        for (Index k = 0; k < 3; ++k)
            p.slice(k) = img.slice(k).block(40, 40, 16, 16);
        return p;
    }();
    SamplingStrategy centroid_strategy;
    const SampleMask centroid = sample_image(patch, centroid_strategy, 0.6).mask;

    bool pass = true;
    std::string summary;
    for (const auto& [name, m] : {std::pair{"uniform", uniform}, std::pair{"centroid", centroid}}) {
        const CompletionReport r = stnn_complete(apply_mask(truth, m), m, off);
        const double db = psnr(truth, r.reconstruction);
        std::printf("    STNN tubal-rank-1 16x16x3, %s mask (ratio %.3f): PSNR %.2f dB in %d iterations\n", name,
                    m.observed_ratio(), db, r.iterations_run);
        pass = pass && db > 40.0 && r.iterations_run <= 500;
        summary += std::string(name) + " " + fmt("%.1f dB", db) + ", ";
    }
    // Rank-1 matrices from flat-magnitude factors (|entries| in [0.5, 1], random
    // signs) are incoherent; every draw must recover.
    AdmmParams p = off;
    p.max_iters = 300;
    int recovered = 0, coherent_recovered = 0, stnn_recovered = 0;
    double worst_rel = 0;
    const int draws = 20;
    for (int s = 0; s < draws; ++s) {
        const Tensor3 truth2 = t_product(flat_factor({8, 1, 1}, 1000 + 2 * s), flat_factor({1, 8, 1}, 1001 + 2 * s));
        const SampleMask m70 = sample_uniform_random(8, 8, 0.7, s);
        const CompletionReport r = smnn_complete(apply_mask(truth2, m70), m70, p);
        const double rel = fro_norm(r.reconstruction - truth2) / fro_norm(truth2);
        worst_rel = std::max(worst_rel, rel);
        recovered += rel < 1e-2 && r.iterations_run <= 300;
        // Informational: U(-1, 1) factors can have near-zero entries.
        const Tensor3 coherent = t_product(random_tensor({8, 1, 1}, 3000 + 2 * s), random_tensor({1, 8, 1}, 3001 + 2 * s));
        const CompletionReport rc = smnn_complete(apply_mask(coherent, m70), m70, p);
        coherent_recovered += fro_norm(rc.reconstruction - coherent) / fro_norm(coherent) < 1e-2;
        Tensor3 tub = t_product(random_tensor({16, 1, 3}, 5000 + 2 * s), random_tensor({1, 16, 3}, 5001 + 2 * s));
        tub *= 1.0 / tub.array().abs().maxCoeff();
        const SampleMask m60 = sample_uniform_random(16, 16, 0.6, s);
        stnn_recovered += psnr(tub, stnn_complete(apply_mask(tub, m60), m60, off).reconstruction) > 40.0;
    }
    std::printf("    SMNN rank-1 8x8 at 70%%, %d incoherent draws: %d recovered, worst relative error %.2e\n", draws,
                recovered, worst_rel);
    std::printf("    (info) SMNN with U(-1,1) factors: %d/%d recovered; STNN tubal-rank-1 random draws: %d/%d above 40 dB\n",
                coherent_recovered, draws, stnn_recovered, draws);
    const double t = seconds_since(t0);
    pass = pass && recovered == draws && t < 60.0;
    return {pass, "exact recovery: STNN " + summary + "SMNN " + std::to_string(recovered) + "/" + std::to_string(draws) + " draws, worst rel. error " + fmt("%.1e", worst_rel) + ", " + fmt("%.1f s", t)};
}

// --- AC3..AC6: natural images ------------------------------------------------

Verdict ac3(RunCache& cache) {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = true;
    std::string summary;
    for (double ratio : {0.5, 0.3}) {
        std::vector<double> gaps;
        int wins = 0;
        for (const auto& name : kImages) {
            const double c = cache.sampled_psnr(name, "centroid", ratio, Algorithm::Stnn);
            const double u = cache.sampled_psnr(name, "uniform", ratio, Algorithm::Stnn);
            gaps.push_back(c - u);
            wins += c - u >= 0.0;
        }
        std::printf("    ratio %.1f: centroid - uniform PSNR gaps (dB) %s, %d/5 non-negative\n", ratio,
                    join(gaps).c_str(), wins);
        pass = pass && wins >= 4;
        summary += fmt("%.1f: ", ratio) + std::to_string(wins) + "/5 " + join(gaps, "%+.2f") + "; ";
    }
    const double t = seconds_since(t0);
    pass = pass && t < 600.0;
    return {pass, "centroid beats uniform (STNN) at " + summary + fmt("%.0f s", t)};
}

Verdict ac4(RunCache& cache) {
    std::vector<double> gaps;
    int wins = 0;
    for (const auto& name : kImages) {
        const double s = cache.sampled_psnr(name, "centroid", 0.3, Algorithm::Stnn);
        const double m = cache.sampled_psnr(name, "centroid", 0.3, Algorithm::Smnn);
        gaps.push_back(s - m);
        wins += s - m >= 0.0;
    }
    std::printf("    ratio 0.3, same centroid masks: STNN - SMNN PSNR gaps (dB) %s\n", join(gaps, "%+.6f").c_str());
    // Informational: per-iteration smoothing drives both engines to nearly the
    // same fixed point, so the comparison above is decided at the 1e-3 dB level.
    std::vector<double> off_gaps;
    for (const auto& name : kImages)
        off_gaps.push_back(cache.sampled_psnr(name, "centroid", 0.3, Algorithm::Stnn, false) -
                           cache.sampled_psnr(name, "centroid", 0.3, Algorithm::Smnn, false));
    std::printf("    (info) smoothing off: STNN - SMNN PSNR gaps (dB) %s\n", join(off_gaps, "%+.3f").c_str());
    return {wins >= 4, "STNN >= SMNN on " + std::to_string(wins) + "/5 at 0.3, gaps " + join(gaps, "%+.5f")};
}

Verdict ac5(RunCache& cache) {
    std::vector<double> gaps;
    int wins = 0;
    for (const auto& name : kImages) {
        const double on = cache.sampled_psnr(name, "centroid", 0.3, Algorithm::Stnn, true);
        const double off = cache.sampled_psnr(name, "centroid", 0.3, Algorithm::Stnn, false);
        gaps.push_back(on - off);
        wins += on - off >= 0.0;
    }
    std::printf("    ratio 0.3: smoothing on - off PSNR gaps (dB) %s\n", join(gaps, "%+.3f").c_str());
    return {wins >= 4, "smoothing on >= off on " + std::to_string(wins) + "/5 at 0.3, gaps " + join(gaps, "%+.2f")};
}

Verdict ac6(RunCache& cache) {
    struct Pattern {
        const char* tag;
        StructuredPattern p;
    };
    std::vector<Pattern> patterns(3);
    patterns[0].tag = "circles";
    patterns[0].p.kind = StructuredPattern::Kind::Circles;
    patterns[0].p.count = 8;
    patterns[0].p.radius = 6;
    patterns[1].tag = "lines";
    patterns[1].p.kind = StructuredPattern::Kind::Lines;
    patterns[1].p.count = 6;
    patterns[1].p.thickness = 2;
    patterns[2].tag = "scratches";
    patterns[2].p.kind = StructuredPattern::Kind::Scratches;
    patterns[2].p.count = 10;
    patterns[2].p.length = 80;
    patterns[2].p.thickness = 2;
    bool pass = true;
    double worst = std::numeric_limits<double>::infinity(), max_missing = 0;
    for (auto& pat : patterns) {
        std::vector<double> dbs;
        for (std::size_t i = 0; i < kImages.size(); ++i) {
            pat.p.seed = 100 + i;
            const SampleMask& m =
                cache.mask(kImages[i], pat.tag, [&](const Tensor3& img) { return structured_mask(img.rows(), img.cols(), pat.p); });
            const double missing = 1.0 - m.observed_ratio();
            max_missing = std::max(max_missing, missing);
            const double db = cache.psnr_of(kImages[i], pat.tag, m, Algorithm::Stnn, true);
            dbs.push_back(db);
            worst = std::min(worst, db);
            pass = pass && db >= 25.0 && missing <= 0.10;
        }
        std::printf("    %-9s PSNR (dB) %s\n", pat.tag, join(dbs, "%.2f").c_str());
    }
    std::printf("    largest missing fraction %.4f\n", max_missing);
    return {pass, "structured masks (<= " + fmt("%.1f%%", 100 * max_missing) + " missing): worst PSNR " +
                      fmt("%.2f dB", worst) + " (need >= 25)"};
}

// --- AC7: SLIC properties -------------------------------------------------------

Verdict ac7(RunCache& cache) {
    bool pass = true;
    double worst_k = 0, worst_ratio = 0, worst_ratio_rel = 0;
    for (const auto& name : kImages) {
        const Tensor3& img = cache.image(name);
        const LabImage lab = rgb_to_lab(img);
        for (double ratio : {0.05, 0.1, 0.3, 0.6}) {
            SlicParams p;
            p.superpixels = k_for_ratio(img.rows() * img.cols(), ratio);
            const LabelMap lm = slic_segment(lab, p);
            std::vector<Index> sizes(static_cast<std::size_t>(lm.cluster_count()), 0);
            bool covered = true;
            for (auto l : lm.labels) {
                if (l < 0 || l >= lm.cluster_count()) {
                    covered = false;
                    break;
                }
                ++sizes[static_cast<std::size_t>(l)];
            }
            for (Index s : sizes)
                covered = covered && s > 0;
            const double k_err = std::abs(static_cast<double>(lm.cluster_count() - p.superpixels)) / p.superpixels;
            const double achieved = sample_centroid(lm).observed_ratio();
            worst_k = std::max(worst_k, k_err);
            worst_ratio = std::max(worst_ratio, std::abs(achieved - ratio));
            worst_ratio_rel = std::max(worst_ratio_rel, std::abs(achieved - ratio) / ratio);
            std::printf("    %-9s ratio %.2f: K %5lld -> K' %5lld (%.2f%%), achieved %.4f, partition %s\n", name.c_str(),
                        ratio, static_cast<long long>(p.superpixels), static_cast<long long>(lm.cluster_count()),
                        100 * k_err, achieved, covered ? "exact" : "BROKEN");
            pass = pass && covered && k_err <= 0.10 && std::abs(achieved - ratio) <= 0.02;
        }
    }
    return {pass, "SLIC: partition exact, worst |K'-K|/K " + fmt("%.2f%%", 100 * worst_k) +
                      ", worst ratio error " + fmt("%.4f", worst_ratio) + " (" + fmt("%.2f%%", 100 * worst_ratio_rel) +
                      " relative)"};
}

// --- AC8: determinism ----------------------------------------------------------

Verdict ac8() {
    const fs::path dir = fs::temp_directory_path() / "superfill_acceptance_ac8";
    fs::remove_all(dir);
    fs::create_directories(dir);
    for (const char* name : {"coffee", "astronaut"}) {
        const Tensor3 img = load(name);
        Tensor3 crop(48, 48, 3);
        for (Index k = 0; k < 3; ++k)
            crop.slice(k) = img.slice(k).block(32, 32, 48, 48);
        write_png(dir / (std::string(name) + ".png"), crop);
    }
    const auto config = nlohmann::json::parse(R"({
        "images": ["coffee.png", "astronaut.png"],
        "strategies": ["centroid", "boundary", "multistage", "uniform"],
        "ratios": [0.5, 0.2], "algorithms": ["stnn", "smnn"], "seeds": [1, 2],
        "admm": {"max_iters": 25}})");
    auto run_with = [&](unsigned threads) {
        BenchConfig c = parse_bench_config(config, dir);
        c.threads = threads;
        std::ostringstream out;
        write_bench_csv(out, c, run_bench(c));
        return out.str();
    };
    const std::string a = run_with(1), b = run_with(1), c = run_with(4);
    fs::remove_all(dir);
    const auto rows = std::count(a.begin(), a.end(), '\n') - 1;
    const bool ok_rows = a.find("error") == std::string::npos;
    std::printf("    %lld rows; rerun identical: %s; 4-thread run identical: %s\n", static_cast<long long>(rows),
                a == b ? "yes" : "no", a == c ? "yes" : "no");
    return {a == b && a == c && ok_rows && rows == 64,
            "bench rerun byte-identical (" + std::to_string(rows) + " rows, 1 and 4 threads)"};
}

} // namespace

int main(int argc, char** argv) {
    std::set<std::string> wanted(argv + 1, argv + argc);
    RunCache cache;
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"AC1", [] { return ac1(); }},
        {"AC2", [] { return ac2(); }},
        {"AC3", [&] { return ac3(cache); }},
        {"AC4", [&] { return ac4(cache); }},
        {"AC5", [&] { return ac5(cache); }},
        {"AC6", [&] { return ac6(cache); }},
        {"AC7", [&] { return ac7(cache); }},
        {"AC8", [] { return ac8(); }},
    };
    int failed = 0;
    std::vector<std::string> lines;
    for (const auto& [id, check] : criteria) {
        if (!wanted.empty() && !wanted.count(id))
            continue;
        std::printf("%s\n", id.c_str());
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += !v.pass;
        const std::string line = id + (v.pass ? " PASS " : " FAIL ") + v.summary;
        std::printf("%s\n", line.c_str());
        std::fflush(stdout);
        lines.push_back(line);
    }
    if (lines.size() > 1) {
        std::printf("\nsummary\n");
        for (const auto& l : lines)
            std::printf("%s\n", l.c_str());
    }
    return failed == 0 ? 0 : 1;
}

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include <superfill/superfill.hpp>

#include "test_util.hpp"

namespace superfill {
namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code = -1;
    std::string out;
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(SUPERFILL_CLI) + " " + args + " 2>/dev/null";
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe)
        return r;
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0)
        r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

Index count_lines(const fs::path& p) {
    std::ifstream in(p);
    Index n = 0;
    for (std::string l; std::getline(in, l);)
        ++n;
    return n;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Nearest-neighbour upscale of a test image to the requested size.
Tensor3 upscaled(const std::string& name, Index h, Index w) {
    const Tensor3 src = read_image(std::string(SUPERFILL_TEST_DATA_DIR) + "/" + name + ".png");
    Tensor3 out(h, w, 3);
    for (Index k = 0; k < 3; ++k)
        for (Index j = 0; j < w; ++j)
            for (Index i = 0; i < h; ++i)
                out(i, j, k) = src(i * src.rows() / h, j * src.cols() / w, k);
    return out;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("superfill_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string p(const std::string& name) const { return (dir_ / name).string(); }
    static std::string data(const std::string& name) { return std::string(SUPERFILL_TEST_DATA_DIR) + "/" + name; }
    fs::path dir_;
};

// --- sample ----------------------------------------------------------------

TEST_F(Cli, SampleCentroidRowCount) {
    write_png(p("big.png"), upscaled("chelsea", 256, 256));
    const RunResult r = run("sample " + p("big.png") + " -r 0.30 --samples " + p("s.csv") + " --mask " + p("m.png"));
    ASSERT_EQ(r.exit_code, 0) << r.out;
    const Index rows = count_lines(p("s.csv")) - 1;
    EXPECT_NEAR(static_cast<double>(rows), 19661.0, 0.02 * 19661.0);
    EXPECT_EQ(read_mask(p("m.png")).observed_count(), rows);
    EXPECT_NE(r.out.find("ratio 0.3"), std::string::npos) << r.out;
}

TEST_F(Cli, SampleFullRatioObservesEverything) {
    ASSERT_EQ(run("sample " + data("retina.png") + " -r 1.0 --mask " + p("m.png")).exit_code, 0);
    EXPECT_EQ(read_mask(p("m.png")).missing_count(), 0);
}

TEST_F(Cli, SampleAcceptsKodakGeometry) {
    write_png(p("kodak.png"), upscaled("astronaut", 512, 768));
    const RunResult r = run("sample " + p("kodak.png") + " -r 0.05 --mask " + p("m.png"));
    ASSERT_EQ(r.exit_code, 0);
    const SampleMask m = read_mask(p("m.png"));
    EXPECT_EQ(m.height(), 512);
    EXPECT_EQ(m.width(), 768);
    EXPECT_NEAR(m.observed_ratio(), 0.05, 0.02);
}

TEST_F(Cli, SampleErrorsExitTwo) {
    EXPECT_EQ(run("sample " + p("missing.png") + " -r 0.3").exit_code, 2);
    EXPECT_EQ(run("sample " + data("coffee.png") + " -r 1.5").exit_code, 2);
    EXPECT_EQ(run("sample " + data("coffee.png") + " -r 0").exit_code, 2);
    EXPECT_EQ(run("sample " + data("coffee.png")).exit_code, 2);
    EXPECT_EQ(run("sample " + data("coffee.png") + " -r 0.3 -s nearest").exit_code, 2);
    EXPECT_EQ(run("").exit_code, 2);
}

TEST_F(Cli, SampleByClusterCountAndUniformSeed) {
    ASSERT_EQ(run("sample " + data("coffee.png") + " -k 400 --mask " + p("k.png")).exit_code, 0);
    EXPECT_NEAR(static_cast<double>(read_mask(p("k.png")).observed_count()), 400.0, 40.0);
    ASSERT_EQ(run("sample " + data("coffee.png") + " -s uniform -r 0.2 --seed 5 --mask " + p("u1.png")).exit_code, 0);
    ASSERT_EQ(run("sample " + data("coffee.png") + " -s uniform -r 0.2 --seed 5 --mask " + p("u2.png")).exit_code, 0);
    EXPECT_EQ(slurp(p("u1.png")), slurp(p("u2.png")));
    EXPECT_EQ(read_mask(p("u1.png")), sample_uniform_random(128, 128, 0.2, 5));
}

// --- complete --------------------------------------------------------------

TEST_F(Cli, CompleteFullyObservedIsExact) {
    ASSERT_EQ(run("sample " + data("rocket.png") + " -r 1.0 --mask " + p("m.png") + " --samples " + p("s.csv")).exit_code, 0);
    ASSERT_EQ(run("complete --samples " + p("s.csv") + " --mask " + p("m.png") + " --max-iters 2 -o " + p("r.png")).exit_code, 0);
    EXPECT_EQ(read_image(p("r.png")), read_image(data("rocket.png")));
}

TEST_F(Cli, CompleteKeepsObservedPixelsBitExact) {
    ASSERT_EQ(run("sample " + data("coffee.png") + " -r 0.3 --mask " + p("m.png") + " --samples " + p("s.csv")).exit_code, 0);
    const RunResult r = run("complete --samples " + p("s.csv") + " --mask " + p("m.png") +
                            " --max-iters 20 -o " + p("r.png") + " --history " + p("h.csv"));
    ASSERT_EQ(r.exit_code, 0) << r.out;
    const SampleMask m = read_mask(p("m.png"));
    const Tensor3 in = read_image(data("coffee.png")), out = read_image(p("r.png"));
    EXPECT_EQ(apply_mask(out, m), apply_mask(in, m));
    EXPECT_EQ(count_lines(p("h.csv")), 21);
    std::ifstream h(p("h.csv"));
    std::string header;
    std::getline(h, header);
    EXPECT_EQ(header, "iter,criterion,data_fit,mu");
}

TEST_F(Cli, CompleteRecoversTubalRankOne) {
    // Non-negative factors give a non-negative tubal-rank-1 tensor.
    Tensor3 truth = t_product(testing::random_tensor({16, 1, 3}, 1, 0.0, 1.0), testing::random_tensor({1, 16, 3}, 2, 0.0, 1.0));
    truth *= 1.0 / truth.array().maxCoeff();
    write_png(p("truth.png"), truth, 16);
    ASSERT_EQ(run("maskgen --size 16x16 --pattern uniform --ratio 0.6 --seed 3 -o " + p("m.png")).exit_code, 0);
    const RunResult r = run("complete --masked " + p("truth.png") + " --mask " + p("m.png") +
                            " --no-smoothing --bit-depth 16 -o " + p("r.png") + " --reference " + p("truth.png"));
    ASSERT_EQ(r.exit_code, 0) << r.out;
    const auto at = r.out.find("psnr_db ");
    ASSERT_NE(at, std::string::npos) << r.out;
    EXPECT_GT(std::stod(r.out.substr(at + 8)), 40.0) << r.out;
}

TEST_F(Cli, CompleteSmnnWithMaskedImage) {
    ASSERT_EQ(run("maskgen --like " + data("retina.png") + " --pattern scratches --count 3 --length 60 -o " + p("m.png")).exit_code, 0);
    const RunResult r = run("complete -a smnn --masked " + data("retina.png") + " --mask " + p("m.png") +
                            " --max-iters 60 -o " + p("r.png") + " --reference " + data("retina.png"));
    ASSERT_EQ(r.exit_code, 0) << r.out;
    EXPECT_NE(r.out.find("smnn:"), std::string::npos);
}

TEST_F(Cli, CompleteErrorsExitTwo) {
    EXPECT_EQ(run("complete --masked " + data("coffee.png") + " --mask " + p("none.png") + " -o " + p("r.png")).exit_code, 2);
    EXPECT_EQ(run("complete --samples " + p("none.csv") + " --size 8x8 -o " + p("r.png")).exit_code, 2);
    EXPECT_EQ(run("complete --samples " + p("none.csv") + " -o " + p("r.png")).exit_code, 2);
    EXPECT_EQ(run("complete --masked " + data("coffee.png") + " -o " + p("r.png")).exit_code, 2);
    // An all-missing mask is a usage error, not a numerical one.
    ASSERT_EQ(run("maskgen --size 128x128 --pattern lines --thickness 200 -o " + p("empty.png")).exit_code, 0);
    EXPECT_EQ(run("complete --masked " + data("coffee.png") + " --mask " + p("empty.png") + " -o " + p("r.png")).exit_code, 2);
    EXPECT_EQ(run("complete --masked " + data("coffee.png") + " --mask " + p("empty.png") + " --alpha 0.5 -o " + p("r.png")).exit_code, 2);
}

TEST_F(Cli, MultiBandManifestRoundTrip) {
    const Tensor3 cube = quantized(testing::random_tensor({24, 20, 5}, 9, 0.0, 1.0));
    write_image(p("cube.txt"), cube);
    ASSERT_EQ(run("sample " + p("cube.txt") + " -r 0.5 --mask " + p("m.png") + " --samples " + p("s.csv")).exit_code, 0);
    ASSERT_EQ(run("complete --samples " + p("s.csv") + " --mask " + p("m.png") + " --max-iters 10 -o " + p("out.txt")).exit_code, 0);
    const Tensor3 out = read_image(p("out.txt"));
    EXPECT_EQ(out.dims(), cube.dims());
    const SampleMask m = read_mask(p("m.png"));
    EXPECT_EQ(apply_mask(out, m), apply_mask(cube, m));
}

// --- maskgen ---------------------------------------------------------------

TEST_F(Cli, MaskgenShapes) {
    ASSERT_EQ(run("maskgen --size 64x64 --pattern lines --count 1 --thickness 1 -o " + p("l.png")).exit_code, 0);
    EXPECT_EQ(read_mask(p("l.png")).missing_count(), 64);
    ASSERT_EQ(run("maskgen --size 64x64 --pattern circles --radius 0 -o " + p("c0.png")).exit_code, 0);
    EXPECT_EQ(read_mask(p("c0.png")).missing_count(), 1);
    ASSERT_EQ(run("maskgen --size 64x64 --pattern circles --radius 5 -o " + p("c5.png")).exit_code, 0);
    EXPECT_EQ(read_mask(p("c5.png")).missing_count(), 81);
    EXPECT_EQ(run("maskgen --size 64 -o " + p("x.png")).exit_code, 2);
    EXPECT_EQ(run("maskgen -o " + p("x.png")).exit_code, 2);
}

// --- eval ------------------------------------------------------------------

TEST_F(Cli, EvalIdenticalAndConstant) {
    RunResult r = run("eval " + data("coffee.png") + " " + data("coffee.png"));
    ASSERT_EQ(r.exit_code, 0);
    EXPECT_EQ(r.out, "file,psnr_db,ssim\ncoffee.png,inf,1.000000\n");
    write_png(p("zero.png"), Tensor3(16, 16, 1));
    write_png(p("half.png"), Tensor3::constant({16, 16, 1}, 128.0 / 255.0));
    r = run("eval " + p("zero.png") + " " + p("half.png") + " --csv " + p("e.csv"));
    ASSERT_EQ(r.exit_code, 0);
    // 8-bit half gray is 128/255, not 0.5 exactly.
    const double v = 128.0 / 255.0;
    char want[128];
    std::snprintf(want, sizeof want, "file,psnr_db,ssim\nhalf.png,%.4f,%.6f\n", 10 * std::log10(1 / (v * v)),
                  1e-4 / (v * v + 1e-4));
    EXPECT_EQ(r.out, want);
    EXPECT_EQ(count_lines(p("e.csv")), 2);
    run("eval " + p("zero.png") + " " + p("half.png") + " --csv " + p("e.csv"));
    EXPECT_EQ(count_lines(p("e.csv")), 3);
}

TEST_F(Cli, EvalErrorsExitTwo) {
    EXPECT_EQ(run("eval " + data("coffee.png") + " " + p("missing.png")).exit_code, 2);
    write_png(p("small.png"), Tensor3(16, 16, 3));
    EXPECT_EQ(run("eval " + data("coffee.png") + " " + p("small.png")).exit_code, 2);
}

// --- bench -----------------------------------------------------------------

TEST_F(Cli, BenchGridAndDeterminism) {
    const Tensor3 src = read_image(data("chelsea.png"));
    Tensor3 crop(40, 40, 3);
    for (Index k = 0; k < 3; ++k)
        crop.slice(k) = src.slice(k).block(30, 30, 40, 40);
    write_png(p("crop.png"), crop);
    {
        std::ofstream cfg(p("cfg.json"));
        cfg << R"({"images": ["crop.png"], "strategies": ["centroid", "uniform"], "ratios": [0.5],
                   "algorithms": ["stnn"], "seeds": [7], "admm": {"max_iters": 30}, "output": "a.csv", "threads": 2})";
    }
    ASSERT_EQ(run("bench " + p("cfg.json")).exit_code, 0);
    ASSERT_EQ(run("bench " + p("cfg.json") + " -o " + p("b.csv") + " -j 1").exit_code, 0);
    EXPECT_EQ(count_lines(p("a.csv")), 3);
    EXPECT_EQ(slurp(p("a.csv")), slurp(p("b.csv")));
    EXPECT_TRUE(fs::exists(p("a.csv.timing.csv")));
    EXPECT_EQ(slurp(p("a.csv")).rfind(kBenchHeader, 0), 0u);
}

TEST_F(Cli, BenchConfigErrors) {
    {
        std::ofstream cfg(p("bad.json"));
        cfg << R"({"images": ["x.png"], "ratioz": [0.5]})";
    }
    EXPECT_EQ(run("bench " + p("bad.json")).exit_code, 2);
    {
        std::ofstream cfg(p("bad2.json"));
        cfg << "{ not json";
    }
    EXPECT_EQ(run("bench " + p("bad2.json")).exit_code, 2);
    EXPECT_EQ(run("bench " + p("none.json")).exit_code, 2);
}

TEST(BenchConfig, ReportedRatioGridAccepted) {
    const auto j = nlohmann::json::parse(R"({"images": ["a.png"], "ratios": [0.70, 0.30, 0.20, 0.10, 0.05],
        "strategies": ["centroid", "boundary", "multistage", "uniform"], "algorithms": ["smnn", "stnn"],
        "seeds": [1, 2], "admm": {"transform": "dct", "smoothing": {"sigma": 0.8}}, "slic": {"m": 15}})");
    const BenchConfig c = parse_bench_config(j, "/data");
    EXPECT_EQ(bench_cells(c).size(), 5u * 4 * 2 * 2);
    EXPECT_EQ(c.images[0], fs::path("/data/a.png"));
    EXPECT_EQ(c.admm.transform, TransformKind::DctUnitary);
    EXPECT_EQ(c.admm.smoothing.sigma, 0.8);
    EXPECT_EQ(c.slic.compactness, 15.0);
    const auto cells = bench_cells(c);
    EXPECT_EQ(cells[0].seed, 1u);
    EXPECT_EQ(cells[1].seed, 2u);
    EXPECT_EQ(cells[2].algorithm, Algorithm::Stnn);
}

TEST(BenchConfig, TwoStrategiesGiveTwoRows) {
    const auto j = nlohmann::json::parse(R"({"images": ["a.png"], "strategies": ["centroid", "uniform"],
        "ratios": [0.5], "algorithms": ["stnn"]})");
    EXPECT_EQ(bench_cells(parse_bench_config(j)).size(), 2u);
    EXPECT_THROW(parse_bench_config(nlohmann::json::parse(R"({"images": []})")), ParameterError);
    EXPECT_THROW(parse_bench_config(nlohmann::json::parse(R"({"images": ["a"], "ratios": [1.2]})")), ParameterError);
    EXPECT_THROW(parse_bench_config(nlohmann::json::parse(R"({"images": ["a"], "admm": {"alpha": 0.9}})")),
                 ParameterError);
}

} // namespace
} // namespace superfill

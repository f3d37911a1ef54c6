// Sample an image at 30% with one pixel per superpixel, then fill it back in.
//
//   quickstart [image.png] [out_dir]

#include <filesystem>
#include <iostream>

#include <superfill/superfill.hpp>

int main(int argc, char** argv) {
    namespace fs = std::filesystem;
    using namespace superfill;

    const fs::path input = argc > 1 ? fs::path(argv[1]) : fs::path(SUPERFILL_DEMO_IMAGE);
    const fs::path out_dir = argc > 2 ? fs::path(argv[2]) : fs::current_path();
    try {
        const Tensor3 image = read_image(input);

        SamplingStrategy strategy;  // centroid by default
        const SampleResult sampled = sample_image(image, strategy, 0.30);
        std::cout << "kept " << sampled.mask.observed_count() << " of " << sampled.mask.pixel_count()
                  << " pixels from " << sampled.clusters << " superpixels\n";

        const Tensor3 observed = apply_mask(image, sampled.mask);
        for (Algorithm a : {Algorithm::Smnn, Algorithm::Stnn}) {
            const CompletionReport r = complete(observed, sampled.mask, a);
            const MetricReport m = evaluate(image, r.reconstruction);
            std::cout << to_string(a) << ": " << r.iterations_run << " iterations, PSNR "
                      << format_psnr(m.psnr_db) << " dB, SSIM " << m.ssim << '\n';
            write_png(out_dir / (to_string(a) + ".png"), r.reconstruction);
        }
        write_png(out_dir / "observed.png", observed);
        write_mask(out_dir / "mask.png", sampled.mask);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

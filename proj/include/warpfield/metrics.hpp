// Image metrics with foreground masking (masked-pixel PSNR, zeroed-background
// SSIM) and the deformation runtime benchmark.
#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "warpfield/deform.hpp"
#include "warpfield/image.hpp"

namespace warpfield {

struct MetricReport {
    double psnr = 0;   // dB; +inf when the masked pixels are identical
    double ssim = 0;   // in [-1, 1]
    size_t n_pixels_evaluated = 0;

    bool identical() const { return std::isinf(psnr); }
};

// 10*log10(1 / MSE) over mask-true pixels, images in [0,1]. An empty mask is
// an error; identical masked content returns +inf ("identical" sentinel).
double psnr(const ImageF& pred, const ImageF& gt, const std::vector<uint8_t>& mask);

// Mean local SSIM (11x11 Gaussian window, sigma 1.5, k1=0.01, k2=0.03, L=1)
// after zeroing background pixels in BOTH images; channels are averaged.
// Windows are fully interior ("valid"). Images must be at least 11x11.
double ssim(const ImageF& pred, const ImageF& gt, const std::vector<uint8_t>& mask);

MetricReport metric_report(const ImageF& pred, const ImageF& gt,
                           const std::vector<uint8_t>& mask);
std::string metric_report_json(const MetricReport& report);

// ---------------------------------------------------------------------------

struct BenchResult {
    std::string method;
    size_t points = 0;
    double wall_ms = 0;     // median over repeats, query time only
    double build_ms = 0;    // one-time deformer construction
    int repeats = 0;
    std::vector<double> all_ms;
};

// Times deform_batch over `points` seeded pseudorandom points inside the
// expanded deformed-mesh bbox. The same point set is used for every method.
// Methods run serially; parallelism inside deform_batch still applies.
std::vector<BenchResult> bench_deformers(const PosedPair& pair, const Skeleton& skeleton,
                                         const std::vector<DeformMethod>& methods,
                                         size_t points, int repeats, uint64_t seed,
                                         int grid_resolution = 16);

std::string bench_csv(const std::vector<BenchResult>& results);
std::string bench_json(const std::vector<BenchResult>& results);

}  // namespace warpfield

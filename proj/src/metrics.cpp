#include "warpfield/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "warpfield/rng.hpp"

namespace warpfield {

namespace {

void check_shapes(const ImageF& pred, const ImageF& gt, const std::vector<uint8_t>& mask) {
    if (pred.width != gt.width || pred.height != gt.height || pred.channels != gt.channels)
        throw std::runtime_error("metric: image shapes differ");
    if (mask.size() != pred.pixel_count())
        throw std::runtime_error("metric: mask size does not match image");
}

}  // namespace

double psnr(const ImageF& pred, const ImageF& gt, const std::vector<uint8_t>& mask) {
    check_shapes(pred, gt, mask);
    double sum = 0;
    size_t n = 0;
    for (size_t p = 0; p < mask.size(); ++p) {
        if (!mask[p]) continue;
        for (int c = 0; c < pred.channels; ++c) {
            double d = static_cast<double>(pred.data[p * pred.channels + c]) -
                       static_cast<double>(gt.data[p * gt.channels + c]);
            sum += d * d;
        }
        ++n;
    }
    if (n == 0) throw std::runtime_error("psnr: empty mask");
    double mse = sum / (static_cast<double>(n) * pred.channels);
    if (mse == 0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const ImageF& pred, const ImageF& gt, const std::vector<uint8_t>& mask) {
    check_shapes(pred, gt, mask);
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5, kC1 = 0.01 * 0.01, kC2 = 0.03 * 0.03;
    if (pred.width < kWin || pred.height < kWin)
        throw std::runtime_error("ssim: image smaller than the 11x11 window");

    double kernel[kWin];
    double ksum = 0;
    for (int k = 0; k < kWin; ++k) {
        double d = k - (kWin - 1) / 2.0;
        kernel[k] = std::exp(-d * d / (2 * kSigma * kSigma));
        ksum += kernel[k];
    }
    for (double& k : kernel) k /= ksum;

    const int w = pred.width, h = pred.height, ch = pred.channels;
    auto masked = [&](const ImageF& img, int i, int j, int c) {
        size_t p = static_cast<size_t>(j) * w + i;
        return mask[p] ? static_cast<double>(img.data[p * ch + c]) : 0.0;
    };

    double total = 0;
    size_t count = 0;
    for (int c = 0; c < ch; ++c) {
        // Separable Gaussian over x, y, x*x, y*y, x*y; horizontal pass first.
        std::vector<double> hx(static_cast<size_t>(w) * h), hy(hx.size()), hxx(hx.size()),
            hyy(hx.size()), hxy(hx.size());
        for (int j = 0; j < h; ++j)
            for (int i = 0; i + kWin <= w; ++i) {
                double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
                for (int k = 0; k < kWin; ++k) {
                    double a = masked(pred, i + k, j, c), b = masked(gt, i + k, j, c);
                    sx += kernel[k] * a;
                    sy += kernel[k] * b;
                    sxx += kernel[k] * a * a;
                    syy += kernel[k] * b * b;
                    sxy += kernel[k] * a * b;
                }
                size_t idx = static_cast<size_t>(j) * w + i;
                hx[idx] = sx; hy[idx] = sy; hxx[idx] = sxx; hyy[idx] = syy; hxy[idx] = sxy;
            }
        for (int j = 0; j + kWin <= h; ++j)
            for (int i = 0; i + kWin <= w; ++i) {
                double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
                for (int k = 0; k < kWin; ++k) {
                    size_t idx = static_cast<size_t>(j + k) * w + i;
                    mx += kernel[k] * hx[idx];
                    my += kernel[k] * hy[idx];
                    mxx += kernel[k] * hxx[idx];
                    myy += kernel[k] * hyy[idx];
                    mxy += kernel[k] * hxy[idx];
                }
                double var_x = mxx - mx * mx, var_y = myy - my * my;
                double cov = mxy - mx * my;
                double s = ((2 * mx * my + kC1) * (2 * cov + kC2)) /
                           ((mx * mx + my * my + kC1) * (var_x + var_y + kC2));
                total += s;
                ++count;
            }
    }
    return total / static_cast<double>(count);
}

MetricReport metric_report(const ImageF& pred, const ImageF& gt,
                           const std::vector<uint8_t>& mask) {
    MetricReport r;
    r.psnr = psnr(pred, gt, mask);
    r.ssim = ssim(pred, gt, mask);
    r.n_pixels_evaluated = 0;
    for (uint8_t m : mask) r.n_pixels_evaluated += m ? 1 : 0;
    return r;
}

std::string metric_report_json(const MetricReport& report) {
    std::ostringstream os;
    os.precision(12);
    os << "{\"psnr_db\":";
    if (report.identical())
        os << "\"identical\"";
    else
        os << report.psnr;
    os << ",\"ssim\":" << report.ssim
       << ",\"n_pixels_evaluated\":" << report.n_pixels_evaluated << "}";
    return os.str();
}

// ---------------------------------------------------------------------------

std::vector<BenchResult> bench_deformers(const PosedPair& pair, const Skeleton& skeleton,
                                         const std::vector<DeformMethod>& methods,
                                         size_t points, int repeats, uint64_t seed,
                                         int grid_resolution) {
    using clock = std::chrono::steady_clock;
    auto ms_since = [](clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };

    // One fixed point set for every method.
    Aabb box = expand(pair.deformed, 0.05).bounds();
    std::vector<Vec3> query(points);
    Rng rng(seed, 0xbe6c4ULL);
    for (Vec3& p : query)
        p = {rng.uniform(box.lo.x, box.hi.x), rng.uniform(box.lo.y, box.hi.y),
             rng.uniform(box.lo.z, box.hi.z)};

    std::vector<BenchResult> results;
    for (DeformMethod method : methods) {
        BenchResult r;
        r.method = to_string(method);
        r.points = points;
        r.repeats = repeats;

        auto t0 = clock::now();
        Deformer deformer = [&] {
            switch (method) {
                case DeformMethod::SurfaceField: return Deformer::surface_field(pair);
                case DeformMethod::Skinning: return Deformer::skinning(skeleton);
                case DeformMethod::MvcFull: return Deformer::mvc_full(pair);
                case DeformMethod::MvcGrid: return Deformer::mvc_grid(pair, grid_resolution);
                case DeformMethod::Identity: return Deformer::identity();
            }
            return Deformer::identity();
        }();
        r.build_ms = ms_since(t0);

        for (int rep = 0; rep < repeats; ++rep) {
            t0 = clock::now();
            volatile double sink = 0;
            std::vector<Vec3> out = deform_batch(query, deformer);
            sink = out.empty() ? 0 : out.back().x;
            (void)sink;
            r.all_ms.push_back(ms_since(t0));
        }
        std::vector<double> sorted = r.all_ms;
        std::sort(sorted.begin(), sorted.end());
        r.wall_ms = sorted[sorted.size() / 2];
        if (sorted.size() % 2 == 0 && !sorted.empty())
            r.wall_ms = 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
        results.push_back(std::move(r));
    }
    return results;
}

std::string bench_csv(const std::vector<BenchResult>& results) {
    std::ostringstream os;
    os << "method,points,wall_ms_median,repeats\n";
    for (const BenchResult& r : results)
        os << r.method << "," << r.points << "," << r.wall_ms << "," << r.repeats << "\n";
    return os.str();
}

std::string bench_json(const std::vector<BenchResult>& results) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < results.size(); ++i) {
        const BenchResult& r = results[i];
        if (i) os << ",";
        os << "{\"method\":\"" << r.method << "\",\"points\":" << r.points
           << ",\"wall_ms_median\":" << r.wall_ms << ",\"build_ms\":" << r.build_ms
           << ",\"repeats\":" << r.repeats << ",\"all_ms\":[";
        for (size_t k = 0; k < r.all_ms.size(); ++k) {
            if (k) os << ",";
            os << r.all_ms[k];
        }
        os << "]}";
    }
    os << "]";
    return os.str();
}

}  // namespace warpfield

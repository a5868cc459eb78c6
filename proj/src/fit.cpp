#include "warpfield/fit.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "warpfield/rng.hpp"
#include "warpfield/threading.hpp"

namespace warpfield {

double l2_loss(const std::vector<Vec3>& pred, const std::vector<Vec3>& target,
               const std::vector<uint8_t>& mask) {
    if (pred.size() != target.size() || pred.size() != mask.size())
        throw std::runtime_error("l2_loss: size mismatch");
    double sum = 0;
    size_t n = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        if (!mask[i]) continue;
        Vec3 d = pred[i] - target[i];
        sum += norm2(d);
        ++n;
    }
    if (n == 0) throw std::runtime_error("l2_loss: no unmasked rays");
    return sum / (3.0 * static_cast<double>(n));
}

Gradients Gradients::zeros_like(const TriPlane& tri, const Decoder& dec) {
    Gradients g;
    for (auto& p : g.planes) p.assign(tri.plane_size(), 0.0);
    g.w1.assign(dec.w1.size(), 0.0);
    g.b1.assign(dec.b1.size(), 0.0);
    g.w2.assign(dec.w2.size(), 0.0);
    g.b2.assign(dec.b2.size(), 0.0);
    return g;
}

void Gradients::add(const Gradients& other) {
    auto acc = [](std::vector<double>& a, const std::vector<double>& b) {
        for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    };
    for (int p = 0; p < 3; ++p) acc(planes[p], other.planes[p]);
    acc(w1, other.w1);
    acc(b1, other.b1);
    acc(w2, other.w2);
    acc(b2, other.b2);
}

void Gradients::scale(double s) {
    auto sc = [s](std::vector<double>& a) {
        for (double& v : a) v *= s;
    };
    for (auto& p : planes) sc(p);
    sc(w1);
    sc(b1);
    sc(w2);
    sc(b2);
}

namespace {

// Per-sample cached state of one ray forward pass.
struct SampleTape {
    BilinearFootprint footprint[3];
    double delta = 0;
    double alpha = 0;
    double transmittance = 1;
};

// Accumulates the gradient of the (unnormalized) squared error of one ray.
// Scaling by 1/(3n) happens once at the end of fit_forward_backward.
double backprop_ray(const RayBatchItem& item, const TriPlane& tri, const Decoder& dec,
                    const SamplingConfig& cfg, Rng rng, Gradients& g,
                    std::vector<double>& scratch) {
    const int c_in = tri.channels, h_n = dec.hidden, c_out = dec.out_channels;
    const int r_n = 1 + c_out;

    Vec3 pred;
    if (!item.bounds.valid()) {
        pred = cfg.background;  // no parameters involved
        Vec3 d = pred - item.target;
        return norm2(d);
    }

    const std::vector<double> depths =
        stratified_samples(item.bounds.t_near, item.bounds.t_far, cfg.n_coarse, cfg.jitter, rng);
    const size_t n = depths.size();

    // Forward, recording everything backward needs.
    // scratch layout per sample: feat (c_in) | hidden (h_n) | raw (r_n)
    const size_t stride = static_cast<size_t>(c_in) + h_n + r_n;
    scratch.resize(n * stride);
    std::vector<SampleTape> tape(n);
    std::vector<double> features(n * c_out);
    std::vector<double> sigmas(n);

    for (size_t i = 0; i < n; ++i) {
        const Vec3 x = item.ray.origin + item.ray.dir * depths[i];
        const Vec3 xc = (*item.deformer)(x);
        double* feat = scratch.data() + i * stride;
        double* hidden = feat + c_in;
        double* raw = hidden + h_n;

        tape[i].footprint[0] = plane_footprint(tri.n, xc.x, xc.y);
        tape[i].footprint[1] = plane_footprint(tri.n, xc.y, xc.z);
        tape[i].footprint[2] = plane_footprint(tri.n, xc.x, xc.z);
        for (int c = 0; c < c_in; ++c) feat[c] = 0.0;
        for (int p = 0; p < 3; ++p) {
            const BilinearFootprint& fp = tape[i].footprint[p];
            const std::vector<float>& plane = tri.planes[p];
            for (int k = 0; k < 4; ++k) {
                const float* texel = plane.data() + static_cast<size_t>(fp.texel[k]) * c_in;
                const double w = fp.weight[k];
                for (int c = 0; c < c_in; ++c) feat[c] += w * texel[c];
            }
        }
        decode_raw(dec, feat, hidden, raw);
        sigmas[i] = softplus(raw[0]);
        for (int c = 0; c < c_out; ++c) features[i * c_out + c] = raw[1 + c];
    }

    double transmittance = 1.0;
    double integrated[3] = {0, 0, 0};
    double alpha_total;
    {
        for (size_t i = 0; i < n; ++i) {
            tape[i].delta = i + 1 < n ? depths[i + 1] - depths[i] : 0.0;
            tape[i].alpha = 1.0 - std::exp(-sigmas[i] * tape[i].delta);
            tape[i].transmittance = transmittance;
            const double w = transmittance * tape[i].alpha;
            for (int c = 0; c < 3 && c < c_out; ++c)
                integrated[c] += w * features[i * c_out + c];
            transmittance *= 1.0 - tape[i].alpha;
        }
        alpha_total = 1.0 - transmittance;
    }

    double s[3], dF[3];
    double dalpha = 0;
    double loss = 0;
    for (int c = 0; c < 3; ++c) {
        s[c] = c < c_out ? sigmoid(integrated[c]) : 0.0;
        const double pred_c = alpha_over(s[c], alpha_total, cfg.background[c]);
        const double r = pred_c - (c == 0 ? item.target.x : (c == 1 ? item.target.y : item.target.z));
        loss += r * r;
        const double gpred = 2.0 * r;
        dF[c] = gpred * alpha_total * s[c] * (1.0 - s[c]);
        dalpha += gpred * (s[c] - cfg.background[c]);
    }

    // Composite backward: dw_i = sum_c dF_c f_ic + dalpha, then
    // dsigma_k = delta_k * (G_k T_k (1-alpha_k) - sum_{i>k} G_i w_i).
    std::vector<double> g_w(n);
    for (size_t i = 0; i < n; ++i) {
        double gi = dalpha;
        for (int c = 0; c < 3 && c < c_out; ++c) gi += dF[c] * features[i * c_out + c];
        g_w[i] = gi;
    }
    std::vector<double> dsigma(n);
    double suffix = 0;  // sum over i>k of G_i w_i
    for (size_t k = n; k-- > 0;) {
        const double w_k = tape[k].transmittance * tape[k].alpha;
        dsigma[k] =
            tape[k].delta * (g_w[k] * tape[k].transmittance * (1.0 - tape[k].alpha) - suffix);
        suffix += g_w[k] * w_k;
    }

    // Per-sample decoder + plane backward.
    std::vector<double> draw(r_n), dhidden(h_n), dfeat(c_in);
    for (size_t i = 0; i < n; ++i) {
        const double* feat = scratch.data() + i * stride;
        const double* hidden = feat + c_in;
        const double* raw = hidden + h_n;

        draw[0] = dsigma[i] * sigmoid(raw[0]);  // softplus'
        const double w_i = tape[i].transmittance * tape[i].alpha;
        for (int c = 0; c < c_out; ++c) draw[1 + c] = c < 3 ? w_i * dF[c] : 0.0;

        for (int h = 0; h < h_n; ++h) {
            const float* row = dec.w2.data() + static_cast<size_t>(h) * r_n;
            double* grow = g.w2.data() + static_cast<size_t>(h) * r_n;
            double dh = 0;
            const double act = hidden[h];
            for (int k = 0; k < r_n; ++k) {
                dh += draw[k] * row[k];
                grow[k] += act * draw[k];
            }
            dhidden[h] = act > 0 ? dh : 0.0;
        }
        for (int k = 0; k < r_n; ++k) g.b2[k] += draw[k];

        for (int c = 0; c < c_in; ++c) {
            const float* row = dec.w1.data() + static_cast<size_t>(c) * h_n;
            double* grow = g.w1.data() + static_cast<size_t>(c) * h_n;
            const double f = feat[c];
            double df = 0;
            for (int h = 0; h < h_n; ++h) {
                df += row[h] * dhidden[h];
                grow[h] += f * dhidden[h];
            }
            dfeat[c] = df;
        }
        for (int h = 0; h < h_n; ++h) g.b1[h] += dhidden[h];

        for (int p = 0; p < 3; ++p) {
            const BilinearFootprint& fp = tape[i].footprint[p];
            std::vector<double>& gplane = g.planes[p];
            for (int k = 0; k < 4; ++k) {
                double* texel = gplane.data() + static_cast<size_t>(fp.texel[k]) * c_in;
                const double w = fp.weight[k];
                for (int c = 0; c < c_in; ++c) texel[c] += w * dfeat[c];
            }
        }
    }
    return loss;
}

constexpr int kGradShards = 8;
constexpr size_t kShardChunk = 64;

}  // namespace

double fit_forward_backward(const std::vector<RayBatchItem>& batch, const TriPlane& tri,
                            const Decoder& dec, const SamplingConfig& cfg, uint64_t seed,
                            Gradients& grads) {
    const size_t n = batch.size();
    if (n == 0) throw std::runtime_error("fit_forward_backward: empty batch");

    // Fixed shard count: each shard owns chunks shard, shard+K, ... and
    // processes them in order, so accumulation never depends on threading.
    const size_t n_chunks = (n + kShardChunk - 1) / kShardChunk;
    const int shards = static_cast<int>(std::min<size_t>(kGradShards, n_chunks));
    std::vector<Gradients> shard_grads;
    shard_grads.reserve(shards);
    for (int s = 0; s < shards; ++s) shard_grads.push_back(Gradients::zeros_like(tri, dec));
    std::vector<double> ray_loss(n, 0.0);

    auto run_shard = [&](int s) {
        std::vector<double> scratch;
        for (size_t c = s; c < n_chunks; c += shards) {
            const size_t begin = c * kShardChunk, end = std::min(n, begin + kShardChunk);
            for (size_t i = begin; i < end; ++i)
                ray_loss[i] = backprop_ray(batch[i], tri, dec, cfg,
                                           Rng(seed, 0x6a697474ULL, i), shard_grads[s], scratch);
        }
    };
    const int workers = std::min(shards, thread_cap());
    if (workers <= 1) {
        for (int s = 0; s < shards; ++s) run_shard(s);
    } else {
        std::vector<std::thread> pool;
        for (int s = 1; s < shards; ++s) pool.emplace_back(run_shard, s);
        run_shard(0);
        for (auto& t : pool) t.join();
    }

    // Pairwise tree reduction in fixed order.
    for (int stepw = 1; stepw < shards; stepw *= 2)
        for (int s = 0; s + stepw < shards; s += 2 * stepw)
            shard_grads[s].add(shard_grads[s + stepw]);
    grads = std::move(shard_grads[0]);

    double loss = 0;
    for (double l : ray_loss) loss += l;
    loss /= 3.0 * static_cast<double>(n);
    grads.scale(1.0 / (3.0 * static_cast<double>(n)));
    return loss;
}

// ---------------------------------------------------------------------------

AdamState AdamState::zeros_like(const TriPlane& tri, const Decoder& dec) {
    AdamState s;
    for (int p = 0; p < 3; ++p) {
        s.m_planes[p].assign(tri.plane_size(), 0.0);
        s.v_planes[p].assign(tri.plane_size(), 0.0);
    }
    auto zero = [](std::vector<double>& v, size_t n) { v.assign(n, 0.0); };
    zero(s.m_w1, dec.w1.size());
    zero(s.v_w1, dec.w1.size());
    zero(s.m_b1, dec.b1.size());
    zero(s.v_b1, dec.b1.size());
    zero(s.m_w2, dec.w2.size());
    zero(s.v_w2, dec.w2.size());
    zero(s.m_b2, dec.b2.size());
    zero(s.v_b2, dec.b2.size());
    return s;
}

namespace {

void adam_update(std::vector<float>& param, const std::vector<double>& grad,
                 std::vector<double>& m, std::vector<double>& v, double lr_t, double beta1,
                 double beta2, double eps) {
    for (size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        param[i] = static_cast<float>(static_cast<double>(param[i]) -
                                      lr_t * m[i] / (std::sqrt(v[i]) + eps));
    }
}

}  // namespace

void adam_step(TriPlane& tri, Decoder& dec, const Gradients& grads, AdamState& state,
               const FitConfig& cfg) {
    state.step += 1;
    const double t = static_cast<double>(state.step);
    // Fold the bias correction into the step size (standard reformulation).
    const double lr_t =
        cfg.step_size * std::sqrt(1.0 - std::pow(cfg.beta2, t)) / (1.0 - std::pow(cfg.beta1, t));
    const double eps_t = cfg.eps * std::sqrt(1.0 - std::pow(cfg.beta2, t));
    for (int p = 0; p < 3; ++p)
        adam_update(tri.planes[p], grads.planes[p], state.m_planes[p], state.v_planes[p], lr_t,
                    cfg.beta1, cfg.beta2, eps_t);
    adam_update(dec.w1, grads.w1, state.m_w1, state.v_w1, lr_t, cfg.beta1, cfg.beta2, eps_t);
    adam_update(dec.b1, grads.b1, state.m_b1, state.v_b1, lr_t, cfg.beta1, cfg.beta2, eps_t);
    adam_update(dec.w2, grads.w2, state.m_w2, state.v_w2, lr_t, cfg.beta1, cfg.beta2, eps_t);
    adam_update(dec.b2, grads.b2, state.m_b2, state.v_b2, lr_t, cfg.beta1, cfg.beta2, eps_t);
}

// ---------------------------------------------------------------------------

SceneNormalization scene_normalization(const std::vector<const PosedPair*>& pairs,
                                       double growth) {
    std::vector<Aabb> boxes;
    for (const PosedPair* p : pairs) {
        boxes.push_back(expand(p->deformed, growth).bounds());
        boxes.push_back(expand(p->canonical, growth).bounds());
    }
    return compute_normalization(boxes);
}

FitResult fit_scene(const std::vector<TrainSample>& samples, const FitConfig& cfg) {
    if (samples.empty()) throw std::runtime_error("fit_scene: no samples");
    for (const TrainSample& s : samples) {
        if (s.image.width != s.camera.width || s.image.height != s.camera.height)
            throw std::runtime_error("fit_scene: image dims do not match camera");
        if (s.image.channels != 3) throw std::runtime_error("fit_scene: images must be RGB");
        if (s.pair.canonical.vertices.size() != samples[0].pair.canonical.vertices.size())
            throw std::runtime_error("fit_scene: samples disagree on the canonical mesh");
    }

    std::vector<const PosedPair*> pairs;
    for (const TrainSample& s : samples) pairs.push_back(&s.pair);
    const SceneNormalization norm = scene_normalization(pairs, cfg.sampling.growth);

    // Normalized per-frame scenes with precomputed ray bounds.
    struct Frame {
        Camera camera;
        PosedPair pair;
        Deformer deformer = Deformer::identity();
        std::vector<RayInterval> bounds;  // per pixel
    };
    std::vector<Frame> frames(samples.size());
    struct PoolEntry {
        uint32_t frame;
        uint32_t pixel;
    };
    std::vector<PoolEntry> pool;
    for (size_t f = 0; f < samples.size(); ++f) {
        Frame& fr = frames[f];
        fr.camera = normalized(samples[f].camera, norm);
        fr.pair = normalized(samples[f].pair, norm);
        switch (cfg.method) {
            case DeformMethod::SurfaceField:
                fr.deformer = Deformer::surface_field(fr.pair);
                break;
            case DeformMethod::Skinning:
                if (!samples[f].skeleton)
                    throw std::runtime_error("fit_scene: sample has no skeleton");
                fr.deformer = Deformer::skinning(normalized(*samples[f].skeleton, norm));
                break;
            case DeformMethod::MvcFull:
                fr.deformer = Deformer::mvc_full(fr.pair);
                break;
            case DeformMethod::MvcGrid:
                fr.deformer = Deformer::mvc_grid(fr.pair, cfg.grid_resolution);
                break;
            case DeformMethod::Identity:
                fr.deformer = Deformer::identity();
                break;
        }
        const Bvh hull(expand(fr.pair.deformed, cfg.sampling.growth));
        const size_t n_pixels = static_cast<size_t>(fr.camera.width) * fr.camera.height;
        fr.bounds.resize(n_pixels);
        parallel_chunks(n_pixels, 512, [&](size_t begin, size_t end) {
            for (size_t p = begin; p < end; ++p) {
                const int i = static_cast<int>(p % fr.camera.width);
                const int j = static_cast<int>(p / fr.camera.width);
                fr.bounds[p] = ray_mesh_bounds(fr.camera.pixel_ray(i + 0.5, j + 0.5), hull);
            }
        });
        for (size_t p = 0; p < n_pixels; ++p) {
            if (samples[f].mask && !(*samples[f].mask)[p]) continue;
            pool.push_back({static_cast<uint32_t>(f), static_cast<uint32_t>(p)});
        }
    }
    if (pool.empty()) throw std::runtime_error("fit_scene: all pixels masked out");

    FitResult result;
    result.normalization = norm;
    result.planes =
        TriPlane::random(cfg.plane_resolution, cfg.plane_channels, 0.01, cfg.seed);
    result.decoder =
        Decoder::init(cfg.plane_channels, cfg.hidden, cfg.out_channels, cfg.seed + 1);
    if (cfg.out_channels < 3)
        throw std::runtime_error("fit_scene: need at least 3 feature channels for RGB");

    result.adam = AdamState::zeros_like(result.planes, result.decoder);
    const size_t batch_size = std::min<size_t>(cfg.batch_rays, pool.size());
    std::vector<uint32_t> pool_index(pool.size());

    for (int step = 0; step < cfg.steps; ++step) {
        // Partial Fisher-Yates: batch drawn without replacement within a step.
        Rng rng(cfg.seed, 0xba7c8ULL, static_cast<uint64_t>(step));
        std::iota(pool_index.begin(), pool_index.end(), 0u);
        std::vector<RayBatchItem> batch(batch_size);
        for (size_t k = 0; k < batch_size; ++k) {
            size_t j = k + static_cast<size_t>(rng.below(pool_index.size() - k));
            std::swap(pool_index[k], pool_index[j]);
            const PoolEntry& e = pool[pool_index[k]];
            const Frame& fr = frames[e.frame];
            const int i = static_cast<int>(e.pixel % fr.camera.width);
            const int jrow = static_cast<int>(e.pixel / fr.camera.width);
            RayBatchItem& item = batch[k];
            item.ray = fr.camera.pixel_ray(i + 0.5, jrow + 0.5);
            item.bounds = fr.bounds[e.pixel];
            item.deformer = &fr.deformer;
            item.target = {samples[e.frame].image.at(i, jrow, 0),
                           samples[e.frame].image.at(i, jrow, 1),
                           samples[e.frame].image.at(i, jrow, 2)};
        }

        Gradients grads;
        const uint64_t step_seed = hash_combine(cfg.seed, 0x57e9ULL + step);
        double loss = fit_forward_backward(batch, result.planes, result.decoder, cfg.sampling,
                                           step_seed, grads);
        result.loss_curve.push_back(loss);
        adam_step(result.planes, result.decoder, grads, result.adam, cfg);
    }
    return result;
}

// ---------------------------------------------------------------------------

namespace {
void write_doubles(std::ostream& out, const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}
void read_doubles(std::istream& in, std::vector<double>& v, size_t n) {
    v.resize(n);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
}
}  // namespace

void save_checkpoint(const std::string& path, const TriPlane& tri, const Decoder& dec,
                     const AdamState& state) {
    save_field(tri, dec, path);
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out.write("ADAM", 4);
    uint64_t step = static_cast<uint64_t>(state.step);
    out.write(reinterpret_cast<const char*>(&step), 8);
    for (int p = 0; p < 3; ++p) write_doubles(out, state.m_planes[p]);
    for (int p = 0; p < 3; ++p) write_doubles(out, state.v_planes[p]);
    write_doubles(out, state.m_w1);
    write_doubles(out, state.v_w1);
    write_doubles(out, state.m_b1);
    write_doubles(out, state.v_b1);
    write_doubles(out, state.m_w2);
    write_doubles(out, state.v_w2);
    write_doubles(out, state.m_b2);
    write_doubles(out, state.v_b2);
    if (!out) throw std::runtime_error("write failed: " + path);
}

void load_checkpoint(const std::string& path, TriPlane& tri, Decoder& dec, AdamState& state) {
    load_field(path, tri, dec);
    std::ifstream in(path, std::ios::binary);
    // Skip the TPLF block: header + planes + decoder.
    size_t tplf = 4 + 16 + 3 * tri.plane_size() * 4 +
                  (dec.w1.size() + dec.b1.size() + dec.w2.size() + dec.b2.size()) * 4;
    in.seekg(static_cast<std::streamoff>(tplf));
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "ADAM", 4) != 0)
        throw std::runtime_error(path + ": checkpoint has no Adam state");
    uint64_t step = 0;
    in.read(reinterpret_cast<char*>(&step), 8);
    state.step = static_cast<int64_t>(step);
    for (int p = 0; p < 3; ++p) read_doubles(in, state.m_planes[p], tri.plane_size());
    for (int p = 0; p < 3; ++p) read_doubles(in, state.v_planes[p], tri.plane_size());
    read_doubles(in, state.m_w1, dec.w1.size());
    read_doubles(in, state.v_w1, dec.w1.size());
    read_doubles(in, state.m_b1, dec.b1.size());
    read_doubles(in, state.v_b1, dec.b1.size());
    read_doubles(in, state.m_w2, dec.w2.size());
    read_doubles(in, state.v_w2, dec.w2.size());
    read_doubles(in, state.m_b2, dec.b2.size());
    read_doubles(in, state.v_b2, dec.b2.size());
    if (!in) throw std::runtime_error(path + ": truncated checkpoint");
}

}  // namespace warpfield

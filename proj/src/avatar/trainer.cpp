#include "avatar/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "avatar/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace avatar {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-15;

json config_to_json(const TrainConfig& c) {
    json j;
    j["iterations"] = c.iterations;
    j["seed"] = c.seed;
    j["sh_degree"] = c.sh_degree;
    j["sh_warmup_interval"] = c.sh_warmup_interval;
    j["checkpoint_interval"] = c.checkpoint_interval;
    j["log_interval"] = c.log_interval;
    j["init_opacity"] = c.init_opacity;
    j["init_scale_factor"] = c.init_scale_factor;
    j["perceptual"] = c.perceptual;
    j["precision"] = c.precision == Precision::F32 ? "f32" : "f64";
    j["tile_size"] = c.tile_size;
    j["lr"] = {{"center_init", c.lr.center_init}, {"center_final", c.lr.center_final},
               {"sh", c.lr.sh},                   {"opacity", c.lr.opacity},
               {"scale", c.lr.scale},             {"rotation", c.lr.rotation}};
    j["loss"] = {{"dssim", c.loss.dssim},
                 {"lpips", c.loss.lpips},
                 {"normal", c.loss.normal},
                 {"self_supervised", c.loss.self_supervised},
                 {"area", c.loss.area},
                 {"opacity", c.loss.opacity},
                 {"mask", c.loss.mask}};
    j["densify"] = {{"grad_threshold", c.densify.grad_threshold},
                    {"split_scale_threshold", c.densify.split_scale_threshold},
                    {"opacity_prune_threshold", c.densify.opacity_prune_threshold},
                    {"max_world_size", c.densify.max_world_size},
                    {"eccentricity_threshold", c.densify.eccentricity_threshold},
                    {"eccentricity_filter", c.densify.eccentricity_filter},
                    {"eccentricity_definition",
                     c.densify.eccentricity_definition == EccentricityDefinition::RatioModulus
                         ? "ratio_modulus"
                         : "axis_ratio"},
                    {"interval", c.densify.interval},
                    {"stop_iteration", c.densify.stop_iteration},
                    {"split_scale_shrink", c.densify.split_scale_shrink}};
    j["field"] = {{"resolution", c.field.resolution},
                  {"diffusion_iters", c.field.diffusion_iters},
                  {"margin", c.field.margin}};
    return j;
}

TrainConfig config_from_json(const json& j, const std::string& origin) {
    TrainConfig c;
    try {
        c.iterations = j.value("iterations", c.iterations);
        c.seed = j.value("seed", c.seed);
        c.sh_degree = j.value("sh_degree", c.sh_degree);
        c.sh_warmup_interval = j.value("sh_warmup_interval", c.sh_warmup_interval);
        c.checkpoint_interval = j.value("checkpoint_interval", c.checkpoint_interval);
        c.log_interval = j.value("log_interval", c.log_interval);
        c.init_opacity = j.value("init_opacity", c.init_opacity);
        c.init_scale_factor = j.value("init_scale_factor", c.init_scale_factor);
        c.perceptual = j.value("perceptual", c.perceptual);
        const std::string prec = j.value("precision", std::string("f64"));
        if (prec == "f32")
            c.precision = Precision::F32;
        else if (prec == "f64")
            c.precision = Precision::F64;
        else
            throw std::runtime_error("precision must be f32 or f64");
        c.tile_size = j.value("tile_size", c.tile_size);
        if (j.contains("lr")) {
            const json& l = j.at("lr");
            c.lr.center_init = l.value("center_init", c.lr.center_init);
            c.lr.center_final = l.value("center_final", c.lr.center_final);
            c.lr.sh = l.value("sh", c.lr.sh);
            c.lr.opacity = l.value("opacity", c.lr.opacity);
            c.lr.scale = l.value("scale", c.lr.scale);
            c.lr.rotation = l.value("rotation", c.lr.rotation);
        }
        if (j.contains("loss")) {
            const json& l = j.at("loss");
            c.loss.dssim = l.value("dssim", c.loss.dssim);
            c.loss.lpips = l.value("lpips", c.loss.lpips);
            c.loss.normal = l.value("normal", c.loss.normal);
            c.loss.self_supervised = l.value("self_supervised", c.loss.self_supervised);
            c.loss.area = l.value("area", c.loss.area);
            c.loss.opacity = l.value("opacity", c.loss.opacity);
            c.loss.mask = l.value("mask", c.loss.mask);
        }
        if (j.contains("densify")) {
            const json& d = j.at("densify");
            c.densify.grad_threshold = d.value("grad_threshold", c.densify.grad_threshold);
            c.densify.split_scale_threshold =
                d.value("split_scale_threshold", c.densify.split_scale_threshold);
            c.densify.opacity_prune_threshold =
                d.value("opacity_prune_threshold", c.densify.opacity_prune_threshold);
            c.densify.max_world_size = d.value("max_world_size", c.densify.max_world_size);
            c.densify.eccentricity_threshold =
                d.value("eccentricity_threshold", c.densify.eccentricity_threshold);
            c.densify.eccentricity_filter =
                d.value("eccentricity_filter", c.densify.eccentricity_filter);
            const std::string def = d.value("eccentricity_definition", std::string("axis_ratio"));
            if (def == "axis_ratio")
                c.densify.eccentricity_definition = EccentricityDefinition::AxisRatio;
            else if (def == "ratio_modulus")
                c.densify.eccentricity_definition = EccentricityDefinition::RatioModulus;
            else
                throw std::runtime_error("unknown eccentricity_definition: " + def);
            c.densify.interval = d.value("interval", c.densify.interval);
            c.densify.stop_iteration = d.value("stop_iteration", c.densify.stop_iteration);
            c.densify.split_scale_shrink =
                d.value("split_scale_shrink", c.densify.split_scale_shrink);
        }
        if (j.contains("field")) {
            const json& f = j.at("field");
            c.field.resolution = f.value("resolution", c.field.resolution);
            c.field.diffusion_iters = f.value("diffusion_iters", c.field.diffusion_iters);
            c.field.margin = f.value("margin", c.field.margin);
        }
    } catch (const json::exception& e) {
        throw std::runtime_error("bad config " + origin + ": " + e.what());
    }
    return c;
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

void write_vec(std::ostream& os, const double* p, int n) {
    os.write(reinterpret_cast<const char*>(p), n * sizeof(double));
}

void read_vec(std::istream& is, double* p, int n) {
    is.read(reinterpret_cast<char*>(p), n * sizeof(double));
}

}  // namespace

TrainConfig load_train_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed JSON in " + path + ": " + e.what());
    }
    return config_from_json(j, path);
}

void save_train_config(const TrainConfig& config, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os << config_to_json(config).dump(2) << '\n';
    if (!os) throw std::runtime_error("write failed: " + path);
}

uint64_t config_hash(const TrainConfig& config) {
    const std::string dump = config_to_json(config).dump();
    return fnv1a(dump.data(), dump.size());
}

void AdamState::resize(size_t n, int sh_coeffs) {
    m_center.assign(n, Vec3::Zero());
    v_center.assign(n, Vec3::Zero());
    m_quat.assign(n, Vec4::Zero());
    v_quat.assign(n, Vec4::Zero());
    m_scale.assign(n, Vec2::Zero());
    v_scale.assign(n, Vec2::Zero());
    m_opacity.assign(n, 0.0);
    v_opacity.assign(n, 0.0);
    m_sh.assign(n, std::vector<Vec3>(sh_coeffs, Vec3::Zero()));
    v_sh.assign(n, std::vector<Vec3>(sh_coeffs, Vec3::Zero()));
}

void AdamState::remap(const std::vector<int32_t>& parent_of, int sh_coeffs) {
    AdamState next;
    next.resize(parent_of.size(), sh_coeffs);
    next.step = step;
    for (size_t i = 0; i < parent_of.size(); ++i) {
        const int32_t p = parent_of[i];
        if (p < 0) continue;  // fresh surfel starts with zero moments
        next.m_center[i] = m_center[p];
        next.v_center[i] = v_center[p];
        next.m_quat[i] = m_quat[p];
        next.v_quat[i] = v_quat[p];
        next.m_scale[i] = m_scale[p];
        next.v_scale[i] = v_scale[p];
        next.m_opacity[i] = m_opacity[p];
        next.v_opacity[i] = v_opacity[p];
        next.m_sh[i] = m_sh[p];
        next.v_sh[i] = v_sh[p];
    }
    *this = std::move(next);
}

Trainer::Trainer(Dataset dataset, TrainConfig config)
    : dataset_(std::move(dataset)), config_(std::move(config)), rng_(config_.seed) {
    if (dataset_.train_samples.empty())
        throw std::runtime_error("trainer: dataset has no training samples");
    init_surfels();
}

void Trainer::init_surfels() {
    const SkinnedTemplate& tmpl = dataset_.skinned_template;
    const std::vector<Vec3> normals = tmpl.vertex_normals();
    const std::vector<double> edges = tmpl.mean_edge_lengths();
    surfels_.clear();
    surfels_.reserve(tmpl.vertex_count());
    for (int i = 0; i < tmpl.vertex_count(); ++i) {
        const double s = std::max(1e-4, edges[i] * config_.init_scale_factor);
        surfels_.push_back(make_surfel(tmpl.rest_vertices[i], frame_from_normal(normals[i]),
                                       Vec2(s, s), config_.init_opacity, config_.sh_degree,
                                       Vec3(0.5, 0.5, 0.5)));
    }
    const int sh_n = sh_coeff_count(config_.sh_degree);
    adam_.resize(surfels_.size(), sh_n);
    densify_stats_.resize(surfels_.size());
    densify_dirs_.assign(surfels_.size(), Vec3::Zero());
    iteration_ = 0;
    sample_order_.clear();
    sample_cursor_ = 0;
}

int Trainer::active_sh_degree() const {
    if (config_.sh_warmup_interval <= 0) return config_.sh_degree;
    return std::min(config_.sh_degree, iteration_ / config_.sh_warmup_interval);
}

double Trainer::center_lr() const {
    const double t =
        config_.iterations > 1
            ? std::min(1.0, static_cast<double>(iteration_) / (config_.iterations - 1))
            : 1.0;
    return config_.lr.center_init *
           std::pow(config_.lr.center_final / config_.lr.center_init, t);
}

int Trainer::next_sample_index() {
    if (sample_cursor_ >= sample_order_.size()) {
        sample_order_.resize(dataset_.train_samples.size());
        std::iota(sample_order_.begin(), sample_order_.end(), 0);
        std::shuffle(sample_order_.begin(), sample_order_.end(), rng_);
        sample_cursor_ = 0;
    }
    return sample_order_[sample_cursor_++];
}

RenderOutputs Trainer::render_sample(const Camera& camera, const PoseParams& pose,
                                     bool keep_blend) const {
    const JointTransforms jt = pose_to_joint_transforms(dataset_.skinned_template, pose);
    const SkinningContext skin = SkinningContext::build(surfels_, dataset_.weight_field, jt);
    RenderOptions opts;
    opts.sh_degree = active_sh_degree();
    opts.tile_size = config_.tile_size;
    opts.precision = config_.precision;
    opts.keep_blend = keep_blend;
    return render_tiled(skin.apply(surfels_), camera, opts);
}

void Trainer::adam_step(const ParamGradients& grads) {
    adam_.step += 1;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(adam_.step));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(adam_.step));
    const double lr_center = center_lr();

    auto update = [&](double& param, double g, double& m, double& v, double lr) {
        m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
        v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g * g;
        param -= lr * (m / bc1) / (std::sqrt(v / bc2) + kAdamEps);
    };

    for (size_t i = 0; i < surfels_.size(); ++i) {
        Surfel& s = surfels_[i];
        const SurfelGrad& g = grads.surfels[i];
        for (int k = 0; k < 3; ++k)
            update(s.center[k], g.center[k], adam_.m_center[i][k], adam_.v_center[i][k],
                   lr_center);
        for (int k = 0; k < 4; ++k)
            update(s.quat[k], g.quat[k], adam_.m_quat[i][k], adam_.v_quat[i][k],
                   config_.lr.rotation);
        for (int k = 0; k < 2; ++k)
            update(s.log_scale[k], g.log_scale[k], adam_.m_scale[i][k], adam_.v_scale[i][k],
                   config_.lr.scale);
        update(s.opacity_logit, g.opacity_logit, adam_.m_opacity[i], adam_.v_opacity[i],
               config_.lr.opacity);
        // gradients only cover the active warm-up degree; dormant bands stay put
        const size_t active_coeffs = std::min(s.sh_coeffs.size(), g.sh_coeffs.size());
        for (size_t c = 0; c < active_coeffs; ++c)
            for (int k = 0; k < 3; ++k)
                update(s.sh_coeffs[c][k], g.sh_coeffs[c][k], adam_.m_sh[i][c][k],
                       adam_.v_sh[i][c][k], config_.lr.sh);
    }
}

void Trainer::maybe_densify() {
    const DensifyConfig& dc = config_.densify;
    if (dc.interval <= 0 || iteration_ == 0) return;
    if (iteration_ > dc.stop_iteration) return;
    if (iteration_ % dc.interval != 0) return;

    std::vector<int32_t> parent_of;
#ifdef AVATAR_DENSIFY_DEBUG
    {
        std::vector<double> means;
        for (size_t i = 0; i < surfels_.size(); ++i) means.push_back(densify_stats_.mean(i));
        std::sort(means.begin(), means.end());
        fprintf(stderr, "densify@%d n=%zu grad p50=%.2e p80=%.2e p95=%.2e max=%.2e\n",
                iteration_, means.size(), means[means.size() / 2], means[means.size() * 8 / 10],
                means[means.size() * 95 / 100], means.back());
    }
#endif
    densify_and_prune(surfels_, densify_stats_, densify_dirs_, dc, iteration_,
                      dataset_.scene_extent(), rng_, &parent_of);
    adam_.remap(parent_of, sh_coeff_count(config_.sh_degree));
    densify_stats_.resize(surfels_.size());
    densify_dirs_.assign(surfels_.size(), Vec3::Zero());
}

LossBreakdown Trainer::step(const FrameSample& sample) {
    const JointTransforms jt = pose_to_joint_transforms(dataset_.skinned_template, sample.pose);
    const SkinningContext skin = SkinningContext::build(surfels_, dataset_.weight_field, jt);

    RenderOptions ropts;
    ropts.sh_degree = active_sh_degree();
    ropts.tile_size = config_.tile_size;
    ropts.precision = config_.precision;
    ropts.keep_blend = true;
    const RenderOutputs out = render_tiled(skin.apply(surfels_), sample.camera, ropts);

    const PerceptualProvider* perceptual = config_.perceptual ? &perceptual_provider_ : nullptr;
    const LossBreakdown breakdown =
        total_loss(out.color, out.alpha, out.normal, sample.rgb, sample.mask, sample.normal_map,
                   surfels_, config_.loss, perceptual);

    auto require_finite = [&](double v, const char* term) {
        if (!std::isfinite(v))
            throw std::runtime_error("non-finite " + std::string(term) + " loss at iteration " +
                                     std::to_string(iteration_));
    };
    require_finite(breakdown.l1, "l1");
    require_finite(breakdown.dssim, "dssim");
    require_finite(breakdown.lpips, "perceptual");
    require_finite(breakdown.normal, "normal");
    require_finite(breakdown.area, "area");
    require_finite(breakdown.opacity, "opacity");
    require_finite(breakdown.mask, "mask");

    BackwardOptions bopts;
    bopts.sh_degree = active_sh_degree();
    const ParamGradients grads = backward(surfels_, skin, sample.camera, out, sample.rgb,
                                          sample.mask, sample.normal_map, config_.loss,
                                          perceptual, bopts);
    if (!grads.finite())
        throw std::runtime_error("non-finite parameter gradient at iteration " +
                                 std::to_string(iteration_));

    for (size_t i = 0; i < surfels_.size(); ++i) {
        if (grads.surfels[i].screen_grad > 0)
            densify_stats_.accumulate(i, grads.surfels[i].screen_grad);
        densify_dirs_[i] += grads.surfels[i].center;
    }

    adam_step(grads);
    iteration_ += 1;
    maybe_densify();
    return breakdown;
}

void Trainer::train(const std::string& out_dir) {
    fs::create_directories(out_dir);
    log_path_ = (fs::path(out_dir) / "train_log.csv").string();
    std::ofstream log(log_path_, std::ios::app);
    if (!log) throw std::runtime_error("cannot open log: " + log_path_);
    if (fs::file_size(log_path_) == 0)
        log << "type,iteration,total,l1,dssim,perceptual,normal,area,opacity,mask,surfels\n";

    save_train_config(config_, (fs::path(out_dir) / "config.json").string());

    while (iteration_ < config_.iterations) {
        const size_t count_before = surfels_.size();
        const FrameSample& sample = dataset_.train_samples[next_sample_index()];
        const LossBreakdown b = step(sample);

        if (config_.log_interval > 0 &&
            (iteration_ % config_.log_interval == 0 || iteration_ == config_.iterations)) {
            log << "loss," << iteration_ << ',' << b.total << ',' << b.l1 << ',' << b.dssim
                << ',' << b.lpips << ',' << b.normal << ',' << b.area << ',' << b.opacity << ','
                << b.mask << ',' << surfels_.size() << '\n';
        }
        if (surfels_.size() != count_before) {
            log << "densify," << iteration_ << ",,,,,,,,," << surfels_.size() << '\n';
        }
        if (config_.checkpoint_interval > 0 && iteration_ % config_.checkpoint_interval == 0) {
            save_checkpoint(
                (fs::path(out_dir) / ("checkpoint_" + std::to_string(iteration_) + ".avck"))
                    .string());
        }
    }
    log.flush();
    save_checkpoint((fs::path(out_dir) / "checkpoint_final.avck").string());
}

EvalReport Trainer::evaluate(const std::vector<FrameSample>& samples) const {
    EvalReport report;
    double psnr_sum = 0, ssim_sum = 0;
    for (const FrameSample& s : samples) {
        const RenderOutputs out = render_sample(s.camera, s.pose);
        EvalRow row;
        row.view = s.view;
        row.frame = s.frame;
        row.psnr = psnr_masked(out.color, s.rgb, s.mask);
        row.ssim = ssim_masked(out.color, s.rgb, s.mask);
        psnr_sum += row.psnr;
        ssim_sum += row.ssim;
        report.rows.push_back(row);
    }
    if (!report.rows.empty()) {
        report.mean_psnr = psnr_sum / report.rows.size();
        report.mean_ssim = ssim_sum / report.rows.size();
    }
    return report;
}

namespace {
constexpr char kCheckpointMagic[8] = {'A', 'V', 'C', 'K', '0', '0', '0', '1'};
}

void Trainer::save_checkpoint(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_pod(os, config_hash(config_));
    write_pod(os, static_cast<int64_t>(iteration_));
    write_pod(os, adam_.step);
    const int64_t n = static_cast<int64_t>(surfels_.size());
    const int32_t sh_n = sh_coeff_count(config_.sh_degree);
    write_pod(os, n);
    write_pod(os, sh_n);
    for (const Surfel& s : surfels_) {
        write_vec(os, s.center.data(), 3);
        write_vec(os, s.quat.data(), 4);
        write_vec(os, s.log_scale.data(), 2);
        write_pod(os, s.opacity_logit);
        for (const Vec3& c : s.sh_coeffs) write_vec(os, c.data(), 3);
    }
    for (int64_t i = 0; i < n; ++i) {
        write_vec(os, adam_.m_center[i].data(), 3);
        write_vec(os, adam_.v_center[i].data(), 3);
        write_vec(os, adam_.m_quat[i].data(), 4);
        write_vec(os, adam_.v_quat[i].data(), 4);
        write_vec(os, adam_.m_scale[i].data(), 2);
        write_vec(os, adam_.v_scale[i].data(), 2);
        write_pod(os, adam_.m_opacity[i]);
        write_pod(os, adam_.v_opacity[i]);
        for (int32_t c = 0; c < sh_n; ++c) {
            write_vec(os, adam_.m_sh[i][c].data(), 3);
            write_vec(os, adam_.v_sh[i][c].data(), 3);
        }
    }
    std::ostringstream rng_ss;
    rng_ss << rng_;
    const std::string rng_state = rng_ss.str();
    write_pod(os, static_cast<int64_t>(rng_state.size()));
    os.write(rng_state.data(), static_cast<std::streamsize>(rng_state.size()));
    if (!os) throw std::runtime_error("write failed: " + path);
}

void Trainer::load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw std::runtime_error("bad checkpoint magic in: " + path);
    const uint64_t hash = read_pod<uint64_t>(is);
    if (hash != config_hash(config_))
        throw std::runtime_error("checkpoint " + path +
                                 " was written with a different configuration");
    iteration_ = static_cast<int>(read_pod<int64_t>(is));
    adam_.step = read_pod<int64_t>(is);
    const int64_t n = read_pod<int64_t>(is);
    const int32_t sh_n = read_pod<int32_t>(is);
    if (n <= 0 || sh_n != sh_coeff_count(config_.sh_degree))
        throw std::runtime_error("checkpoint " + path + ": inconsistent surfel layout");
    surfels_.assign(n, Surfel{});
    for (Surfel& s : surfels_) {
        read_vec(is, s.center.data(), 3);
        read_vec(is, s.quat.data(), 4);
        read_vec(is, s.log_scale.data(), 2);
        s.opacity_logit = read_pod<double>(is);
        s.sh_coeffs.assign(sh_n, Vec3::Zero());
        for (Vec3& c : s.sh_coeffs) read_vec(is, c.data(), 3);
    }
    adam_.resize(n, sh_n);
    for (int64_t i = 0; i < n; ++i) {
        read_vec(is, adam_.m_center[i].data(), 3);
        read_vec(is, adam_.v_center[i].data(), 3);
        read_vec(is, adam_.m_quat[i].data(), 4);
        read_vec(is, adam_.v_quat[i].data(), 4);
        read_vec(is, adam_.m_scale[i].data(), 2);
        read_vec(is, adam_.v_scale[i].data(), 2);
        adam_.m_opacity[i] = read_pod<double>(is);
        adam_.v_opacity[i] = read_pod<double>(is);
        for (int32_t c = 0; c < sh_n; ++c) {
            read_vec(is, adam_.m_sh[i][c].data(), 3);
            read_vec(is, adam_.v_sh[i][c].data(), 3);
        }
    }
    const int64_t rng_len = read_pod<int64_t>(is);
    std::string rng_state(static_cast<size_t>(rng_len), '\0');
    is.read(rng_state.data(), rng_len);
    if (!is) throw std::runtime_error("truncated checkpoint: " + path);
    std::istringstream rng_ss(rng_state);
    rng_ss >> rng_;
    densify_stats_.resize(surfels_.size());
    densify_dirs_.assign(surfels_.size(), Vec3::Zero());
    sample_order_.clear();
    sample_cursor_ = 0;
}

void write_eval_csv(const EvalReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os << "view,frame,psnr,ssim\n";
    for (const EvalRow& r : report.rows)
        os << r.view << ',' << r.frame << ',' << r.psnr << ',' << r.ssim << '\n';
    os << "mean,," << report.mean_psnr << ',' << report.mean_ssim << '\n';
    if (!os) throw std::runtime_error("write failed: " + path);
}

std::string format_eval_table(const EvalReport& report) {
    std::ostringstream ss;
    ss << "view frame    psnr    ssim\n";
    char buf[80];
    for (const EvalRow& r : report.rows) {
        std::snprintf(buf, sizeof(buf), "%4d %5d %7.3f %7.4f\n", r.view, r.frame, r.psnr,
                      r.ssim);
        ss << buf;
    }
    std::snprintf(buf, sizeof(buf), "mean       %7.3f %7.4f\n", report.mean_psnr,
                  report.mean_ssim);
    ss << buf;
    return ss.str();
}

}  // namespace avatar

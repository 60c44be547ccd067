#pragma once

#include <random>
#include <string>
#include <vector>

#include "avatar/backward.hpp"
#include "avatar/dataset.hpp"
#include "avatar/density.hpp"
#include "avatar/losses.hpp"
#include "avatar/render.hpp"

namespace avatar {

struct LearningRates {
    double center_init = 1.6e-4;
    double center_final = 1.6e-6;  // exponential decay over `iterations`
    double sh = 2.5e-3;
    double opacity = 5e-2;
    double scale = 5e-3;
    double rotation = 1e-3;
};

struct TrainConfig {
    int iterations = 30000;
    uint64_t seed = 0;
    int sh_degree = 3;
    int sh_warmup_interval = 1000;  // raise active degree by one every N iters
    int checkpoint_interval = 0;    // 0 = final checkpoint only
    int log_interval = 10;
    double init_opacity = 0.1;
    double init_scale_factor = 0.5;  // times the mean incident edge length
    bool perceptual = false;         // enable the built-in perceptual proxy
    Precision precision = Precision::F64;
    int tile_size = 16;
    LearningRates lr;
    LossWeights loss;
    DensifyConfig densify;
    WeightFieldParams field;
};

TrainConfig load_train_config(const std::string& path);
void save_train_config(const TrainConfig& config, const std::string& path);
uint64_t config_hash(const TrainConfig& config);

// Per-group Adam moments, one row per surfel, remapped across densification.
struct AdamState {
    std::vector<Vec3> m_center, v_center;
    std::vector<Vec4> m_quat, v_quat;
    std::vector<Vec2> m_scale, v_scale;
    std::vector<double> m_opacity, v_opacity;
    std::vector<std::vector<Vec3>> m_sh, v_sh;
    int64_t step = 0;

    void resize(size_t n, int sh_coeffs);
    void remap(const std::vector<int32_t>& parent_of, int sh_coeffs);
};

struct EvalRow {
    int view = 0;
    int frame = 0;
    double psnr = 0;
    double ssim = 0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    double mean_psnr = 0;
    double mean_ssim = 0;
};

class Trainer {
public:
    Trainer(Dataset dataset, TrainConfig config);

    // Runs until config.iterations, appending to the CSV log and writing
    // checkpoints under out_dir. Throws std::runtime_error naming the
    // iteration and loss term on non-finite values.
    void train(const std::string& out_dir);

    // One optimization step on a specific sample; returns the breakdown.
    LossBreakdown step(const FrameSample& sample);

    EvalReport evaluate(const std::vector<FrameSample>& samples) const;

    RenderOutputs render_sample(const Camera& camera, const PoseParams& pose,
                                bool keep_blend = false) const;

    void save_checkpoint(const std::string& path) const;
    void load_checkpoint(const std::string& path);

    const std::vector<Surfel>& surfels() const { return surfels_; }
    std::vector<Surfel>& surfels() { return surfels_; }
    const Dataset& dataset() const { return dataset_; }
    const TrainConfig& config() const { return config_; }
    int iteration() const { return iteration_; }

    int active_sh_degree() const;
    double center_lr() const;

private:
    void init_surfels();
    void adam_step(const ParamGradients& grads);
    void maybe_densify();
    int next_sample_index();

    Dataset dataset_;
    TrainConfig config_;
    std::vector<Surfel> surfels_;
    AdamState adam_;
    DensifyStats densify_stats_;
    std::vector<Vec3> densify_dirs_;  // accumulated canonical center gradients
    std::mt19937_64 rng_;
    std::vector<int> sample_order_;
    size_t sample_cursor_ = 0;
    int iteration_ = 0;
    GradientMagnitudeProvider perceptual_provider_;
    std::string log_path_;
};

void write_eval_csv(const EvalReport& report, const std::string& path);
std::string format_eval_table(const EvalReport& report);

}  // namespace avatar

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "avatar/dataset.hpp"
#include "avatar/image_io.hpp"
#include "avatar/rig.hpp"
#include "avatar/trainer.hpp"

namespace fs = std::filesystem;
using namespace avatar;

namespace {

Precision parse_precision(const std::string& s) {
    if (s == "f32") return Precision::F32;
    if (s == "f64") return Precision::F64;
    throw CLI::ValidationError("--precision must be f32 or f64");
}

int run_gen_rig(const std::string& out_dir, uint64_t seed) {
    RigConfig rc;
    rc.seed = seed;
    generate_rig_dataset(out_dir, rc);
    std::cout << "wrote dataset to " << out_dir << "\n";
    return 0;
}

int run_train(const std::string& data_dir, const std::string& out_dir,
              const std::string& config_path, uint64_t seed, bool seed_set, int iterations,
              const std::string& precision, bool precision_set) {
    TrainConfig config;
    if (!config_path.empty()) config = load_train_config(config_path);
    if (seed_set) config.seed = seed;
    if (iterations > 0) config.iterations = iterations;
    if (precision_set) config.precision = parse_precision(precision);

    Dataset dataset = load_dataset(data_dir, config.field);
    Trainer trainer(std::move(dataset), config);
    trainer.train(out_dir);

    const EvalReport report = trainer.evaluate(trainer.dataset().test_samples);
    write_eval_csv(report, (fs::path(out_dir) / "eval_heldout.csv").string());
    std::cout << format_eval_table(report);
    return 0;
}

int run_eval(const std::string& data_dir, const std::string& checkpoint,
             const std::string& out_csv, const std::string& config_path, bool held_out_only) {
    TrainConfig config;
    if (!config_path.empty()) config = load_train_config(config_path);
    Dataset dataset = load_dataset(data_dir, config.field);
    Trainer trainer(std::move(dataset), config);
    trainer.load_checkpoint(checkpoint);

    std::vector<FrameSample> samples = trainer.dataset().test_samples;
    if (!held_out_only)
        samples.insert(samples.end(), trainer.dataset().train_samples.begin(),
                       trainer.dataset().train_samples.end());
    const EvalReport report = trainer.evaluate(samples);
    if (!out_csv.empty()) write_eval_csv(report, out_csv);
    std::cout << format_eval_table(report);
    return 0;
}

int run_render(const std::string& data_dir, const std::string& checkpoint,
               const std::string& pose_path, const std::string& camera_path,
               const std::string& out_dir, const std::string& config_path) {
    TrainConfig config;
    if (!config_path.empty()) config = load_train_config(config_path);
    Dataset dataset = load_dataset(data_dir, config.field);
    Trainer trainer(std::move(dataset), config);
    trainer.load_checkpoint(checkpoint);

    const Camera camera = camera_path.empty()
                              ? trainer.dataset().train_samples.front().camera
                              : load_camera_json(camera_path);
    std::vector<PoseParams> poses;
    if (!pose_path.empty()) {
        poses.push_back(load_pose_json(pose_path));
    } else {
        for (const FrameSample& s : trainer.dataset().train_samples)
            if (s.view == trainer.dataset().train_views.front()) poses.push_back(s.pose);
    }

    fs::create_directories(out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    for (size_t i = 0; i < poses.size(); ++i) {
        const RenderOutputs out = trainer.render_sample(camera, poses[i]);
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%03zu.png", i);
        save_png(out.color, (fs::path(out_dir) / name).string());
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("rendered %zu frame(s) in %.2fs (%.2f fps) to %s\n", poses.size(), seconds,
                poses.size() / std::max(1e-9, seconds), out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D Gaussian surfel avatar engine"};
    app.require_subcommand(1);
    app.fallthrough(true);  // global flags may appear after the subcommand

    uint64_t seed = 0;
    bool deterministic = false;  // accepted for symmetry; runs are always seeded
    std::string precision = "f64";
    app.add_option("--seed", seed, "RNG seed");
    app.add_flag("--deterministic", deterministic, "force the seeded deterministic path");
    app.add_option("--precision", precision, "forward render precision: f32 or f64");

    std::string data_dir, out_dir = "out", config_path, checkpoint, pose_path, camera_path,
                out_csv;
    int iterations = 0;
    bool held_out_only = true;

    CLI::App* gen = app.add_subcommand("gen-rig", "generate the synthetic two-bone dataset");
    gen->add_option("--out", out_dir, "output dataset directory")->required();

    CLI::App* train = app.add_subcommand("train", "optimize an avatar on a dataset");
    train->add_option("--data", data_dir, "dataset directory")->required();
    train->add_option("--out", out_dir, "output directory");
    train->add_option("--config", config_path, "training config JSON");
    train->add_option("--iterations", iterations, "override the iteration count");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    eval->add_option("--data", data_dir, "dataset directory")->required();
    eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    eval->add_option("--config", config_path, "training config JSON (must match checkpoint)");
    eval->add_option("--csv", out_csv, "write per-view metrics to this CSV");
    eval->add_flag("!--all-views", held_out_only, "include training views");

    CLI::App* render = app.add_subcommand("render", "render poses from a checkpoint");
    render->add_option("--data", data_dir, "dataset directory")->required();
    render->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    render->add_option("--config", config_path, "training config JSON (must match checkpoint)");
    render->add_option("--pose", pose_path, "pose JSON (defaults to the training sequence)");
    render->add_option("--camera", camera_path, "camera JSON (defaults to the first view)");
    render->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return run_gen_rig(out_dir, seed);
        if (train->parsed())
            return run_train(data_dir, out_dir, config_path, seed, app.count("--seed") > 0,
                             iterations, precision, app.count("--precision") > 0);
        if (eval->parsed())
            return run_eval(data_dir, checkpoint, out_csv, config_path, held_out_only);
        if (render->parsed())
            return run_render(data_dir, checkpoint, pose_path, camera_path, out_dir,
                              config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

// Command-line toolchain over the tofgeo library. Every command is
// deterministic given its flags and seeds, so re-running a pipeline
// overwrites identical bytes.
//
// Exit codes: 0 success, 1 contract violation, 2 I/O error, 3 numerical failure.

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "tofgeo/tofgeo.hpp"

namespace {

using namespace tofgeo;

void report_artifact(const std::string& path) { std::cout << "wrote " << path << "\n"; }

struct GenSceneArgs {
  std::string spec_path, intrinsics_path, out_prefix;
};

int cmd_gen_scene(const GenSceneArgs& a) {
  const SceneSpec spec = read_scene_spec(a.spec_path);
  const CameraIntrinsics k = read_intrinsics(a.intrinsics_path);
  auto [depth, normals] = render_depth(spec, k);

  PointCloud cloud = backproject(depth, k);
  cloud.normals.reserve(cloud.points.size());
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      if (depth.valid(u, v)) cloud.normals.push_back(normals.at(u, v));
    }
  }

  write_tfdr(a.out_prefix + ".depth.tfdr", depth);
  report_artifact(a.out_prefix + ".depth.tfdr");
  write_tfnr(a.out_prefix + ".normal.tfnr", normals);
  report_artifact(a.out_prefix + ".normal.tfnr");
  write_ply(a.out_prefix + ".ply", cloud);
  report_artifact(a.out_prefix + ".ply");
  return 0;
}

struct SimulateArgs {
  std::string gt_depth_path, out_prefix;
  double freq1 = 20e6, freq2 = 100e6;
  double noise_sigma = 0.0, amplitude = 1.0, offset = 0.0;
  std::uint64_t seed = 0;
  int frames = 1;
};

int cmd_simulate(const SimulateArgs& a) {
  require(a.frames >= 1, "simulate: --frames must be >= 1");
  const DepthMap gt = read_tfdr(a.gt_depth_path);
  validate_depth_map(gt);

  SimulationConfig cfg;
  cfg.freqs_hz = {a.freq1, a.freq2};
  cfg.amplitude = a.amplitude;
  cfg.offset = a.offset;
  cfg.shot_noise_sigma = a.noise_sigma;

  std::vector<DepthMap> decoded;
  decoded.reserve(a.frames);
  for (int f = 0; f < a.frames; ++f) {
    cfg.rng_seed = a.seed + static_cast<std::uint64_t>(f);
    const RawToFFrame frame = simulate_raw(gt, cfg);
    const DecodeResult low = decode_phase(frame, 0);
    const DecodeResult high = decode_phase(frame, 1);
    decoded.push_back(unwrap_dual_frequency(low.phase, high.phase, frame.freqs_hz, {},
                                            &low.confidence, &high.confidence));
    if (f == 0) {
      write_tfrw(a.out_prefix + ".raw.tfrw", frame);
      report_artifact(a.out_prefix + ".raw.tfrw");
      write_tfdr(a.out_prefix + ".conf.tfdr", high.confidence);
      report_artifact(a.out_prefix + ".conf.tfdr");
    }
  }
  write_tfdr(a.out_prefix + ".depth.tfdr", average_frames(decoded));
  report_artifact(a.out_prefix + ".depth.tfdr");
  return 0;
}

struct AlignArgs {
  std::string source_path, target_path, out_path;
  std::vector<std::string> pairs;
  ICPConfig icp_cfg{};
};

int cmd_align(const AlignArgs& a) {
  std::vector<std::pair<std::string, std::string>> pairs;
  if (!a.source_path.empty() && !a.target_path.empty()) {
    pairs.emplace_back(a.source_path, a.target_path);
  }
  for (const std::string& spec : a.pairs) {
    const auto colon = spec.find(':');
    require(colon != std::string::npos, "align: --pairs expects source.ply:target.ply");
    pairs.emplace_back(spec.substr(0, colon), spec.substr(colon + 1));
  }
  require(!pairs.empty(), "align: no cloud pairs given");

  std::vector<ICPResult> results;
  results.reserve(pairs.size());
  for (const auto& [src, tgt] : pairs) {
    const PointCloud source = read_ply(src);
    const PointCloud target = read_ply(tgt);
    ICPResult r = icp(source, target, RigidTransform::identity(), a.icp_cfg);
    std::cout << src << " -> " << tgt << ": rms " << r.rms_residual_mm << " mm, "
              << r.iterations << " iterations" << (r.converged ? "" : " (not converged)")
              << "\n";
    results.push_back(std::move(r));
  }

  TransformFile out;
  out.transform = average_transforms(results);
  out.scenes = static_cast<int>(results.size());
  double rms_sum = 0.0;
  for (const auto& r : results) rms_sum += r.rms_residual_mm;
  out.rms_mm = rms_sum / static_cast<double>(results.size());
  write_transform(a.out_path, out);
  report_artifact(a.out_path);
  return 0;
}

struct LossFlags {
  double w_l1 = 1.0, w_chamfer = 1.0;
  double jitter_mm = 10.0;
  bool no_jitter = false;
  bool no_normalize_chamfer = false;
  double delta = 20.0, epsilon = 0.001;
  std::string error_map_path;
  double uniform_error = -1.0;

  CombinedLossConfig to_config() const {
    CombinedLossConfig cfg;
    cfg.w_l1 = w_l1;
    cfg.w_chamfer = w_chamfer;
    cfg.jitter = !no_jitter;
    cfg.jitter_cfg.offset_mm = jitter_mm;
    cfg.normalize_chamfer = !no_normalize_chamfer;
    cfg.l1.delta_mm = delta;
    cfg.l1.epsilon = epsilon;
    return cfg;
  }

  /// Error map input: explicit file, uniform value, or the plane-fit
  /// heuristic estimated from the given depth.
  ErrorMap resolve_error_map(const DepthMap& depth, const CameraIntrinsics& k) const {
    if (!error_map_path.empty()) return read_tfdr(error_map_path);
    if (uniform_error >= 0.0) {
      ErrorMap err(depth.width(), depth.height());
      for (std::ptrdiff_t i = 0; i < depth.size(); ++i) {
        if (depth.valid(i)) err.set(i, uniform_error);
      }
      return err;
    }
    return estimate_error_map(depth, k);
  }

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--w-l1", w_l1, "weight of the reweighted smoothed l1 term");
    cmd->add_option("--w-chamfer", w_chamfer, "weight of the robust Chamfer term");
    cmd->add_option("--jitter-mm", jitter_mm, "jitter offset magnitude, mm");
    cmd->add_flag("--no-jitter", no_jitter, "plain Chamfer, no jitter candidates");
    cmd->add_flag("--no-normalize-chamfer", no_normalize_chamfer,
                  "do not scale the Chamfer term by 1/(|P|+|Q|)");
    cmd->add_option("--delta", delta, "smoothed l1 threshold, mm");
    cmd->add_option("--epsilon", epsilon, "error-map stabilizer");
    cmd->add_option("--error-map", error_map_path, "expected-error raster (TFDR)");
    cmd->add_option("--uniform-error", uniform_error,
                    "constant expected error, mm (instead of the heuristic)");
  }
};

struct OptimizeArgs {
  std::string init_path, gt_ply_path, gt_depth_path, intrinsics_path, out_prefix;
  LossFlags loss;
  int steps = 200;
  double step_size = 0.0, momentum = 0.9;
  int log_every = 10;
};

int cmd_optimize(const OptimizeArgs& a) {
  const DepthMap init = read_tfdr(a.init_path);
  const PointCloud gt_cloud = read_ply(a.gt_ply_path);
  const DepthMap gt_depth = read_tfdr(a.gt_depth_path);
  const CameraIntrinsics k = read_intrinsics(a.intrinsics_path);
  const ErrorMap err = a.loss.resolve_error_map(init, k);

  OptimizeConfig cfg;
  cfg.steps = a.steps;
  cfg.step_size = a.step_size;
  cfg.momentum = a.momentum;
  cfg.log_every = a.log_every;
  cfg.loss = a.loss.to_config();

  OptimizeResult result = optimize_depth(init, gt_cloud, gt_depth, err, k, cfg);
  for (const auto& e : result.trace) {
    if (a.log_every > 0 && (e.step % a.log_every == 0 || e.step == 0)) {
      std::cout << "step " << e.step << ": total " << e.total << " (l1 " << e.l1_term
                << ", chamfer " << e.chamfer_term << ", jitter "
                << jitter_label(e.selected_jitter) << ")\n";
    }
  }
  write_tfdr(a.out_prefix + ".refined.tfdr", result.depth);
  report_artifact(a.out_prefix + ".refined.tfdr");
  write_trace_csv(a.out_prefix + ".trace.csv", result.trace);
  report_artifact(a.out_prefix + ".trace.csv");
  return 0;
}

struct RefineArgs {
  std::string depth_path, normals_path, intrinsics_path, out_prefix;
  bool estimate_normals = false;
  RefineConfig cfg{};
};

int cmd_refine(const RefineArgs& a) {
  const DepthMap depth = read_tfdr(a.depth_path);
  const CameraIntrinsics k = read_intrinsics(a.intrinsics_path);
  a.cfg.validate();
  require(a.estimate_normals != !a.normals_path.empty(),
          "refine: give a normals raster or --estimate-normals (not both)");
  const NormalMap normals = a.estimate_normals
                                ? normals_from_depth(depth, k, a.cfg.window)
                                : read_tfnr(a.normals_path);
  require(normals.width() == depth.width() && normals.height() == depth.height(),
          "refine: normals raster size must match depth");

  auto [refined_depth, refined_normals] = joint_refine(depth, normals, k, a.cfg);
  write_tfdr(a.out_prefix + ".depth.tfdr", refined_depth);
  report_artifact(a.out_prefix + ".depth.tfdr");
  write_tfnr(a.out_prefix + ".normal.tfnr", refined_normals);
  report_artifact(a.out_prefix + ".normal.tfnr");
  return 0;
}

struct EvalArgs {
  std::string pred_path, intrinsics_path, gt_ply_path, gt_depth_path, out_path;
  int window = 5;
};

int cmd_eval(const EvalArgs& a) {
  const DepthMap pred = read_tfdr(a.pred_path);
  const CameraIntrinsics k = read_intrinsics(a.intrinsics_path);
  DepthMetrics dm;
  NormalMetrics nm;
  if (!a.gt_ply_path.empty()) {
    const PointCloud gt_cloud = read_ply(a.gt_ply_path);
    std::tie(dm, nm) = evaluate_pair(pred, gt_cloud, k, a.window);
  } else {
    const DepthMap gt = read_tfdr(a.gt_depth_path);
    dm = depth_metrics(pred, gt);
    nm = normal_metrics(normals_from_depth(pred, k, a.window),
                        normals_from_depth(gt, k, a.window));
  }
  std::cout << "abs_rel " << dm.abs_rel << "\nsq_rel_mm " << dm.sq_rel_mm << "\nrmse_mm "
            << dm.rmse_mm << "\nmae_mm " << dm.mae_mm << "\nnormal_mae_rad " << nm.mae_rad
            << "\nnormal_pct_20deg " << nm.pct_within_20deg << "\nn_valid " << dm.n_valid
            << "\n";
  write_metrics_csv(a.out_path, dm, &nm);
  report_artifact(a.out_path);
  return 0;
}

struct EvalLossArgs {
  std::string intrinsics_path, pred_depth_path, gt_depth_path, gt_ply_path;
  std::string pred_normals_path, gt_normals_path, out_path;
  LossFlags loss;
};

int cmd_eval_loss(const EvalLossArgs& a) {
  std::ofstream out(a.out_path);
  if (!out) throw IoError("cannot open for writing: " + a.out_path);
  out << "loss,value,selected_jitter\n";

  const bool depth_losses = !a.pred_depth_path.empty();
  const bool normal_losses = !a.pred_normals_path.empty();
  require(depth_losses || normal_losses,
          "eval-loss: need --pred-depth or --pred-normals inputs");
  if (depth_losses) {
    require(!a.gt_depth_path.empty() && !a.gt_ply_path.empty(),
            "eval-loss: depth losses need --gt-depth and --gt-ply");
    const DepthMap pred = read_tfdr(a.pred_depth_path);
    const DepthMap gt_depth = read_tfdr(a.gt_depth_path);
    const PointCloud gt_cloud = read_ply(a.gt_ply_path);
    const CameraIntrinsics k = read_intrinsics(a.intrinsics_path);
    const ErrorMap err = a.loss.resolve_error_map(pred, k);
    const CombinedLossConfig cfg = a.loss.to_config();

    const LossReport combined =
        combined_depth_loss(pred, gt_cloud, gt_depth, err, k, cfg, false);
    out << "reweighted_l1," << combined.l1_term << ",\n";
    out << "chamfer," << combined.chamfer_term << ","
        << jitter_label(combined.selected_jitter_index) << "\n";
    out << "combined," << combined.value << ","
        << jitter_label(combined.selected_jitter_index) << "\n";
    std::cout << "combined " << combined.value << " (l1 " << combined.l1_term
              << ", chamfer " << combined.chamfer_term << ", jitter "
              << jitter_label(combined.selected_jitter_index) << ")\n";
  }
  if (normal_losses) {
    require(!a.gt_normals_path.empty(), "eval-loss: cosine loss needs --gt-normals");
    const NormalMap pred = read_tfnr(a.pred_normals_path);
    const NormalMap gt = read_tfnr(a.gt_normals_path);
    const LossReport cos = cosine_loss(pred, gt, false);
    out << "cosine," << cos.value << ",\n";
    std::cout << "cosine " << cos.value << "\n";
  }
  if (!out) throw IoError("write failed: " + a.out_path);
  report_artifact(a.out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tofgeo: ToF depth/normal estimation toolchain"};
  app.require_subcommand(1);

  int threads = 0;
  std::uint64_t seed = 0;
  app.add_option("--threads", threads, "worker threads for internal loops (0 = auto)");
  app.add_option("--seed", seed, "global random seed");

  GenSceneArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-scene", "render a synthetic scene to rasters + PLY");
  gen_cmd->add_option("spec", gen.spec_path, "scene spec text file")->required();
  gen_cmd->add_option("intrinsics", gen.intrinsics_path, "intrinsics text file")->required();
  gen_cmd->add_option("out_prefix", gen.out_prefix, "output path prefix")->required();

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "simulate + decode dual-frequency raw ToF");
  sim_cmd->add_option("gt_depth", sim.gt_depth_path, "ground-truth depth (TFDR)")->required();
  sim_cmd->add_option("-o,--out", sim.out_prefix, "output path prefix")->required();
  sim_cmd->add_option("--freq1", sim.freq1, "first modulation frequency, Hz");
  sim_cmd->add_option("--freq2", sim.freq2, "second modulation frequency, Hz");
  sim_cmd->add_option("--noise-sigma", sim.noise_sigma, "per-channel shot noise std");
  sim_cmd->add_option("--frames", sim.frames, "frames to simulate and average");
  sim_cmd->add_option("--amplitude", sim.amplitude, "modulation amplitude");
  sim_cmd->add_option("--offset", sim.offset, "ambient offset");

  AlignArgs align_args;
  auto* align_cmd = app.add_subcommand("align", "averaged-ICP rig calibration");
  align_cmd->add_option("source", align_args.source_path, "source cloud (PLY)");
  align_cmd->add_option("target", align_args.target_path, "target cloud (PLY)");
  align_cmd->add_option("--pairs", align_args.pairs,
                        "additional source.ply:target.ply pairs");
  align_cmd->add_option("-o,--out", align_args.out_path, "output transform file")->required();
  align_cmd->add_option("--max-iter", align_args.icp_cfg.max_iterations, "ICP iteration cap");
  align_cmd->add_option("--gate", align_args.icp_cfg.max_pair_distance_mm,
                        "correspondence distance gate, mm");
  align_cmd->add_option("--trim", align_args.icp_cfg.trim_fraction,
                        "worst-pair trim fraction");

  OptimizeArgs opt;
  auto* opt_cmd = app.add_subcommand("optimize", "gradient-descent depth refinement");
  opt_cmd->add_option("init_depth", opt.init_path, "initial depth (TFDR)")->required();
  opt_cmd->add_option("gt_ply", opt.gt_ply_path, "ground-truth cloud (PLY)")->required();
  opt_cmd->add_option("gt_depth", opt.gt_depth_path, "ground-truth depth (TFDR)")->required();
  opt_cmd->add_option("intrinsics", opt.intrinsics_path, "intrinsics text file")->required();
  opt_cmd->add_option("-o,--out", opt.out_prefix, "output path prefix")->required();
  opt_cmd->add_option("--steps", opt.steps, "gradient steps");
  opt_cmd->add_option("--step-size", opt.step_size, "mm per unit gradient (0 = auto)");
  opt_cmd->add_option("--momentum", opt.momentum, "momentum coefficient");
  opt_cmd->add_option("--log-every", opt.log_every, "progress print cadence");
  opt.loss.add_flags(opt_cmd);

  RefineArgs ref;
  auto* ref_cmd = app.add_subcommand("refine", "joint depth/normal refinement");
  ref_cmd->add_option("depth", ref.depth_path, "depth raster (TFDR)")->required();
  ref_cmd->add_option("intrinsics", ref.intrinsics_path, "intrinsics text file")->required();
  ref_cmd->add_option("-o,--out", ref.out_prefix, "output path prefix")->required();
  ref_cmd->add_option("--normals", ref.normals_path, "initial normal raster (TFNR)");
  ref_cmd->add_flag("--estimate-normals", ref.estimate_normals,
                    "derive initial normals from the depth raster");
  ref_cmd->add_option("--iterations", ref.cfg.iterations, "refinement iterations");
  ref_cmd->add_option("--window", ref.cfg.window, "neighborhood window, pixels");
  ref_cmd->add_option("--blend", ref.cfg.blend, "update mixing factor in (0,1]");
  ref_cmd->add_option("--gamma", ref.cfg.normal_affinity_gamma,
                      "normal affinity weighting exponent");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "depth + normal metrics");
  eval_cmd->add_option("pred_depth", ev.pred_path, "predicted depth (TFDR)")->required();
  eval_cmd->add_option("intrinsics", ev.intrinsics_path, "intrinsics text file")->required();
  auto* gt_ply_opt = eval_cmd->add_option("--gt-ply", ev.gt_ply_path, "ground-truth cloud");
  eval_cmd->add_option("--gt-depth", ev.gt_depth_path, "ground-truth depth raster")
      ->excludes(gt_ply_opt);
  eval_cmd->add_option("-o,--out", ev.out_path, "metrics CSV path")->required();
  eval_cmd->add_option("--window", ev.window, "normal plane-fit window");

  EvalLossArgs el;
  auto* loss_cmd = app.add_subcommand("eval-loss", "evaluate the training losses");
  loss_cmd->add_option("intrinsics", el.intrinsics_path, "intrinsics text file")->required();
  loss_cmd->add_option("--pred-depth", el.pred_depth_path, "predicted depth (TFDR)");
  loss_cmd->add_option("--gt-depth", el.gt_depth_path, "ground-truth depth (TFDR)");
  loss_cmd->add_option("--gt-ply", el.gt_ply_path, "ground-truth cloud (PLY)");
  loss_cmd->add_option("--pred-normals", el.pred_normals_path, "predicted normals (TFNR)");
  loss_cmd->add_option("--gt-normals", el.gt_normals_path, "ground-truth normals (TFNR)");
  loss_cmd->add_option("-o,--out", el.out_path, "loss report CSV")->required();
  el.loss.add_flags(loss_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  set_thread_count(threads);
  sim.seed = seed;

  try {
    if (gen_cmd->parsed()) return cmd_gen_scene(gen);
    if (sim_cmd->parsed()) return cmd_simulate(sim);
    if (align_cmd->parsed()) return cmd_align(align_args);
    if (opt_cmd->parsed()) return cmd_optimize(opt);
    if (ref_cmd->parsed()) return cmd_refine(ref);
    if (eval_cmd->parsed()) return cmd_eval(ev);
    if (loss_cmd->parsed()) return cmd_eval_loss(el);
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

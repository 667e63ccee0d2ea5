#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "settle/bench.hpp"
#include "settle/errors.hpp"

namespace {

using namespace settle;

EsdfMap mapForScenario(const Scenario& scenario, double voxel_override) {
  const double voxel = voxel_override > 0.0 ? voxel_override : scenario.voxel_size;
  if (scenario.terrain_random)
    return buildEsdfFromHeightmap(randomHeightmap(scenario.terrain_seed, *scenario.terrain_random),
                                  voxel);
  return loadTerrainAuto(scenario.terrain_path, voxel);
}

int runScenario(const std::string& scenario_path, double voxel, bool oracle, double oracle_step,
                unsigned parallel, bool keep_going, bool emit_plotdata,
                const std::string& out_dir) {
  const Scenario scenario = loadScenario(scenario_path);
  const EsdfMap map = mapForScenario(scenario, voxel);
  const RobotModel robot = RobotModel::load(scenario.robot_path);
  BenchOptions options;
  options.run_oracle = oracle;
  if (oracle_step > 0.0) options.oracle.angle_step = degToRad(oracle_step);
  options.parallel = parallel;
  const BenchResult result = runBenchmark(map, robot, scenario, options);

  std::filesystem::create_directories(out_dir);
  writeCsv(result, (std::filesystem::path(out_dir) / "results.csv").string());
  if (emit_plotdata)
    writePlotData(result, (std::filesystem::path(out_dir) / "plotdata.jsonl").string());

  const BenchStats& s = result.stats;
  std::printf("scenario: %s (%d queries, voxel %.3g m)\n", scenario.name.c_str(), s.total,
              voxel > 0.0 ? voxel : scenario.voxel_size);
  std::printf("status: %d converged, %d no-convergence, %d out-of-map, %d degenerate\n",
              s.converged, s.no_convergence, s.out_of_map, s.degenerate);
  std::printf("settle time: mean %.1f us, max %.1f us\n", s.mean_time_us, s.max_time_us);
  if (s.compared > 0) {
    std::printf("vs oracle (%d poses): pos err mean %.4f m / median %.4f m / max %.4f m\n",
                s.compared, s.mean_pos_err, s.median_pos_err, s.max_pos_err);
    std::printf("                      rot err mean %.3f deg / median %.3f deg / max %.3f deg\n",
                radToDeg(s.mean_rot_err), radToDeg(s.median_rot_err), radToDeg(s.max_rot_err));
  }
  if (!keep_going && (s.no_convergence > 0 || s.out_of_map > 0)) return 2;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Settling benchmark: predict stable robot poses on an ESDF terrain"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Settle every query in a scenario and write a CSV report");
  std::string scenario_path, out_dir;
  double voxel = 0.0;
  bool oracle = false, keep_going = false, emit_plotdata = false;
  double oracle_step = 0.0;
  unsigned parallel = 0;
  run->add_option("--scenario", scenario_path, "Scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--voxel-size", voxel, "Override the scenario's map resolution [m]");
  run->add_flag("--oracle", oracle, "Also run the brute-force reference and report errors");
  run->add_option("--oracle-step", oracle_step, "Reference sweep step [deg], default 0.25");
  run->add_option("--parallel", parallel, "Worker threads (0 = all cores)");
  run->add_flag("--keep-going", keep_going, "Exit 0 even when queries fail to settle");
  run->add_flag("--emit-plotdata", emit_plotdata, "Write per-query contacts/hulls as JSON lines");
  run->add_option("--out", out_dir, "Output directory")->required();

  auto* build = app.add_subcommand("build-map", "Build and cache an ESDF from a terrain file");
  std::string terrain_path, map_out;
  double build_voxel = 0.05;
  build->add_option("--terrain", terrain_path, "Scene JSON or heightmap file")
      ->required()
      ->check(CLI::ExistingFile);
  build->add_option("--voxel-size", build_voxel, "Map resolution [m]");
  build->add_option("--out", map_out, "Cache file to write")->required();

  auto* predict = app.add_subcommand("predict", "Settle a single query and print the pose");
  std::string robot_path, p_map, pose_str, joints_path;
  double p_voxel = 0.05;
  predict->add_option("--map", p_map, "Terrain file (scene/heightmap/ESDF cache)")
      ->required()
      ->check(CLI::ExistingFile);
  predict->add_option("--robot", robot_path, "Robot JSON file")->required()->check(CLI::ExistingFile);
  predict
      ->add_option("--pose", pose_str,
                   "Query as \"x y yaw [z]\"; z defaults to the map's vertical midpoint")
      ->required();
  predict->add_option("--joints", joints_path, "Joint values JSON file, e.g. {\"flippers\": 0.5}")
      ->check(CLI::ExistingFile);
  predict->add_option("--voxel-size", p_voxel, "Map resolution when building from terrain [m]");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return runScenario(scenario_path, voxel, oracle, oracle_step, parallel, keep_going,
                         emit_plotdata, out_dir);
    if (build->parsed()) {
      const EsdfMap map = loadTerrainAuto(terrain_path, build_voxel);
      saveEsdf(map, map_out);
      const Eigen::Vector3i d = map.dims();
      std::printf("wrote %s: %d x %d x %d nodes, voxel %.3g m\n", map_out.c_str(), d.x(), d.y(),
                  d.z(), map.voxelSize());
      return 0;
    }
    if (predict->parsed()) {
      const EsdfMap map = loadTerrainAuto(p_map, p_voxel);
      const RobotModel robot = RobotModel::load(robot_path);
      JointConfig config;
      if (!joints_path.empty()) {
        std::ifstream in(joints_path);
        nlohmann::json j;
        in >> j;
        for (const auto& [key, value] : j.items()) config[key] = value.get<double>();
      }
      std::istringstream pose_in(pose_str);
      double px = 0.0, py = 0.0, pyaw = 0.0;
      double z_hint = 0.5 * (map.minBound().z() + map.maxBound().z());
      if (!(pose_in >> px >> py >> pyaw)) {
        std::cerr << "error: --pose expects \"x y yaw [z]\"\n";
        return 1;
      }
      pose_in >> z_hint;  // optional fourth field
      const QueryPose query{px, py, pyaw, z_hint};
      const PredictionResult pred = predictPose(map, robot.shape(config), query);
      const Eigen::Quaterniond q(pred.pose.linear());
      const Vec3 rpy = matrixToRpy(pred.pose.linear());
      nlohmann::json line{{"status", statusName(pred.status)},
                          {"position", {pred.pose.translation().x(), pred.pose.translation().y(),
                                        pred.pose.translation().z()}},
                          {"quaternion_wxyz", {q.w(), q.x(), q.y(), q.z()}},
                          {"rpy_deg", {radToDeg(rpy.x()), radToDeg(rpy.y()), radToDeg(rpy.z())}},
                          {"min_margin", pred.min_margin},
                          {"contacts", pred.contacts.size()}};
      std::printf("%s\n", line.dump().c_str());
      return pred.status == SettleStatus::Converged ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

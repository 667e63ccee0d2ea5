#include "settle/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "settle/errors.hpp"
#include "settle/parallel.hpp"

namespace settle {

using json = nlohmann::json;

PoseErrors poseErrors(const Isometry3& a, const Isometry3& b) {
  PoseErrors e;
  e.position = (a.translation() - b.translation()).norm();
  e.rotation = rotationAngleBetween(a.linear(), b.linear());
  return e;
}

QueryPose reduceToQuery(const Isometry3& pose, const EsdfMap& map) {
  const Vec3 rpy = matrixToRpy(pose.linear());
  if (std::abs(rpy.y()) >= degToRad(89.0))
    throw GimbalAmbiguityError("pitch too close to +-90 degrees to extract a yaw");
  QueryPose q;
  q.x = pose.translation().x();
  q.y = pose.translation().y();
  q.yaw = rpy.z();
  q.z_hint = 0.5 * (map.minBound().z() + map.maxBound().z());
  return q;
}

const char* statusName(SettleStatus status) {
  switch (status) {
    case SettleStatus::Converged: return "Converged";
    case SettleStatus::NoConvergence: return "NoConvergence";
    case SettleStatus::OutOfMap: return "OutOfMap";
    case SettleStatus::Degenerate: return "Degenerate";
  }
  return "Unknown";
}

namespace {

double uniformDouble(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

JointConfig parseJoints(const json& j) {
  JointConfig config;
  for (const auto& [key, value] : j.items()) config[key] = value.get<double>();
  return config;
}

std::optional<uint32_t> benchSeedOverride() {
  const char* env = std::getenv("BENCH_SEED");
  if (!env || !*env) return std::nullopt;
  return static_cast<uint32_t>(std::strtoul(env, nullptr, 10));
}

}  // namespace

Scenario loadScenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  Scenario s;
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };
  try {
    s.name = j.value("name", std::filesystem::path(path).stem().string());
    s.robot_path = resolve(j.at("robot").get<std::string>());
    if (j.contains("terrain")) s.terrain_path = resolve(j["terrain"].get<std::string>());
    if (j.contains("terrain_random")) {
      const json& tr = j["terrain_random"];
      RandomTerrainParams params;
      params.nx = tr.value("nx", params.nx);
      params.ny = tr.value("ny", params.ny);
      params.cell_size = tr.value("cell_size", params.cell_size);
      params.amplitude = tr.value("amplitude", params.amplitude);
      params.smooth_iters = tr.value("smooth_iters", params.smooth_iters);
      params.max_slope_deg = tr.value("max_slope_deg", params.max_slope_deg);
      s.terrain_random = params;
      s.terrain_seed = tr.value("seed", 1u);
    }
    if (s.terrain_path.empty() && !s.terrain_random)
      throw ParseError("scenario: needs 'terrain' or 'terrain_random'");
    if (j.contains("joints")) s.joints = parseJoints(j["joints"]);
    s.voxel_size = j.value("voxel_size", 0.05);
    for (const json& qj : j.value("queries", json::array())) {
      ScenarioQuery q;
      q.x = qj.at("x").get<double>();
      q.y = qj.at("y").get<double>();
      q.yaw = qj.value("yaw", 0.0);
      if (qj.contains("joints")) q.joints = parseJoints(qj["joints"]);
      s.queries.push_back(std::move(q));
    }
    if (j.contains("random_queries")) {
      const json& rq = j["random_queries"];
      RandomQuerySpec spec;
      spec.count = rq.at("count").get<int>();
      spec.seed = rq.value("seed", 1u);
      spec.margin = rq.value("margin", 0.5);
      spec.z_offset = rq.value("z_offset", 0.0);
      s.random_queries = spec;
    }
    if (s.queries.empty() && !s.random_queries)
      throw ParseError("scenario: needs 'queries' or 'random_queries'");
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  if (const auto seed = benchSeedOverride()) {
    s.terrain_seed = *seed;
    if (s.random_queries) s.random_queries->seed = *seed;
  }
  return s;
}

EsdfMap loadTerrainAuto(const std::string& path, double voxel_size) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw ParseError("cannot open terrain file: " + path);
  char magic[4] = {0, 0, 0, 0};
  probe.read(magic, 4);
  probe.close();
  if (magic[0] == 'E' && magic[1] == 'S' && magic[2] == 'D' && magic[3] == 'F')
    return loadEsdf(path);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{')
    return EsdfMap::buildFromScene(parseTerrainScene(text), voxel_size);
  return buildEsdfFromHeightmap(parseHeightmap(text), voxel_size);
}

BenchResult runBenchmark(const EsdfMap& map, const RobotModel& robot, const Scenario& scenario,
                         const BenchOptions& options) {
  const double z_mid = 0.5 * (map.minBound().z() + map.maxBound().z());
  std::vector<std::pair<QueryPose, JointConfig>> queries;
  for (const ScenarioQuery& sq : scenario.queries) {
    QueryPose q{sq.x, sq.y, sq.yaw, z_mid};
    queries.emplace_back(q, sq.joints ? *sq.joints : scenario.joints);
  }
  if (scenario.random_queries) {
    const RandomQuerySpec& spec = *scenario.random_queries;
    std::mt19937_64 rng(spec.seed);
    const Vec3 lo = map.minBound(), hi = map.maxBound();
    for (int i = 0; i < spec.count; ++i) {
      QueryPose q;
      q.x = lo.x() + spec.margin + uniformDouble(rng) * (hi.x() - lo.x() - 2.0 * spec.margin);
      q.y = lo.y() + spec.margin + uniformDouble(rng) * (hi.y() - lo.y() - 2.0 * spec.margin);
      q.yaw = (2.0 * uniformDouble(rng) - 1.0) * kPi;
      q.z_hint = z_mid + spec.z_offset;
      queries.emplace_back(q, scenario.joints);
    }
  }

  BenchResult result;
  result.records.resize(queries.size());
  const auto settleOne = [&](size_t i) {
    QueryRecord& rec = result.records[i];
    rec.index = static_cast<int>(i);
    rec.query = queries[i].first;
    const RobotState state = robot.shape(queries[i].second);
    const auto t0 = std::chrono::steady_clock::now();
    const PredictionResult pred = predictPose(map, state, rec.query, options.settling);
    const auto t1 = std::chrono::steady_clock::now();
    rec.time_us = std::chrono::duration<double, std::micro>(t1 - t0).count();
    rec.status = pred.status;
    rec.pose = pred.pose;
    rec.min_margin = pred.min_margin;
    rec.contacts = pred.contacts;
    rec.hull = pred.hull;
    if (options.run_oracle && pred.status == SettleStatus::Converged) {
      OracleParams oracle = options.oracle;
      oracle.threads = options.parallel;
      const OracleResult ref = settleBruteforce(map, state, rec.query, oracle);
      if (ref.found) rec.errors = poseErrors(pred.pose, ref.pose);
    }
  };
  if (options.run_oracle || options.parallel == 1) {
    for (size_t i = 0; i < queries.size(); ++i) settleOne(i);
  } else {
    parallelFor(queries.size(), settleOne, options.parallel);
  }
  result.stats = computeStats(result.records);
  return result;
}

BenchStats computeStats(const std::vector<QueryRecord>& records) {
  BenchStats s;
  s.total = static_cast<int>(records.size());
  std::vector<double> pos, rot;
  for (const QueryRecord& r : records) {
    switch (r.status) {
      case SettleStatus::Converged: ++s.converged; break;
      case SettleStatus::NoConvergence: ++s.no_convergence; break;
      case SettleStatus::OutOfMap: ++s.out_of_map; break;
      case SettleStatus::Degenerate: ++s.degenerate; break;
    }
    s.mean_time_us += r.time_us;
    s.max_time_us = std::max(s.max_time_us, r.time_us);
    if (r.errors) {
      pos.push_back(r.errors->position);
      rot.push_back(r.errors->rotation);
    }
  }
  if (s.total > 0) s.mean_time_us /= s.total;
  s.compared = static_cast<int>(pos.size());
  const auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  if (!pos.empty()) {
    for (double v : pos) {
      s.mean_pos_err += v;
      s.max_pos_err = std::max(s.max_pos_err, v);
    }
    s.mean_pos_err /= pos.size();
    s.median_pos_err = median(pos);
    for (double v : rot) {
      s.mean_rot_err += v;
      s.max_rot_err = std::max(s.max_rot_err, v);
    }
    s.mean_rot_err /= rot.size();
    s.median_rot_err = median(rot);
  }
  return s;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

void writeCsv(const BenchResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open CSV output: " + path);
  out << "query_index,x,y,yaw,z_hint,status,pred_x,pred_y,pred_z,pred_qw,pred_qx,pred_qy,pred_qz,"
         "pos_err_m,rot_err_rad,time_us\n";
  for (const QueryRecord& r : result.records) {
    Eigen::Quaterniond q(r.pose.linear());
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();
    out << r.index << ',' << fmt(r.query.x) << ',' << fmt(r.query.y) << ',' << fmt(r.query.yaw)
        << ',' << fmt(r.query.z_hint) << ',' << statusName(r.status) << ','
        << fmt(r.pose.translation().x()) << ',' << fmt(r.pose.translation().y()) << ','
        << fmt(r.pose.translation().z()) << ',' << fmt(q.w()) << ',' << fmt(q.x()) << ','
        << fmt(q.y()) << ',' << fmt(q.z()) << ',';
    if (r.errors) out << fmt(r.errors->position) << ',' << fmt(r.errors->rotation);
    else out << ',';
    out << ',' << fmt(r.time_us) << '\n';
  }
}

void writePlotData(const BenchResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open plot data output: " + path);
  for (const QueryRecord& r : result.records) {
    json j;
    j["index"] = r.index;
    j["status"] = statusName(r.status);
    j["query"] = {{"x", r.query.x}, {"y", r.query.y}, {"yaw", r.query.yaw}};
    const Vec3 t = r.pose.translation();
    Eigen::Quaterniond q(r.pose.linear());
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();
    j["pose"] = {{"xyz", {t.x(), t.y(), t.z()}}, {"qwxyz", {q.w(), q.x(), q.y(), q.z()}}};
    j["min_margin"] = r.min_margin;
    auto points = [](const std::vector<Vec3>& v) {
      json arr = json::array();
      for (const Vec3& p : v) arr.push_back({p.x(), p.y(), p.z()});
      return arr;
    };
    j["contacts"] = points(r.contacts);
    j["hull"] = points(r.hull);
    out << j.dump() << '\n';
  }
}

}  // namespace settle

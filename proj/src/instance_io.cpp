#include "hybrid_servo/instance_io.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hybrid_servo/errors.h"

namespace hybrid_servo::io {

namespace {

[[noreturn]] void Fail(ErrorCode code, const std::string& msg) {
  throw SolverError(code, msg);
}

const Json& Require(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    Fail(ErrorCode::kParse, where + ": missing key '" + key + "'");
  }
  return obj.at(key);
}

double Number(const Json& j, const std::string& what) {
  if (!j.is_number()) Fail(ErrorCode::kParse, what + ": expected a number");
  return j.get<double>();
}

int Integer(const Json& j, const std::string& what) {
  if (!j.is_number_integer()) Fail(ErrorCode::kParse, what + ": expected an integer");
  return j.get<int>();
}

Json Vec3ToJson(const tilting::Vector3& v) { return Json::array({v.x(), v.y(), v.z()}); }

tilting::Vector3 Vec3FromJson(const Json& j, const std::string& what) {
  const Vector v = VectorFromJson(j, what);
  if (v.size() != 3) Fail(ErrorCode::kParse, what + ": expected 3 entries");
  return v;
}

Json NumberOrNull(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json TiltingToJson(const tilting::TiltingScenario& s) {
  Json j;
  j["edge_length"] = s.edge_length;
  j["mu_hand"] = s.mu_hand;
  j["mu_table"] = s.mu_table;
  j["n_min"] = s.n_min;
  j["gravity_object"] = Vec3ToJson(s.gravity_object);
  j["gravity_hand"] = Vec3ToJson(s.gravity_hand);
  j["hand_contact_obj"] = Vec3ToJson(s.hand_contact_obj);
  j["table_contacts"] = Json::array({Vec3ToJson(s.table_contacts[0]),
                                     Vec3ToJson(s.table_contacts[1])});
  j["rotation_axis"] = Vec3ToJson(s.rotation_axis);
  j["tilt_rate"] = s.tilt_rate;
  j["time_step"] = s.time_step;
  j["num_steps"] = s.num_steps;
  const auto& q = s.initial_object.quat;
  j["initial_object"] = {{"position", Vec3ToJson(s.initial_object.p)},
                         {"quaternion_wxyz", Json::array({q.w(), q.x(), q.y(), q.z()})}};
  return j;
}

tilting::TiltingScenario TiltingFromJson(const Json& j) {
  if (!j.is_object()) Fail(ErrorCode::kParse, "params: expected an object");
  // Missing keys fall back to the defaults for the given edge length.
  tilting::TiltingScenario s;
  if (j.contains("edge_length")) {
    s = tilting::TiltingScenario::ForEdgeLength(Number(j.at("edge_length"), "edge_length"));
  }
  auto num = [&](const char* key, double& dst) {
    if (j.contains(key)) dst = Number(j.at(key), key);
  };
  auto vec = [&](const char* key, tilting::Vector3& dst) {
    if (j.contains(key)) dst = Vec3FromJson(j.at(key), key);
  };
  num("mu_hand", s.mu_hand);
  num("mu_table", s.mu_table);
  num("n_min", s.n_min);
  vec("gravity_object", s.gravity_object);
  vec("gravity_hand", s.gravity_hand);
  vec("hand_contact_obj", s.hand_contact_obj);
  vec("rotation_axis", s.rotation_axis);
  num("tilt_rate", s.tilt_rate);
  num("time_step", s.time_step);
  if (j.contains("num_steps")) s.num_steps = Integer(j.at("num_steps"), "num_steps");
  if (j.contains("table_contacts")) {
    const Json& tc = j.at("table_contacts");
    if (!tc.is_array() || tc.size() != 2) {
      Fail(ErrorCode::kParse, "table_contacts: expected two points");
    }
    s.table_contacts[0] = Vec3FromJson(tc[0], "table_contacts[0]");
    s.table_contacts[1] = Vec3FromJson(tc[1], "table_contacts[1]");
  }
  if (j.contains("initial_object")) {
    const Json& io = j.at("initial_object");
    if (io.contains("position")) s.initial_object.p = Vec3FromJson(io.at("position"), "position");
    if (io.contains("quaternion_wxyz")) {
      const Vector q = VectorFromJson(io.at("quaternion_wxyz"), "quaternion_wxyz");
      if (q.size() != 4) Fail(ErrorCode::kParse, "quaternion_wxyz: expected 4 entries");
      s.initial_object.quat = tilting::Quaternion(q(0), q(1), q(2), q(3));
    }
  }
  return s;
}

Json RawToJson(const SystemInstance& inst, const GuardConditions& guard) {
  Json j;
  j["n_u"] = inst.n_u;
  j["n_a"] = inst.n_a;
  if (inst.J_phi && inst.Omega) {
    j["J_phi"] = MatrixToJson(*inst.J_phi);
    j["Omega"] = MatrixToJson(*inst.Omega);
  } else {
    j["N"] = MatrixToJson(inst.N);
  }
  j["G"] = MatrixToJson(inst.G);
  j["b_G"] = VectorToJson(inst.b_G);
  j["F"] = VectorToJson(inst.F);
  j["Lambda"] = MatrixToJson(guard.Lambda);
  j["b_Lambda"] = VectorToJson(guard.b_Lambda);
  j["Gamma"] = MatrixToJson(guard.Gamma);
  j["b_Gamma"] = VectorToJson(guard.b_Gamma);
  return j;
}

void RawFromJson(const Json& j, SystemInstance& inst, GuardConditions& guard) {
  inst.n_u = Integer(Require(j, "n_u", "params"), "n_u");
  inst.n_a = Integer(Require(j, "n_a", "params"), "n_a");
  if (inst.n_u < 0 || inst.n_a < 0) Fail(ErrorCode::kInvalidArgument, "n_u and n_a must be >= 0");
  const int n = inst.n();
  if (j.contains("N")) {
    inst.N = MatrixFromJson(j.at("N"), n, "N");
  } else if (j.contains("J_phi") && j.contains("Omega")) {
    const Matrix Omega = MatrixFromJson(j.at("Omega"), n, "Omega");
    const Matrix J = MatrixFromJson(j.at("J_phi"), Omega.rows(), "J_phi");
    inst.J_phi = J;
    inst.Omega = Omega;
    inst.N = (J.cols() == Omega.rows()) ? Matrix(J * Omega) : Matrix::Zero(J.rows(), n);
  } else {
    inst.N = Matrix::Zero(0, n);
  }
  inst.G = MatrixFromJson(Require(j, "G", "params"), n, "G");
  inst.b_G = VectorFromJson(Require(j, "b_G", "params"), "b_G");
  inst.F = j.contains("F") ? VectorFromJson(j.at("F"), "F") : Vector(Vector::Zero(n));
  const Eigen::Index cols = inst.N.rows() + n;
  guard.Lambda = j.contains("Lambda") ? MatrixFromJson(j.at("Lambda"), cols, "Lambda")
                                      : Matrix(Matrix::Zero(0, cols));
  guard.b_Lambda = j.contains("b_Lambda") ? VectorFromJson(j.at("b_Lambda"), "b_Lambda")
                                          : Vector(Vector::Zero(0));
  guard.Gamma = j.contains("Gamma") ? MatrixFromJson(j.at("Gamma"), cols, "Gamma")
                                    : Matrix(Matrix::Zero(0, cols));
  guard.b_Gamma = j.contains("b_Gamma") ? VectorFromJson(j.at("b_Gamma"), "b_Gamma")
                                        : Vector(Vector::Zero(0));
}

Json OverridesToJson(const SolverOverrides& o) {
  Json j = Json::object();
  if (o.num_starts) j["num_starts"] = *o.num_starts;
  if (o.rng_seed) j["rng_seed"] = *o.rng_seed;
  if (o.rank_tol) j["rank_tol"] = *o.rank_tol;
  if (o.f_max) j["f_max"] = *o.f_max;
  if (o.step_length) j["step_length"] = *o.step_length;
  if (o.max_iters) j["max_iters"] = *o.max_iters;
  if (o.lexicographic) j["lexicographic"] = *o.lexicographic;
  return j;
}

SolverOverrides OverridesFromJson(const Json& j) {
  if (!j.is_object()) Fail(ErrorCode::kParse, "solver: expected an object");
  SolverOverrides o;
  if (j.contains("num_starts")) o.num_starts = Integer(j.at("num_starts"), "num_starts");
  if (j.contains("rng_seed")) {
    if (!j.at("rng_seed").is_number_unsigned()) {
      Fail(ErrorCode::kParse, "rng_seed: expected a non-negative integer");
    }
    o.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  }
  if (j.contains("rank_tol")) o.rank_tol = Number(j.at("rank_tol"), "rank_tol");
  if (j.contains("f_max")) o.f_max = Number(j.at("f_max"), "f_max");
  if (j.contains("step_length")) o.step_length = Number(j.at("step_length"), "step_length");
  if (j.contains("max_iters")) o.max_iters = Integer(j.at("max_iters"), "max_iters");
  if (j.contains("lexicographic")) {
    if (!j.at("lexicographic").is_boolean()) Fail(ErrorCode::kParse, "lexicographic: expected a bool");
    o.lexicographic = j.at("lexicographic").get<bool>();
  }
  if (o.num_starts && *o.num_starts < 1) Fail(ErrorCode::kInvalidArgument, "num_starts must be >= 1");
  if (o.rank_tol && !(*o.rank_tol > 0.0)) Fail(ErrorCode::kInvalidArgument, "rank_tol must be > 0");
  if (o.f_max && !(*o.f_max > 0.0)) Fail(ErrorCode::kInvalidArgument, "f_max must be > 0");
  if (o.step_length && !(*o.step_length > 0.0)) Fail(ErrorCode::kInvalidArgument, "step_length must be > 0");
  if (o.max_iters && *o.max_iters < 1) Fail(ErrorCode::kInvalidArgument, "max_iters must be >= 1");
  return o;
}

}  // namespace

void SolverOverrides::ApplyTo(SolverConfig& config) const {
  if (num_starts) config.velocity.num_starts = *num_starts;
  if (rng_seed) config.velocity.rng_seed = *rng_seed;
  if (rank_tol) config.velocity.rank_tol = *rank_tol;
  if (step_length) config.velocity.step_length = *step_length;
  if (max_iters) config.velocity.max_iters = *max_iters;
  if (f_max) config.force.f_max = *f_max;
  if (lexicographic) config.force.lexicographic = *lexicographic;
}

Json MatrixToJson(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json VectorToJson(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix MatrixFromJson(const Json& j, Eigen::Index cols, const std::string& what) {
  if (!j.is_array()) Fail(ErrorCode::kParse, what + ": expected an array of rows");
  if (j.empty()) return Matrix::Zero(0, cols);
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) Fail(ErrorCode::kParse, what + ": expected an array of rows");
  const Eigen::Index width = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, width);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != width) {
      Fail(ErrorCode::kParse, what + ": ragged rows");
    }
    for (Eigen::Index k = 0; k < width; ++k) {
      m(i, k) = Number(row[static_cast<std::size_t>(k)], what);
    }
  }
  return m;
}

Vector VectorFromJson(const Json& j, const std::string& what) {
  if (!j.is_array()) Fail(ErrorCode::kParse, what + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = Number(j[i], what);
  return v;
}

ScenarioFile ParseScenario(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) Fail(ErrorCode::kParse, "top level must be an object");
  const int schema = Integer(Require(j, "schema", "scenario"), "schema");
  if (schema != kSchemaVersion) {
    Fail(ErrorCode::kParse, "unsupported schema version " + std::to_string(schema));
  }
  const Json& type = Require(j, "scenario_type", "scenario");
  if (!type.is_string()) Fail(ErrorCode::kParse, "scenario_type: expected a string");

  ScenarioFile out;
  const Json params = j.contains("params") ? j.at("params") : Json::object();
  const std::string name = type.get<std::string>();
  if (name == "block_tilting") {
    out.type = ScenarioType::kBlockTilting;
    out.tilting = TiltingFromJson(params);
  } else if (name == "raw_instance") {
    out.type = ScenarioType::kRawInstance;
    RawFromJson(params, out.instance, out.guard);
  } else {
    Fail(ErrorCode::kParse, "unknown scenario_type '" + name + "'");
  }
  if (j.contains("solver")) out.solver = OverridesFromJson(j.at("solver"));
  return out;
}

ScenarioFile LoadScenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kParse, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseScenario(ss.str());
}

Json ScenarioToJson(const ScenarioFile& s) {
  Json j;
  j["schema"] = kSchemaVersion;
  if (s.type == ScenarioType::kBlockTilting) {
    j["scenario_type"] = "block_tilting";
    j["params"] = TiltingToJson(s.tilting);
  } else {
    j["scenario_type"] = "raw_instance";
    j["params"] = RawToJson(s.instance, s.guard);
  }
  j["solver"] = OverridesToJson(s.solver);
  return j;
}

std::string Dump(const Json& json) { return json.dump(2) + "\n"; }

Json ActionToJson(const HybridAction& a) {
  Json j;
  j["n_av"] = a.n_av;
  j["n_af"] = a.n_af;
  j["T"] = MatrixToJson(a.T);
  j["R_a"] = MatrixToJson(a.R_a);
  j["w_av"] = VectorToJson(a.w_av);
  j["eta_af"] = VectorToJson(a.eta_af);
  j["lambda"] = VectorToJson(a.lambda);
  j["eta"] = VectorToJson(a.eta);
  return j;
}

Json ReportToJson(const verify::VerificationReport& r) {
  auto notes = [](const std::vector<std::string>& v) {
    Json out = Json::array();
    for (const auto& s : v) out.push_back(s);
    return out;
  };
  Json vel;
  vel["pass"] = r.velocity.pass;
  vel["rank_NC"] = r.velocity.rank_NC;
  vel["rank_NG"] = r.velocity.rank_NG;
  vel["null_residual"] = r.velocity.null_residual;
  vel["reverse_null_residual"] = r.velocity.reverse_null_residual;
  vel["goal_residual"] = r.velocity.goal_residual;
  vel["command_residual"] = r.velocity.command_residual;
  vel["command_consistency"] = r.velocity.command_consistency;
  vel["notes"] = notes(r.velocity.notes);
  Json force;
  force["pass"] = r.force.pass;
  force["newton_residual"] = r.force.newton_residual;
  force["unactuated_residual"] = r.force.unactuated_residual;
  force["gamma_residual"] = r.force.gamma_residual;
  force["min_guard_margin"] = NumberOrNull(r.force.min_guard_margin);
  force["guard_margins"] = VectorToJson(r.force.guard_margins);
  force["notes"] = notes(r.force.notes);
  Json j;
  j["pass"] = r.pass();
  j["subspace_equality"] = std::move(vel);
  j["force"] = std::move(force);
  return j;
}

ScenarioFile RawScenario(const SystemInstance& instance,
                         const GuardConditions& guard,
                         const SolverConfig& config) {
  ScenarioFile s;
  s.type = ScenarioType::kRawInstance;
  s.instance = instance;
  s.guard = guard;
  s.solver.num_starts = config.velocity.num_starts;
  s.solver.rng_seed = config.velocity.rng_seed;
  s.solver.rank_tol = config.velocity.rank_tol;
  s.solver.step_length = config.velocity.step_length;
  s.solver.max_iters = config.velocity.max_iters;
  s.solver.f_max = config.force.f_max;
  s.solver.lexicographic = config.force.lexicographic;
  return s;
}

}  // namespace hybrid_servo::io

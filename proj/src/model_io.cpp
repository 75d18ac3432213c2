#include <fstream>
#include <sstream>

#include "json.hpp"
#include "wbdc/errors.hpp"
#include "wbdc/model.hpp"

namespace wbdc {
namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw ModelParseError(where + "." + key + ": missing");
  return obj.at(key);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ModelParseError(where + ": expected a number");
  return v.get<double>();
}

std::string text(const json& v, const std::string& where) {
  if (!v.is_string()) throw ModelParseError(where + ": expected a string");
  return v.get<std::string>();
}

Eigen::VectorXd numbers(const json& v, int n, const std::string& where) {
  if (!v.is_array() || static_cast<int>(v.size()) != n)
    throw ModelParseError(where + ": expected an array of " + std::to_string(n) + " numbers");
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out(i) = number(v[i], where + "[" + std::to_string(i) + "]");
  return out;
}

Vec3 vec3_or(const json& obj, const char* key, const Vec3& fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return numbers(obj.at(key), 3, where + "." + key);
}

Mat3 rpy_to_matrix(const Vec3& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

}  // namespace

RobotModel load_model(std::string_view doc_text) {
  json doc;
  try {
    doc = json::parse(doc_text);
  } catch (const json::parse_error& e) {
    throw ModelParseError(std::string("model document: ") + e.what());
  }
  if (!doc.is_object()) throw ModelParseError("model document: top level must be an object");

  const Vec3 gravity = doc.contains("gravity") ? Vec3(numbers(doc["gravity"], 3, "model.gravity"))
                                                : Vec3(0.0, 0.0, -9.81);

  std::vector<Body> bodies;
  const json& jb = require(doc, "bodies", "model");
  if (!jb.is_array()) throw ModelParseError("model.bodies: expected an array");
  for (std::size_t i = 0; i < jb.size(); ++i) {
    const std::string where = "bodies[" + std::to_string(i) + "]";
    Body b;
    b.name = text(require(jb[i], "name", where), where + ".name");
    b.mass = number(require(jb[i], "mass", where), where + ".mass");
    if (!(b.mass > 0.0)) throw ModelParseError(where + ".mass: must be positive");
    b.com = vec3_or(jb[i], "com", Vec3::Zero(), where);
    const Eigen::VectorXd in = numbers(require(jb[i], "inertia", where), 6, where + ".inertia");
    b.inertia << in(0), in(3), in(4),
                 in(3), in(1), in(5),
                 in(4), in(5), in(2);
    for (const auto& other : bodies)
      if (other.name == b.name) throw ModelParseError(where + ".name: duplicate body " + b.name);
    bodies.push_back(std::move(b));
  }

  auto find_body = [&](const std::string& name, const std::string& where) {
    for (int i = 0; i < static_cast<int>(bodies.size()); ++i)
      if (bodies[i].name == name) return i;
    throw ModelParseError(where + ": unknown body " + name);
  };

  std::vector<Joint> joints;
  if (doc.contains("joints")) {
    const json& jj = doc.at("joints");
    if (!jj.is_array()) throw ModelParseError("model.joints: expected an array");
    for (std::size_t i = 0; i < jj.size(); ++i) {
      const std::string where = "joints[" + std::to_string(i) + "]";
      Joint j;
      j.name = text(require(jj[i], "name", where), where + ".name");
      const std::string type = text(require(jj[i], "type", where), where + ".type");
      if (type == "floating" || type == "floating-6dof")
        j.type = JointType::Floating;
      else if (type == "revolute")
        j.type = JointType::Revolute;
      else if (type == "prismatic")
        j.type = JointType::Prismatic;
      else
        throw ModelParseError(where + ".type: unknown joint type " + type);

      const std::string parent =
          jj[i].contains("parent") ? text(jj[i].at("parent"), where + ".parent") : "world";
      j.parent = parent == "world" ? -1 : find_body(parent, where + ".parent");
      j.child = find_body(text(require(jj[i], "child", where), where + ".child"), where + ".child");
      j.origin.setIdentity();
      j.origin.translation() = vec3_or(jj[i], "origin_xyz", Vec3::Zero(), where);
      j.origin.linear() = rpy_to_matrix(vec3_or(jj[i], "origin_rpy", Vec3::Zero(), where));
      if (j.type != JointType::Floating) {
        j.axis = numbers(require(jj[i], "axis", where), 3, where + ".axis");
        if (j.axis.norm() < 1e-12) throw ModelParseError(where + ".axis: zero vector");
      }
      for (const auto& other : joints)
        if (other.name == j.name) throw ModelParseError(where + ".name: duplicate joint " + j.name);
      joints.push_back(std::move(j));
    }
  }

  std::vector<std::string> actuated;
  if (doc.contains("actuated")) {
    const json& ja = doc.at("actuated");
    if (!ja.is_array()) throw ModelParseError("model.actuated: expected an array");
    for (std::size_t i = 0; i < ja.size(); ++i)
      actuated.push_back(text(ja[i], "actuated[" + std::to_string(i) + "]"));
  } else {
    // Omitted: every non-floating joint carries a motor.
    for (const auto& j : joints)
      if (j.type != JointType::Floating) actuated.push_back(j.name);
  }

  std::vector<Frame> frames;
  if (doc.contains("frames")) {
    const json& jf = doc.at("frames");
    if (!jf.is_array()) throw ModelParseError("model.frames: expected an array");
    for (std::size_t i = 0; i < jf.size(); ++i) {
      const std::string where = "frames[" + std::to_string(i) + "]";
      Frame f;
      f.name = text(require(jf[i], "name", where), where + ".name");
      f.body = find_body(text(require(jf[i], "body", where), where + ".body"), where + ".body");
      f.offset = vec3_or(jf[i], "offset_xyz", Vec3::Zero(), where);
      for (const auto& other : frames)
        if (other.name == f.name) throw ModelParseError(where + ".name: duplicate frame " + f.name);
      frames.push_back(std::move(f));
    }
  }

  return RobotModel(std::move(bodies), std::move(joints), std::move(actuated), std::move(frames),
                    gravity);
}

RobotModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelParseError("cannot open model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_model(ss.str());
}

}  // namespace wbdc

#include "clfsynth/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "clfsynth/errors.hpp"

namespace clfsynth {

Json MatrixToJson(const Eigen::MatrixXd& M) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) data.push_back(M(i, j));
  }
  return Json{{"rows", M.rows()}, {"cols", M.cols()}, {"data", data}};
}

namespace {

Eigen::MatrixXd FromNestedRows(const Json& rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  if (r == 0) return Eigen::MatrixXd(0, 0);
  if (!rows[0].is_array()) {
    throw ValidationError("nested matrix rows must be arrays");
  }
  const auto c = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd M(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (!rows[i].is_array() || static_cast<Eigen::Index>(rows[i].size()) != c) {
      throw ValidationError("ragged matrix rows");
    }
    for (Eigen::Index j = 0; j < c; ++j) M(i, j) = rows[i][j].get<double>();
  }
  return M;
}

}  // namespace

Eigen::MatrixXd MatrixFromJson(const Json& j) {
  try {
    if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
    if (j.is_array()) return FromNestedRows(j);
    if (!j.is_object() || !j.contains("data")) {
      throw ValidationError("matrix must be an object with rows/cols/data");
    }
    const Json& data = j.at("data");
    if (!data.empty() && data[0].is_array()) {
      Eigen::MatrixXd M = FromNestedRows(data);
      if (j.contains("rows") && j.at("rows").get<Eigen::Index>() != M.rows()) {
        throw ValidationError("matrix row count does not match data");
      }
      if (j.contains("cols") && j.at("cols").get<Eigen::Index>() != M.cols()) {
        throw ValidationError("matrix column count does not match data");
      }
      return M;
    }
    const auto r = j.at("rows").get<Eigen::Index>();
    const auto c = j.at("cols").get<Eigen::Index>();
    if (r < 0 || c < 0 || static_cast<Eigen::Index>(data.size()) != r * c) {
      throw ValidationError("matrix data length must equal rows * cols");
    }
    Eigen::MatrixXd M(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index k = 0; k < c; ++k) {
        M(i, k) = data[static_cast<std::size_t>(i * c + k)].get<double>();
      }
    }
    return M;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed matrix: ") + e.what());
  }
}

Json VectorToJson(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd VectorFromJson(const Json& j) {
  try {
    if (j.is_number()) return Eigen::VectorXd::Constant(1, j.get<double>());
    if (j.is_array() && (j.empty() || !j[0].is_array())) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
      for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
      return v;
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed vector: ") + e.what());
  }
  const Eigen::MatrixXd M = MatrixFromJson(j);
  if (M.cols() == 1) return M.col(0);
  if (M.rows() == 1) return M.row(0).transpose();
  throw ValidationError("expected a vector");
}

Box BoxFromJson(const Json& j, int n) {
  if (j.contains("half_width")) {
    const Json& w = j.at("half_width");
    if (w.is_number()) return Box::Symmetric(n, w.get<double>());
    const Eigen::VectorXd hw = VectorFromJson(w);
    if (hw.size() != n) throw DimensionError("half_width must have n entries");
    return Box::Symmetric(hw);
  }
  if (j.contains("lower") && j.contains("upper")) {
    Box box{VectorFromJson(j.at("lower")), VectorFromJson(j.at("upper"))};
    if (box.dim() != n || box.upper.size() != n) {
      throw DimensionError("box bounds must have n entries");
    }
    if (!(box.upper.array() > box.lower.array()).all()) {
      throw ValidationError("box upper bounds must exceed lower bounds");
    }
    return box;
  }
  throw ValidationError("box needs half_width or lower/upper");
}

LinearCoreConfig LinearCoreConfigFromJson(const Json& j) {
  LinearCoreConfig cfg;
  if (j.is_null()) return cfg;
  if (j.contains("care_tol")) cfg.care_tol = j.at("care_tol").get<double>();
  if (j.contains("max_newton_iter")) {
    cfg.max_newton_iter = j.at("max_newton_iter").get<int>();
  }
  if (j.contains("hurwitz_margin")) {
    cfg.hurwitz_margin = j.at("hurwitz_margin").get<double>();
  }
  if (!(cfg.care_tol > 0.0) || cfg.max_newton_iter < 1 ||
      !(cfg.hurwitz_margin >= 0.0)) {
    throw ValidationError("linear_core tolerances must be positive");
  }
  return cfg;
}

std::string FormatDouble(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

Eigen::VectorXd ParseVectorList(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) {
      throw ValidationError("empty entry in vector list '" + text + "'");
    }
    item = item.substr(first, last - first + 1);
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw ValidationError("cannot parse '" + item + "' as a number");
    }
    values.push_back(v);
  }
  if (values.empty()) throw ValidationError("empty vector list");
  return Eigen::Map<Eigen::VectorXd>(values.data(),
                                     static_cast<Eigen::Index>(values.size()));
}

void WriteTrajectoryCsv(std::ostream& out, const Trajectory& traj,
                        const std::vector<std::string>& state_names,
                        const std::vector<std::string>& input_names,
                        const std::vector<std::string>& annotation_names) {
  out << "t";
  for (const auto& name : state_names) out << ',' << name;
  for (const auto& name : input_names) out << ',' << name;
  for (const auto& name : annotation_names) {
    if (!traj.annotations.count(name)) {
      throw ValidationError("trajectory has no column '" + name + "'");
    }
    out << ',' << name;
  }
  out << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << FormatDouble(traj.times[k]);
    for (Eigen::Index i = 0; i < traj.states[k].size(); ++i) {
      out << ',' << FormatDouble(traj.states[k](i));
    }
    for (Eigen::Index i = 0; i < traj.inputs[k].size(); ++i) {
      out << ',' << FormatDouble(traj.inputs[k](i));
    }
    for (const auto& name : annotation_names) {
      out << ',' << FormatDouble(traj.annotations.at(name)[k]);
    }
    out << '\n';
  }
}

std::uint64_t Fnv1a64(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string HexDigest(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void WriteTextFile(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
}

}  // namespace clfsynth

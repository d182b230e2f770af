#include "exitlim/problem_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace exitlim {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open problem file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

Eigen::VectorXd to_vector(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of numbers");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Eigen::MatrixXd to_matrix(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ConfigError(std::string(what) + " must be an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) throw ConfigError(std::string(what) + " has ragged rows");
    for (std::size_t k = 0; k < cols; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
  }
  return m;
}

std::vector<Expression> parse_components(const json& j, const char* what, int eps_index = -1) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of expressions");
  std::vector<Expression> out;
  out.reserve(j.size());
  for (const auto& item : j) {
    if (!item.is_string())
      throw ConfigError(std::string(what) + " entries must be expression strings");
    try {
      out.push_back(Expression::parse(item.get<std::string>(), eps_index));
    } catch (const ParseError& e) {
      throw ConfigError(std::string("in ") + what + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

ProblemSpec parse_problem_json(const std::string& text) {
  const json j = parse_json(text);
  try {
    ProblemSpec spec;
    spec.dim = j.at("dim").get<int>();
    const int d = spec.dim;

    spec.b = VectorField(d, parse_components(j.at("b"), "b"));

    {
      if (!j.at("sigma").is_array()) throw ConfigError("sigma must be an array of rows");
      std::vector<Expression> comps;
      for (const auto& row : j.at("sigma")) {
        auto parsed = parse_components(row, "sigma");
        comps.insert(comps.end(), std::make_move_iterator(parsed.begin()),
                     std::make_move_iterator(parsed.end()));
      }
      spec.sigma = MatrixField(d, std::move(comps));
    }

    if (j.contains("psi")) {
      spec.psi = VectorField(d, parse_components(j.at("psi"), "psi"));
    } else {
      std::vector<Expression> zeros;
      for (int i = 0; i < d; ++i) zeros.push_back(Expression::parse("0"));
      spec.psi = VectorField(d, std::move(zeros));
    }
    if (j.contains("psi_eps_correction")) {
      // The correction sees the noise amplitude as one extra trailing input,
      // written `eps` in the DSL.
      spec.psi_correction = VectorField(
          d, parse_components(j.at("psi_eps_correction"), "psi_eps_correction", d), 1);
    }

    spec.alpha1 = j.at("alpha1").get<double>();
    spec.init.alpha2 = j.at("alpha2").get<double>();
    spec.init.x0 = to_vector(j.at("x0"), "x0");

    if (j.contains("xi")) {
      const json& xi = j.at("xi");
      const std::string type = xi.at("type").get<std::string>();
      if (type == "zero") {
        spec.init.kind = InitialLaw::Kind::kZero;
      } else if (type == "point_mass") {
        spec.init.kind = InitialLaw::Kind::kPointMass;
        spec.init.xi_value = to_vector(xi.at("value"), "xi.value");
      } else if (type == "gaussian") {
        spec.init.kind = InitialLaw::Kind::kGaussian;
        spec.init.xi_value = to_vector(xi.at("mean"), "xi.mean");
        spec.init.xi_cov = to_matrix(xi.at("cov"), "xi.cov");
      } else {
        throw ConfigError("xi.type must be zero, point_mass or gaussian");
      }
      if (xi.contains("convergence"))
        spec.init.convergence = xi.at("convergence").get<std::string>();
    }

    try {
      spec.surface = Surface(Expression::parse(j.at("surface").get<std::string>()));
    } catch (const ParseError& e) {
      throw ConfigError(std::string("in surface: ") + e.what());
    }

    spec.bbox_lo = to_vector(j.at("bbox").at("lo"), "bbox.lo");
    spec.bbox_hi = to_vector(j.at("bbox").at("hi"), "bbox.hi");
    spec.t_max = j.at("t_max").get<double>();

    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("problem file: ") + e.what());
  }
}

ProblemSpec load_problem_file(const std::string& path) {
  try {
    return parse_problem_json(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(e.what()) + " [" + path + "]");
  }
}

OneDProblem parse_one_d_json(const std::string& text) {
  const json j = parse_json(text);
  try {
    Expression b, sigma;
    try {
      b = Expression::parse(j.at("b").get<std::string>());
      sigma = Expression::parse(j.at("sigma").get<std::string>());
    } catch (const ParseError& e) {
      throw ConfigError(std::string("in 1-d field: ") + e.what());
    }
    return OneDProblem(std::move(b), std::move(sigma), j.at("a1").get<double>(),
                       j.at("a2").get<double>(), j.at("x0").get<double>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("1-d problem file: ") + e.what());
  }
}

OneDProblem load_one_d_file(const std::string& path) {
  try {
    return parse_one_d_json(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(e.what()) + " [" + path + "]");
  }
}

}  // namespace exitlim

#include "occ/scenario_io.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "occ/errors.hpp"

namespace occ {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError("scenario " + where + ": " + what);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

std::uint64_t unsigned_integer(const json& j, const std::string& where) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    fail(where, "expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<int>();
}

const json& member(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(where, std::string("missing required field '") + key + "'");
  return *it;
}

const json* optional(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

template <typename T, typename F>
std::vector<T> list(const json& j, const std::string& where, F&& item) {
  if (!j.is_array()) fail(where, "expected an array");
  std::vector<T> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(item(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

std::vector<MatrixXd> matrices(const json& j, const std::string& where) {
  return list<MatrixXd>(j, where, [](const json& e, const std::string& w) { return matrix_from_json(e, w); });
}

std::vector<VectorXd> vectors(const json& j, const std::string& where) {
  return list<VectorXd>(j, where, [](const json& e, const std::string& w) { return vector_from_json(e, w); });
}

std::vector<double> numbers(const json& j, const std::string& where) {
  return list<double>(j, where, [](const json& e, const std::string& w) { return number(e, w); });
}

json matrices_json(const std::vector<MatrixXd>& ms) {
  json a = json::array();
  for (const auto& m : ms) a.push_back(matrix_to_json(m));
  return a;
}

json vectors_json(const std::vector<VectorXd>& vs) {
  json a = json::array();
  for (const auto& v : vs) a.push_back(vector_to_json(v));
  return a;
}

std::string line_context(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a non-empty array of rows");
  if (!j[0].is_array()) fail(where, "expected rows as arrays");
  const std::size_t cols = j[0].size();
  MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string w = where + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols) fail(w, "rows must all have " + std::to_string(cols) + " entries");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], w);
    }
  }
  return m;
}

json vector_to_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

VectorXd vector_from_json(const json& j, const std::string& where) {
  const std::vector<double> xs = numbers(j, where);
  return Eigen::Map<const VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) fail("root", "expected an object");
  Scenario s;

  const json& g = member(j, "graph", "root");
  const int n = integer(member(g, "n", "graph"), "graph.n");
  const int m = integer(member(g, "m", "graph"), "graph.m");
  std::vector<Edge> edges = list<Edge>(member(g, "edges", "graph"), "graph.edges",
                                       [](const json& e, const std::string& w) {
                                         Edge edge;
                                         edge.from = integer(member(e, "from", w), w + ".from");
                                         edge.to = integer(member(e, "to", w), w + ".to");
                                         if (const json* wt = optional(e, "weight")) {
                                           edge.weight = number(*wt, w + ".weight");
                                         }
                                         return edge;
                                       });
  try {
    s.graph = build_graph(n, m, std::move(edges));
  } catch (const ValidationError& e) {
    fail("graph", e.what());
  }

  const json& l = member(j, "leader", "root");
  s.leader.S = matrix_from_json(member(l, "S", "leader"), "leader.S");
  s.leader.D = matrix_from_json(member(l, "D", "leader"), "leader.D");
  s.leader_initial = vectors(member(l, "initial_states", "leader"), "leader.initial_states");

  const json& fs = member(j, "followers", "root");
  if (!fs.is_array()) fail("followers", "expected an array");
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const std::string w = "followers[" + std::to_string(i) + "]";
    FollowerModel f;
    f.A = matrix_from_json(member(fs[i], "A", w), w + ".A");
    f.B = matrix_from_json(member(fs[i], "B", w), w + ".B");
    f.C = matrix_from_json(member(fs[i], "C", w), w + ".C");
    s.followers.push_back(f);
    if (const json* x0 = optional(fs[i], "initial_state")) {
      s.follower_initial.push_back(vector_from_json(*x0, w + ".initial_state"));
    }
  }
  if (!s.follower_initial.empty() && s.follower_initial.size() != s.followers.size()) {
    fail("followers", "initial_state must be given for all followers or none");
  }
  const std::size_t nf = s.followers.size();

  // Optional sections: defaults mu = 1, E = I, R = I, Q = I, W = I, gamma = 0.01.
  auto& o = s.observers;
  const json* oj = optional(j, "observers");
  auto get_or = [](const json* sec, const char* key) -> const json* {
    return sec ? optional(*sec, key) : nullptr;
  };
  if (const json* v = get_or(oj, "mu")) o.mu = numbers(*v, "observers.mu");
  else o.mu.assign(nf, 1.0);
  if (const json* v = get_or(oj, "E")) o.E = matrices(*v, "observers.E");
  else for (const auto& f : s.followers) o.E.push_back(MatrixXd::Identity(f.states(), f.states()));
  if (const json* v = get_or(oj, "R")) o.R = matrices(*v, "observers.R");
  else for (const auto& f : s.followers) o.R.push_back(MatrixXd::Identity(f.outputs(), f.outputs()));
  if (const json* v = get_or(oj, "beta")) o.beta = number(*v, "observers.beta");
  if (const json* v = get_or(oj, "beta1")) o.beta1 = number(*v, "observers.beta1");
  if (const json* v = get_or(oj, "beta2")) o.beta2 = number(*v, "observers.beta2");
  if (const json* v = get_or(oj, "beta3")) o.beta3 = number(*v, "observers.beta3");
  if (const json* v = get_or(oj, "kind")) {
    const std::string kind = v->is_string() ? v->get<std::string>() : "";
    if (kind == "adaptive") o.kind = LeaderObserverKind::Adaptive;
    else if (kind == "static") o.kind = LeaderObserverKind::Static;
    else fail("observers.kind", "expected \"adaptive\" or \"static\"");
  }
  if (const json* init = get_or(oj, "initial")) {
    if (const json* v = optional(*init, "xi")) o.initial.xi = vectors(*v, "observers.initial.xi");
    if (const json* v = optional(*init, "eta")) o.initial.eta = vectors(*v, "observers.initial.eta");
    if (const json* v = optional(*init, "S")) o.initial.S = matrices(*v, "observers.initial.S");
    if (const json* v = optional(*init, "D")) o.initial.D = matrices(*v, "observers.initial.D");
  }

  auto& wt = s.weights;
  const json* wj = optional(j, "weights");
  if (const json* v = get_or(wj, "Q")) wt.Q = matrices(*v, "weights.Q");
  else for (const auto& f : s.followers) wt.Q.push_back(MatrixXd::Identity(f.outputs(), f.outputs()));
  if (const json* v = get_or(wj, "W")) wt.W = matrices(*v, "weights.W");
  else for (const auto& f : s.followers) wt.W.push_back(MatrixXd::Identity(f.inputs(), f.inputs()));
  if (const json* v = get_or(wj, "gamma")) wt.gamma = numbers(*v, "weights.gamma");
  else wt.gamma.assign(nf, 0.01);

  if (const json* sj = optional(j, "sim")) {
    if (const json* v = optional(*sj, "h")) s.sim.h = number(*v, "sim.h");
    if (const json* v = optional(*sj, "t_final")) s.sim.t_final = number(*v, "sim.t_final");
    if (const json* v = optional(*sj, "seed")) s.sim.seed = unsigned_integer(*v, "sim.seed");
    if (const json* v = optional(*sj, "log_every")) s.sim.log_every = integer(*v, "sim.log_every");
  }

  if (const json* lj = optional(j, "learner")) {
    auto& ls = s.learner;
    if (const json* v = optional(*lj, "T")) ls.T = number(*v, "learner.T");
    if (const json* v = optional(*lj, "samples")) {
      ls.samples = list<int>(*v, "learner.samples",
                             [](const json& e, const std::string& w) { return integer(e, w); });
    }
    if (const json* v = optional(*lj, "tau")) ls.tau = number(*v, "learner.tau");
    if (const json* v = optional(*lj, "max_iter")) ls.max_iter = integer(*v, "learner.max_iter");
    if (const json* v = optional(*lj, "gate")) ls.gate = number(*v, "learner.gate");
    if (const json* nj = optional(*lj, "noise")) {
      if (const json* v = optional(*nj, "amplitude")) ls.noise.amplitude = number(*v, "learner.noise.amplitude");
      if (const json* v = optional(*nj, "seed")) ls.noise.seed = unsigned_integer(*v, "learner.noise.seed");
    }
    if (const json* v = optional(*lj, "K0")) ls.K0 = matrices(*v, "learner.K0");
  }

  if (const json* cj = optional(j, "control")) {
    if (const json* v = optional(*cj, "feedforward")) {
      const std::string mode = v->is_string() ? v->get<std::string>() : "";
      if (mode == "regulator") s.feedforward = FeedforwardMode::Regulator;
      else if (mode == "optimal") s.feedforward = FeedforwardMode::Optimal;
      else fail("control.feedforward", "expected \"regulator\" or \"optimal\"");
    }
  }

  check_scenario(s);
  return s;
}

json scenario_to_json(const Scenario& s) {
  json j;
  json edges = json::array();
  for (const auto& e : s.graph.edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"weight", e.weight}});
  j["graph"] = {{"n", s.graph.n_followers}, {"m", s.graph.m_leaders}, {"edges", edges}};
  j["leader"] = {{"S", matrix_to_json(s.leader.S)},
                 {"D", matrix_to_json(s.leader.D)},
                 {"initial_states", vectors_json(s.leader_initial)}};
  json fs = json::array();
  for (std::size_t i = 0; i < s.followers.size(); ++i) {
    const auto& f = s.followers[i];
    json fj = {{"A", matrix_to_json(f.A)}, {"B", matrix_to_json(f.B)}, {"C", matrix_to_json(f.C)}};
    if (!s.follower_initial.empty()) fj["initial_state"] = vector_to_json(s.follower_initial[i]);
    fs.push_back(fj);
  }
  j["followers"] = fs;

  const auto& o = s.observers;
  json oj = {{"kind", o.kind == LeaderObserverKind::Adaptive ? "adaptive" : "static"},
             {"mu", o.mu},
             {"E", matrices_json(o.E)},
             {"R", matrices_json(o.R)},
             {"beta", o.beta},
             {"beta1", o.beta1},
             {"beta2", o.beta2},
             {"beta3", o.beta3}};
  json init = json::object();
  if (!o.initial.xi.empty()) init["xi"] = vectors_json(o.initial.xi);
  if (!o.initial.eta.empty()) init["eta"] = vectors_json(o.initial.eta);
  if (!o.initial.S.empty()) init["S"] = matrices_json(o.initial.S);
  if (!o.initial.D.empty()) init["D"] = matrices_json(o.initial.D);
  if (!init.empty()) oj["initial"] = init;
  j["observers"] = oj;

  j["weights"] = {{"Q", matrices_json(s.weights.Q)},
                  {"W", matrices_json(s.weights.W)},
                  {"gamma", s.weights.gamma}};
  j["sim"] = {{"h", s.sim.h}, {"t_final", s.sim.t_final}, {"seed", s.sim.seed}, {"log_every", s.sim.log_every}};
  const auto& l = s.learner;
  json lj = {{"T", l.T},
             {"tau", l.tau},
             {"max_iter", l.max_iter},
             {"gate", l.gate},
             {"noise", {{"amplitude", l.noise.amplitude}, {"seed", l.noise.seed}}}};
  if (!l.samples.empty()) lj["samples"] = l.samples;
  if (!l.K0.empty()) lj["K0"] = matrices_json(l.K0);
  j["learner"] = lj;
  j["control"] = {{"feedforward", s.feedforward == FeedforwardMode::Optimal ? "optimal" : "regulator"}};
  return j;
}

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("scenario parse error at " + line_context(text, e.byte > 0 ? e.byte - 1 : 0) +
                          ": " + e.what());
  }
  return scenario_from_json(j);
}

std::string serialize_scenario(const Scenario& s) {
  // Pretty-print, then put each numeric row on one line.
  static const std::regex row(R"(\[\s*(-?[0-9][0-9.eE+-]*(?:,\s*-?[0-9][0-9.eE+-]*)*)\s*\])");
  static const std::regex gap(R"(,\s+)");
  std::string text = scenario_to_json(s).dump(2);
  std::string out;
  auto last = text.cbegin();
  for (std::sregex_iterator it(text.begin(), text.end(), row), end; it != end; ++it) {
    out.append(last, (*it)[0].first);
    out += "[" + std::regex_replace((*it)[1].str(), gap, ", ") + "]";
    last = (*it)[0].second;
  }
  out.append(last, text.cend());
  return out + "\n";
}

Scenario load_scenario(const std::string& path) {
  if (path == "builtin:paper") return paper_scenario();
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace occ

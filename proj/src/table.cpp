#include "oplab/table.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace oplab {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double extra_or_zero(const TableRow& r, const std::string& key, bool* present = nullptr) {
  for (const auto& [k, v] : r.extras)
    if (k == key) {
      if (present) *present = true;
      return v;
    }
  if (present) *present = false;
  return 0.0;
}

}  // namespace

std::vector<std::string> ConvergenceTable::extra_keys() const {
  std::vector<std::string> keys;
  for (const auto& r : rows)
    for (const auto& [k, v] : r.extras)
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  return keys;
}

std::string emit_to_string(const ConvergenceTable& t, EmitFormat format) {
  std::ostringstream os;
  const auto extras = t.extra_keys();

  if (format == EmitFormat::csv) {
    os << "scenario_hash,level,h,method,iters,residual,mass_lambda,tv_mu,tv_mu_plus,"
          "tv_mu_minus,bound_slack,u_max_abs,lq_norm,w1q_seminorm,contact_nodes,"
          "compl_residual";
    for (const auto& k : extras) os << "," << k;
    os << "\n";
    for (const auto& r : t.rows) {
      os << t.scenario_hash << "," << r.level << "," << fmt(r.h) << "," << r.method
         << "," << r.iters << "," << fmt(r.residual) << "," << fmt(r.mass_lambda) << ","
         << fmt(r.tv_mu) << "," << fmt(r.tv_mu_plus) << "," << fmt(r.tv_mu_minus) << ","
         << fmt(r.bound_slack) << "," << fmt(r.u_max_abs) << "," << fmt(r.lq_norm) << ","
         << fmt(r.w1q_seminorm) << "," << r.contact_nodes << "," << fmt(r.compl_residual);
      for (const auto& k : extras) os << "," << fmt(extra_or_zero(r, k));
      os << "\n";
    }
    return os.str();
  }

  if (format == EmitFormat::json_lines) {
    for (const auto& r : t.rows) {
      nlohmann::ordered_json j;
      j["scenario_hash"] = t.scenario_hash;
      j["level"] = r.level;
      j["h"] = r.h;
      j["method"] = r.method;
      j["iters"] = r.iters;
      j["residual"] = r.residual;
      j["mass_lambda"] = r.mass_lambda;
      j["tv_mu"] = r.tv_mu;
      j["tv_mu_plus"] = r.tv_mu_plus;
      j["tv_mu_minus"] = r.tv_mu_minus;
      j["bound_slack"] = r.bound_slack;
      j["u_max_abs"] = r.u_max_abs;
      j["lq_norm"] = r.lq_norm;
      j["w1q_seminorm"] = r.w1q_seminorm;
      j["contact_nodes"] = r.contact_nodes;
      j["compl_residual"] = r.compl_residual;
      for (const auto& [k, v] : r.extras) j[k] = v;
      os << j.dump() << "\n";
    }
    return os.str();
  }

  // plot-data: per tracked quantity, (level, value) pairs, blank-line blocks
  struct Quantity {
    const char* name;
    double (*get)(const TableRow&);
  };
  static const Quantity quantities[] = {
      {"mass_lambda", [](const TableRow& r) { return r.mass_lambda; }},
      {"tv_mu_minus", [](const TableRow& r) { return r.tv_mu_minus; }},
      {"u_max_abs", [](const TableRow& r) { return r.u_max_abs; }},
      {"lq_norm", [](const TableRow& r) { return r.lq_norm; }},
      {"w1q_seminorm", [](const TableRow& r) { return r.w1q_seminorm; }},
      {"contact_nodes",
       [](const TableRow& r) { return static_cast<double>(r.contact_nodes); }},
  };
  os << "# scenario " << t.scenario_hash << "\n";
  for (const auto& qy : quantities) {
    os << "\n# " << qy.name << "\n";
    for (const auto& r : t.rows) os << r.level << " " << fmt(qy.get(r)) << "\n";
  }
  for (const auto& k : extras) {
    os << "\n# " << k << "\n";
    for (const auto& r : t.rows) os << r.level << " " << fmt(extra_or_zero(r, k)) << "\n";
  }
  return os.str();
}

void emit(const ConvergenceTable& table, EmitFormat format, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open output file " + path);
  f << emit_to_string(table, format);
  if (!f) throw IoError("failed writing " + path);
}

ConvergenceTable read_json_lines(const std::string& text) {
  ConvergenceTable t;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::ordered_json::parse(line);
    TableRow r;
    t.scenario_hash = j.at("scenario_hash").get<std::string>();
    r.level = j.at("level").get<int>();
    r.h = j.at("h").get<double>();
    r.method = j.at("method").get<std::string>();
    r.iters = j.at("iters").get<Index>();
    r.residual = j.at("residual").get<double>();
    r.mass_lambda = j.at("mass_lambda").get<double>();
    r.tv_mu = j.at("tv_mu").get<double>();
    r.tv_mu_plus = j.at("tv_mu_plus").get<double>();
    r.tv_mu_minus = j.at("tv_mu_minus").get<double>();
    r.bound_slack = j.at("bound_slack").get<double>();
    r.u_max_abs = j.at("u_max_abs").get<double>();
    r.lq_norm = j.at("lq_norm").get<double>();
    r.w1q_seminorm = j.at("w1q_seminorm").get<double>();
    r.contact_nodes = j.at("contact_nodes").get<Index>();
    r.compl_residual = j.at("compl_residual").get<double>();
    static const char* known[] = {
        "scenario_hash", "level", "h", "method", "iters", "residual", "mass_lambda",
        "tv_mu", "tv_mu_plus", "tv_mu_minus", "bound_slack", "u_max_abs", "lq_norm",
        "w1q_seminorm", "contact_nodes", "compl_residual"};
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool is_known = false;
      for (const char* k : known)
        if (it.key() == k) is_known = true;
      if (!is_known) r.extras.emplace_back(it.key(), it.value().get<double>());
    }
    t.rows.push_back(std::move(r));
  }
  return t;
}

}  // namespace oplab

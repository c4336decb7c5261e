#include <edgemarket/io.hpp>

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace edgemarket::io {

namespace {

using nlohmann::json;

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(m.row(i).transpose()));
  return rows;
}

// null (how non-finite values are written) reads back as NaN.
double number(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw IoError("expected a number, got " + j.dump());
  return j.get<double>();
}

Eigen::VectorXd to_vec(const json& j, const char* field) {
  if (!j.is_array()) throw IoError(std::string("field '") + field + "' must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = number(j[k]);
  return v;
}

Eigen::MatrixXd to_mat(const json& j, const char* field) {
  if (!j.is_array()) throw IoError(std::string("field '") + field + "' must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw IoError(std::string("field '") + field + "' has ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = number(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

json parse(std::string_view text) {
  try {
    json doc = json::parse(text.begin(), text.end());
    if (!doc.is_object()) throw IoError("expected a JSON object");
    return doc;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed JSON: ") + e.what());
  }
}

const json& field(const json& doc, const char* name) {
  const auto it = doc.find(name);
  if (it == doc.end()) throw IoError(std::string("missing field '") + name + "'");
  return *it;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string to_json(const MarketInstance& instance) {
  json doc;
  doc["label"] = instance.label();
  doc["budgets"] = vec(instance.budgets());
  doc["valuations"] = mat(instance.valuations());
  if (!instance.raw_capacity().empty()) doc["raw_capacity"] = instance.raw_capacity();
  return doc.dump(2) + "\n";
}

MarketInstance instance_from_json(std::string_view text) {
  const json doc = parse(text);
  std::string label;
  if (const auto it = doc.find("label"); it != doc.end() && it->is_string()) label = *it;
  std::vector<double> capacity;
  if (const auto it = doc.find("raw_capacity"); it != doc.end()) {
    const Eigen::VectorXd c = to_vec(*it, "raw_capacity");
    capacity.assign(c.data(), c.data() + c.size());
  }
  return MarketInstance(to_vec(field(doc, "budgets"), "budgets"),
                        to_mat(field(doc, "valuations"), "valuations"), std::move(label),
                        std::move(capacity));
}

std::string to_json(const EcScenario& s) {
  json doc;
  doc["generator"] = s.generator;
  doc["seed"] = s.seed;
  doc["area_km"] = s.area_km;
  doc["delay_per_km"] = s.delay_per_km;
  doc["en_positions"] = mat(s.en_positions);
  doc["service_positions"] = mat(s.service_positions);
  doc["mu"] = mat(s.mu);
  doc["t_max"] = vec(s.t_max);
  doc["net_delay"] = mat(s.net_delay);
  doc["r"] = vec(s.r);
  doc["raw_capacity"] = vec(s.raw_capacity);
  doc["budgets"] = vec(s.budgets);
  return doc.dump(2) + "\n";
}

EcScenario scenario_from_json(std::string_view text) {
  const json doc = parse(text);
  EcScenario s;
  try {
    if (const auto it = doc.find("generator"); it != doc.end()) s.generator = it->get<std::string>();
    if (const auto it = doc.find("seed"); it != doc.end()) s.seed = it->get<std::uint64_t>();
    if (const auto it = doc.find("area_km"); it != doc.end()) s.area_km = number(*it);
    if (const auto it = doc.find("delay_per_km"); it != doc.end()) s.delay_per_km = number(*it);
  } catch (const json::exception& e) {
    throw IoError(std::string("bad scenario metadata: ") + e.what());
  }
  s.en_positions = to_mat(field(doc, "en_positions"), "en_positions");
  s.service_positions = to_mat(field(doc, "service_positions"), "service_positions");
  s.mu = to_mat(field(doc, "mu"), "mu");
  s.t_max = to_vec(field(doc, "t_max"), "t_max");
  s.net_delay = to_mat(field(doc, "net_delay"), "net_delay");
  s.r = to_vec(field(doc, "r"), "r");
  s.raw_capacity = to_vec(field(doc, "raw_capacity"), "raw_capacity");
  if (const auto it = doc.find("budgets"); it != doc.end()) {
    s.budgets = to_vec(*it, "budgets");
  } else {
    const auto n = s.mu.rows();
    s.budgets = Eigen::VectorXd::Constant(n, n > 0 ? 1.0 / static_cast<double>(n) : 0.0);
  }
  validate(s);
  return s;
}

std::string to_json(const EquilibriumSolution& sol) {
  json doc;
  doc["method"] = std::string(to_string(sol.method));
  doc["prices"] = vec(sol.prices.p);
  doc["allocation"] = mat(sol.allocation.x);
  doc["utilities"] = vec(sol.utilities);
  doc["surpluses"] = vec(sol.surpluses);
  doc["iterations"] = sol.iterations;
  doc["converged"] = sol.converged;
  return doc.dump(2) + "\n";
}

EquilibriumSolution solution_from_json(std::string_view text) {
  const json doc = parse(text);
  EquilibriumSolution sol;
  sol.prices.p = to_vec(field(doc, "prices"), "prices");
  sol.allocation.x = to_mat(field(doc, "allocation"), "allocation");
  sol.utilities = to_vec(field(doc, "utilities"), "utilities");
  sol.surpluses = to_vec(field(doc, "surpluses"), "surpluses");
  try {
    sol.iterations = field(doc, "iterations").get<int>();
    sol.converged = field(doc, "converged").get<bool>();
    if (const auto it = doc.find("method"); it != doc.end()) {
      const auto method = parse_solve_method(it->get<std::string>());
      if (!method) throw IoError("unknown method " + it->dump());
      sol.method = *method;
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("bad solution metadata: ") + e.what());
  }
  return sol;
}

std::string to_json(const CertificateReport& r) {
  json doc;
  doc["max_kkt_residual"] = r.max_kkt_residual;
  doc["duality_gap"] = r.duality_gap;
  doc["clearing_slack"] = r.clearing_slack;
  doc["budget_slack"] = r.budget_slack;
  doc["mbb_violation"] = r.mbb_violation;
  return doc.dump(2) + "\n";
}

std::string to_json(const FairnessReport& r) {
  json doc;
  doc["ef_index"] = r.ef_index;
  doc["proportionality_ratios"] = vec(r.proportionality_ratios);
  doc["sharing_incentive_margins"] = vec(r.sharing_incentive_margins);
  doc["budget_exhaustion_slacks"] = vec(r.budget_exhaustion_slacks);
  doc["pareto_certified"] = r.pareto_certified;
  doc["pareto_gap"] = r.pareto_gap;
  return doc.dump(2) + "\n";
}

void write_trace_csv(std::ostream& out, const DynamicsTrace& trace) {
  const Eigen::Index m = trace.prices.empty() ? 0 : trace.prices.front().size();
  out << "iteration";
  for (Eigen::Index j = 1; j <= m; ++j) out << ",p_" << j;
  out << ",residual\n";
  for (std::size_t k = 0; k < trace.size(); ++k) {
    out << trace.iterations[k];
    for (Eigen::Index j = 0; j < m; ++j) out << ',' << format_double(trace.prices[k](j));
    out << ',' << format_double(trace.residuals[k]) << '\n';
  }
}

void write_budget_sweep_csv(std::ostream& out, const std::vector<BudgetSweepRow>& rows) {
  const Eigen::Index m = rows.empty() ? 0 : rows.front().prices.size();
  const Eigen::Index n = rows.empty() ? 0 : rows.front().utilities.size();
  out << "scale";
  for (Eigen::Index j = 1; j <= m; ++j) out << ",p_" << j;
  for (Eigen::Index i = 1; i <= n; ++i) out << ",u_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) out << ",s_" << i;
  out << '\n';
  for (const auto& row : rows) {
    out << format_double(row.scale);
    for (Eigen::Index j = 0; j < m; ++j) out << ',' << format_double(row.prices(j));
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(row.utilities(i));
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(row.surpluses(i));
    out << '\n';
  }
}

void write_comparison_csv(std::ostream& out, const std::vector<SchemeResult>& rows) {
  out << "scheme,total_utility,min_utility,ef_index,min_prop_ratio,min_si_margin\n";
  for (const auto& row : rows) {
    out << row.scheme << ',' << format_double(row.total_utility()) << ','
        << format_double(row.min_utility()) << ',' << format_double(row.report.ef_index) << ','
        << format_double(row.report.proportionality_ratios.minCoeff()) << ','
        << format_double(row.report.sharing_incentive_margins.minCoeff()) << '\n';
  }
}

}  // namespace edgemarket::io

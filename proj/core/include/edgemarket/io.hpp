#pragma once

#include <edgemarket/baselines.hpp>
#include <edgemarket/market_model.hpp>
#include <edgemarket/netprofit.hpp>
#include <edgemarket/scenario.hpp>
#include <edgemarket/trace.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace edgemarket::io {

/// 17 significant digits, enough to round-trip any double.
[[nodiscard]] std::string format_double(double value);

/// Whole-file read/write; both throw IoError.
[[nodiscard]] std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view text);

// JSON documents. Parsers throw IoError on malformed text and let the
// domain constructors reject invalid values.

/// {"label", "budgets", "valuations"} plus optional "raw_capacity".
[[nodiscard]] std::string to_json(const MarketInstance& instance);
[[nodiscard]] MarketInstance instance_from_json(std::string_view text);

[[nodiscard]] std::string to_json(const EcScenario& scenario);
[[nodiscard]] EcScenario scenario_from_json(std::string_view text);

/// {"method", "prices", "allocation", "utilities", "surpluses", "iterations", "converged"}.
[[nodiscard]] std::string to_json(const EquilibriumSolution& solution);
[[nodiscard]] EquilibriumSolution solution_from_json(std::string_view text);

[[nodiscard]] std::string to_json(const CertificateReport& report);
[[nodiscard]] std::string to_json(const FairnessReport& report);

// CSV tables, header row first.

/// iteration, p_1..p_M, residual.
void write_trace_csv(std::ostream& out, const DynamicsTrace& trace);
/// scale, p_1..p_M, u_1..u_N, s_1..s_N.
void write_budget_sweep_csv(std::ostream& out, const std::vector<BudgetSweepRow>& rows);
/// scheme, total_utility, min_utility, ef_index, min_prop_ratio, min_si_margin.
void write_comparison_csv(std::ostream& out, const std::vector<SchemeResult>& rows);

}  // namespace edgemarket::io

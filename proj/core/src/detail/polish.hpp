#pragma once

#include "detail/certificate.hpp"

#include <edgemarket/market_model.hpp>

#include <optional>

namespace edgemarket::detail {

/// Certificate level a polished solution must reach to be accepted.
inline constexpr double kPolishAcceptTol = 1e-9;

/// Turns an approximate equilibrium into an exact one.
///
/// `spending(i, j)` is the money service i (approximately) spends on EN j and
/// `surplus(i)` its unspent money (net-profit market only). For a sequence of
/// support thresholds, the heaviest spanning forest of the support graph fixes
/// exact prices (bang-per-buck equalities along forest edges, plus either the
/// component budget balance or the unit price of money). A max-flow on the
/// exact MBB graph at those prices then recovers an allocation, starting from
/// the approximate spending so that ties keep the caller's allocation where
/// possible. Returns the first candidate whose certificate is below
/// kPolishAcceptTol, or nullopt.
[[nodiscard]] std::optional<EquilibriumSolution> polish_equilibrium(
    const MarketInstance& instance, const Eigen::MatrixXd& spending,
    const Eigen::VectorXd& surplus, MarketKind kind);

}  // namespace edgemarket::detail

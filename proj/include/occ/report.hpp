#pragma once

// Output writers: trajectory CSV, gain report and learning log.

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "occ/sim.hpp"

namespace occ {

/// Column names: t, then per follower i: y, yhat, y0, e (q each), u (p_i),
/// err_xi, err_S, err_D, err_eta.
std::vector<std::string> csv_header(const Scenario& s);

/// One row per logged sample, numbers with 9 significant digits.
void write_trajectory_csv(std::ostream& out, const Scenario& s, const Trajectory& traj);

/// Per-iteration learned gains: follower, iteration, condition, gain entries.
void write_learning_log(std::ostream& out, const LearningOutcome& lo);

nlohmann::json gain_report(const Scenario& s, const GainSet& g);

/// Human-readable summary of the synthesized gains.
void print_gain_table(std::ostream& out, const GainSet& g);

std::string format_number(double v);

}  // namespace occ

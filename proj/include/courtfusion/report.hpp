#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "courtfusion/geometry.hpp"
#include "courtfusion/reid.hpp"
#include "courtfusion/sim.hpp"

namespace courtfusion::report {

using nlohmann::json;

// frame_index,track_id,world_x_m,world_y_m,state
void write_trajectories_csv(std::ostream& out, const std::vector<sim::TrajectoryRow>& rows);
std::vector<sim::TrajectoryRow> read_trajectories_csv(std::istream& in);

// frame_index,track_id,player_id
void write_bindings_csv(std::ostream& out, const std::vector<sim::BindingRow>& rows);
std::vector<sim::BindingRow> read_bindings_csv(std::istream& in);

json registry_to_json(const reid::PlayerRegistry& reg, bool with_features);
json eval_report_to_json(const sim::EvalReport& r);

/// Court diagram with one colored polyline per id. Rows are grouped by the
/// player bound to their track when bindings are given, else by track id.
std::string render_court_svg(const std::vector<sim::TrajectoryRow>& rows,
                             const geometry::CourtModel& court,
                             const std::optional<std::vector<sim::BindingRow>>& bindings = std::nullopt);

/// Palette entry for an id; stable across runs.
const char* color_for_id(std::int64_t id);

}  // namespace courtfusion::report

#include "courtfusion/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "courtfusion/errors.hpp"

namespace courtfusion::report {

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <typename T>
T parse_number(const std::string& s, std::size_t lineno) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("CSV line " + std::to_string(lineno) + ": bad number '" + s + "'");
  return v;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

constexpr const char* kTrajectoryHeader = "frame_index,track_id,world_x_m,world_y_m,state";
constexpr const char* kBindingHeader = "frame_index,track_id,player_id";

constexpr const char* kPalette[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"};

}  // namespace

void write_trajectories_csv(std::ostream& out, const std::vector<sim::TrajectoryRow>& rows) {
  out << kTrajectoryHeader << '\n';
  for (const auto& r : rows)
    out << r.frame << ',' << r.track_id << ',' << shortest(r.world.x) << ',' << shortest(r.world.y)
        << ',' << tracker::to_string(r.state) << '\n';
}

std::vector<sim::TrajectoryRow> read_trajectories_csv(std::istream& in) {
  std::vector<sim::TrajectoryRow> rows;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kTrajectoryHeader) throw ParseError("trajectory CSV: unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() != 5)
      throw ParseError("trajectory CSV line " + std::to_string(lineno) + ": expected 5 columns");
    sim::TrajectoryRow r;
    r.frame = parse_number<std::int64_t>(cells[0], lineno);
    r.track_id = parse_number<std::int64_t>(cells[1], lineno);
    r.world = {parse_number<double>(cells[2], lineno), parse_number<double>(cells[3], lineno)};
    if (!std::isfinite(r.world.x) || !std::isfinite(r.world.y))
      throw ParseError("trajectory CSV line " + std::to_string(lineno) + ": non-finite coordinate");
    if (cells[4] == "active")
      r.state = tracker::TrackStatus::active;
    else if (cells[4] == "exited")
      r.state = tracker::TrackStatus::exited;
    else
      throw ParseError("trajectory CSV line " + std::to_string(lineno) + ": bad state '" + cells[4] + "'");
    rows.push_back(r);
  }
  return rows;
}

void write_bindings_csv(std::ostream& out, const std::vector<sim::BindingRow>& rows) {
  out << kBindingHeader << '\n';
  for (const auto& r : rows) out << r.frame << ',' << r.track_id << ',' << r.player_id << '\n';
}

std::vector<sim::BindingRow> read_bindings_csv(std::istream& in) {
  std::vector<sim::BindingRow> rows;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kBindingHeader) throw ParseError("binding CSV: unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() != 3)
      throw ParseError("binding CSV line " + std::to_string(lineno) + ": expected 3 columns");
    rows.push_back({parse_number<std::int64_t>(cells[0], lineno),
                    parse_number<std::int64_t>(cells[1], lineno),
                    parse_number<std::int64_t>(cells[2], lineno)});
  }
  return rows;
}

json registry_to_json(const reid::PlayerRegistry& reg, bool with_features) {
  json arr = json::array();
  for (const auto& r : reg.records()) {
    json j{{"id", r.id},
           {"id_state", reid::to_string(r.state)},
           {"position", {r.position.x, r.position.y}}};
    j["track_id"] = r.track_id ? json(*r.track_id) : json(nullptr);
    if (with_features) j["feature"] = r.feature;
    arr.push_back(std::move(j));
  }
  return arr;
}

json eval_report_to_json(const sim::EvalReport& r) {
  return {{"id_switches", r.id_switches},
          {"reid_failures", r.reid_failures},
          {"trajectory_rmse", r.trajectory_rmse},
          {"frames_fully_correct", r.frames_fully_correct},
          {"frames", r.frames},
          {"players", r.players},
          {"max_registry_size", r.max_registry_size}};
}

const char* color_for_id(std::int64_t id) {
  constexpr std::int64_t n = sizeof(kPalette) / sizeof(kPalette[0]);
  return kPalette[((id % n) + n) % n];
}

std::string render_court_svg(const std::vector<sim::TrajectoryRow>& rows,
                             const geometry::CourtModel& court,
                             const std::optional<std::vector<sim::BindingRow>>& bindings) {
  constexpr double kScale = 40.0;  // px per meter
  constexpr double kPad = 30.0;    // px around the margin box, holds axis labels
  constexpr double kLegendW = 120.0;
  const double m = court.boundary_margin();
  const double min_x = -m, max_x = court.width() + m;
  const double min_y = -m, max_y = court.length() + m;
  const double plot_w = (max_x - min_x) * kScale;
  const double plot_h = (max_y - min_y) * kScale;
  const double view_w = plot_w + 2 * kPad + kLegendW;
  const double view_h = plot_h + 2 * kPad;

  // Near baseline (y = 0) at the bottom of the picture.
  auto sx = [&](double x) { return kPad + (std::clamp(x, min_x, max_x) - min_x) * kScale; };
  auto sy = [&](double y) { return kPad + (max_y - std::clamp(y, min_y, max_y)) * kScale; };

  std::map<tracker::TrackId, reid::PlayerId> owner;
  if (bindings)
    for (const auto& b : *bindings) owner.emplace(b.track_id, b.player_id);

  std::map<std::int64_t, std::vector<const sim::TrajectoryRow*>> groups;
  for (const auto& r : rows) {
    const auto it = owner.find(r.track_id);
    const std::int64_t key = bindings ? (it == owner.end() ? -1 - r.track_id : it->second) : r.track_id;
    groups[key].push_back(&r);
  }
  for (auto& [key, pts] : groups)
    std::stable_sort(pts.begin(), pts.end(),
                     [](const auto* a, const auto* b) { return a->frame < b->frame; });

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed3(view_w) << "\" height=\""
     << fixed3(view_h) << "\" viewBox=\"0 0 " << fixed3(view_w) << ' ' << fixed3(view_h) << "\">\n";
  os << "  <rect x=\"0\" y=\"0\" width=\"" << fixed3(view_w) << "\" height=\"" << fixed3(view_h)
     << "\" fill=\"#ffffff\"/>\n";
  os << "  <g id=\"court\" fill=\"none\" stroke=\"#2f6f3e\" stroke-width=\"2\">\n";
  os << "    <rect x=\"" << fixed3(sx(0)) << "\" y=\"" << fixed3(sy(court.length())) << "\" width=\""
     << fixed3(court.width() * kScale) << "\" height=\"" << fixed3(court.length() * kScale) << "\"/>\n";
  os << "    <line id=\"net\" x1=\"" << fixed3(sx(0)) << "\" y1=\"" << fixed3(sy(court.length() / 2))
     << "\" x2=\"" << fixed3(sx(court.width())) << "\" y2=\"" << fixed3(sy(court.length() / 2))
     << "\" stroke-dasharray=\"6 4\"/>\n";
  os << "  </g>\n";

  os << "  <g id=\"axes\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#444444\">\n";
  for (int x = 0; x <= static_cast<int>(court.width()); ++x)
    os << "    <text x=\"" << fixed3(sx(x)) << "\" y=\"" << fixed3(view_h - 8)
       << "\" text-anchor=\"middle\">" << x << " m</text>\n";
  for (int y = 0; y <= static_cast<int>(court.length()); ++y)
    os << "    <text x=\"4\" y=\"" << fixed3(sy(y) + 3) << "\">" << y << "</text>\n";
  os << "  </g>\n";

  os << "  <g id=\"trajectories\" fill=\"none\" stroke-width=\"2\">\n";
  for (const auto& [key, pts] : groups) {
    const char* color = color_for_id(key);
    os << "    <polyline data-id=\"" << key << "\" stroke=\"" << color << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i)
      os << (i ? " " : "") << fixed3(sx(pts[i]->world.x)) << ',' << fixed3(sy(pts[i]->world.y));
    if (pts.size() == 1) os << ' ' << fixed3(sx(pts[0]->world.x)) << ',' << fixed3(sy(pts[0]->world.y));
    os << "\"/>\n";
    os << "    <circle cx=\"" << fixed3(sx(pts.back()->world.x)) << "\" cy=\""
       << fixed3(sy(pts.back()->world.y)) << "\" r=\"4\" fill=\"" << color << "\"/>\n";
  }
  os << "  </g>\n";

  os << "  <g id=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  const double lx = plot_w + 2 * kPad;
  double ly = kPad;
  for (const auto& [key, pts] : groups) {
    if (ly + 16 > view_h) break;
    const std::string label =
        bindings ? (key >= 0 ? "player " + std::to_string(key) : "track " + std::to_string(-1 - key))
                 : "track " + std::to_string(key);
    os << "    <rect x=\"" << fixed3(lx) << "\" y=\"" << fixed3(ly) << "\" width=\"12\" height=\"12\" fill=\""
       << color_for_id(key) << "\"/>\n";
    os << "    <text x=\"" << fixed3(lx + 18) << "\" y=\"" << fixed3(ly + 10) << "\">" << label << "</text>\n";
    ly += 18;
  }
  os << "  </g>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace courtfusion::report

#include "courtfusion/io.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <sstream>

#include "courtfusion/errors.hpp"

namespace courtfusion::io {

namespace {

template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

geometry::Point2 point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParseError("expected an [x, y] pair");
  geometry::Point2 p{j[0].get<double>(), j[1].get<double>()};
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw ParseError("non-finite coordinate");
  return p;
}

json point_to_json(geometry::Point2 p) { return json::array({p.x, p.y}); }

geometry::Quad quad_from_json(const json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing \"") + key + "\"");
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != 4)
    throw ParseError(std::string("\"") + key + "\" must hold four [x, y] pairs");
  geometry::Quad q;
  for (int i = 0; i < 4; ++i) q[i] = point_from_json(a[i]);
  return q;
}

json quad_to_json(const geometry::Quad& q) {
  json a = json::array();
  for (const auto& p : q) a.push_back(point_to_json(p));
  return a;
}

json matrix_to_json(const geometry::Homography& h) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(json::array({h(r, 0), h(r, 1), h(r, 2)}));
  return rows;
}

std::vector<double> vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + " must be an array of numbers");
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_number()) throw ParseError(std::string(what) + " must be an array of numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("failed writing " + path.string());
}

json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

CornerPair corners_from_json(const json& j) {
  return guarded("calibration", [&] {
    if (!j.is_object()) throw ParseError("calibration must be a JSON object");
    return CornerPair{quad_from_json(j, "image_corners"), quad_from_json(j, "world_corners")};
  });
}

json calibration_to_json(const geometry::CameraCalibration& cal) {
  json j;
  j["image_corners"] = quad_to_json(cal.image_corners);
  j["world_corners"] = quad_to_json(cal.world_corners);
  j["to_world"] = matrix_to_json(cal.to_world);
  j["from_world"] = matrix_to_json(cal.from_world);
  return j;
}

geometry::CameraCalibration calibration_from_json(const json& j) {
  const CornerPair c = corners_from_json(j);
  return geometry::calibrate(c.image_corners, c.world_corners);
}

json hog_params_to_json(const features::HogParams& p) {
  return {{"window_w", p.window_w}, {"window_h", p.window_h}, {"cell", p.cell},
          {"block", p.block},       {"bins", p.bins},         {"clip", p.clip}};
}

features::HogParams hog_params_from_json(const json& j) {
  return guarded("HOG parameters", [&] {
    features::HogParams p;
    if (!j.is_object()) throw ParseError("HOG parameters must be a JSON object");
    p.window_w = value_or(j, "window_w", p.window_w);
    p.window_h = value_or(j, "window_h", p.window_h);
    p.cell = value_or(j, "cell", p.cell);
    p.block = value_or(j, "block", p.block);
    p.bins = value_or(j, "bins", p.bins);
    p.clip = value_or(j, "clip", p.clip);
    p.validate();
    return p;
  });
}

features::LinearSvmModel svm_model_from_json(const json& j) {
  return guarded("SVM model", [&] {
    if (!j.is_object()) throw ParseError("SVM model must be a JSON object");
    features::LinearSvmModel m;
    if (!j.contains("weights")) throw ParseError("SVM model lacks \"weights\"");
    m.weights = vector_from_json(j.at("weights"), "weights");
    m.bias = j.at("bias").get<double>();
    m.threshold = j.at("threshold").get<double>();
    if (j.contains("hog")) m.params = hog_params_from_json(j.at("hog"));
    if (m.weights.size() != m.params.descriptor_length()) {
      std::ostringstream os;
      os << "SVM model has " << m.weights.size() << " weights but its HOG layout needs "
         << m.params.descriptor_length();
      throw LengthMismatch(os.str());
    }
    return m;
  });
}

json svm_model_to_json(const features::LinearSvmModel& m) {
  return {{"weights", m.weights},
          {"bias", m.bias},
          {"threshold", m.threshold},
          {"hog", hog_params_to_json(m.params)}};
}

features::GrayImage read_pgm(std::istream& in) {
  auto next_token = [&]() {
    std::string tok;
    for (;;) {
      const int c = in.get();
      if (c == EOF) break;
      if (c == '#') {
        std::string ignored;
        std::getline(in, ignored);
        if (!tok.empty()) break;
        continue;
      }
      if (std::isspace(c)) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(static_cast<char>(c));
    }
    return tok;
  };
  auto next_int = [&](const char* what) {
    const std::string tok = next_token();
    try {
      std::size_t used = 0;
      const int v = std::stoi(tok, &used);
      if (used != tok.size()) throw ParseError("");
      return v;
    } catch (...) {
      throw ParseError(std::string("PGM: bad ") + what + " '" + tok + "'");
    }
  };

  if (next_token() != "P5") throw ParseError("PGM: expected binary P5 magic");
  const int w = next_int("width");
  const int h = next_int("height");
  const int maxval = next_int("maxval");
  if (w <= 0 || h <= 0) throw ParseError("PGM: dimensions must be positive");
  if (maxval != 255) throw ParseError("PGM: only 8-bit images with maxval 255 are supported");

  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw ParseError("PGM: truncated pixel data");
  std::vector<double> data(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) data[i] = raw[i] / 255.0;
  return features::GrayImage(w, h, std::move(data));
}

features::GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_pgm(in);
}

void write_pgm(std::ostream& out, const features::GrayImage& img) {
  out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  for (double v : img.data()) {
    const long q = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
    out.put(static_cast<char>(static_cast<unsigned char>(q)));
  }
}

sim::Overrides overrides_from_json(const json& j) {
  return guarded("config", [&] {
    if (!j.is_object()) throw ParseError("config must be a JSON object");
    sim::Overrides o;
    if (j.contains("gate_radius")) o.gate_radius = j.at("gate_radius").get<double>();
    if (j.contains("max_missed")) o.max_missed = j.at("max_missed").get<int>();
    if (j.contains("match_threshold")) o.match_threshold = j.at("match_threshold").get<double>();
    if (j.contains("pairing_gate")) o.pairing_gate = j.at("pairing_gate").get<double>();
    if (j.contains("noise_sigma")) o.noise_sigma = j.at("noise_sigma").get<double>();
    if (j.contains("feature_noise")) o.feature_noise = j.at("feature_noise").get<double>();
    if (j.contains("merge_distance")) o.merge_distance = j.at("merge_distance").get<double>();
    if (j.contains("seed")) o.seed = j.at("seed").get<std::uint64_t>();
    return o;
  });
}

sim::ScenarioSpec scenario_from_json(const json& j) {
  return guarded("scenario", [&] {
    if (!j.is_object()) throw ParseError("scenario must be a JSON object");
    sim::ScenarioSpec s;
    s.name = value_or<std::string>(j, "name", "scenario");

    const json court = j.value("court", json::object());
    s.court = geometry::CourtModel(value_or(court, "width", geometry::CourtModel::kDefaultWidth),
                                   value_or(court, "length", geometry::CourtModel::kDefaultLength),
                                   value_or(court, "boundary_margin", geometry::CourtModel::kDefaultMargin));

    auto camera = [&](const char* key) {
      if (!j.contains(key)) throw ParseError(std::string("scenario lacks \"") + key + "\"");
      json cam = j.at(key);
      if (!cam.contains("world_corners")) cam["world_corners"] = quad_to_json(s.court.corners());
      return calibration_from_json(cam);
    };
    s.top_cal = camera("top_camera");
    s.rear_cal = camera("rear_camera");

    s.fps = value_or(j, "fps", s.fps);
    s.duration = j.at("duration").get<double>();
    s.noise_sigma = value_or(j, "noise_sigma", s.noise_sigma);
    s.merge_distance = value_or(j, "merge_distance", s.merge_distance);
    s.feature_noise = value_or(j, "feature_noise", s.feature_noise);
    s.seed = value_or<std::uint64_t>(j, "seed", 0);

    if (j.contains("tracker")) {
      const json& t = j.at("tracker");
      s.tracker.gate_radius = value_or(t, "gate_radius", s.tracker.gate_radius);
      s.tracker.max_missed = value_or(t, "max_missed", s.tracker.max_missed);
      if (t.contains("min_correlation")) s.tracker.min_correlation = t.at("min_correlation").get<double>();
    }
    if (j.contains("reid")) {
      const json& r = j.at("reid");
      s.registry.match_threshold = value_or(r, "match_threshold", s.registry.match_threshold);
      s.registry.pairing_gate = value_or(r, "pairing_gate", s.registry.pairing_gate);
      s.registry.feature_update = value_or(r, "feature_update", s.registry.feature_update);
    }

    const features::HogParams hog =
        j.contains("appearance_hog") ? hog_params_from_json(j.at("appearance_hog")) : features::HogParams{};

    for (const auto& p : j.at("players")) {
      sim::MotionScript m;
      m.player_name = p.at("name").get<std::string>();
      for (const auto& w : p.at("waypoints")) {
        if (!w.is_array() || w.size() != 3) throw ParseError("waypoints must be [t, x, y] triples");
        m.waypoints.push_back({w[0].get<double>(), {w[1].get<double>(), w[2].get<double>()}});
      }
      if (p.contains("feature_basis")) {
        m.feature_basis = vector_from_json(p.at("feature_basis"), "feature_basis");
      } else if (p.contains("appearance")) {
        const json& a = p.at("appearance");
        sim::Appearance app;
        app.stripe_angle_deg = value_or(a, "stripe_angle_deg", app.stripe_angle_deg);
        app.stripe_period_px = value_or(a, "stripe_period_px", app.stripe_period_px);
        app.contrast = value_or(a, "contrast", app.contrast);
        const auto img = sim::render_appearance(app, hog.window_w, hog.window_h);
        m.feature_basis = features::hog(img, {0, 0, hog.window_w, hog.window_h}, hog).values;
      } else {
        throw ParseError("player " + m.player_name + " needs \"feature_basis\" or \"appearance\"");
      }
      s.players.push_back(std::move(m));
    }

    if (j.contains("exit_events"))
      for (const auto& e : j.at("exit_events"))
        s.exit_events.push_back(
            {e.at("player").get<std::string>(), e.at("t_exit").get<double>(), e.at("t_return").get<double>()});

    s.validate();
    return s;
  });
}

json frame_to_json(const sim::SimFrame& f) {
  json top = json::array();
  for (const auto& d : f.top_detections)
    top.push_back({{"box", {d.box.x, d.box.y, d.box.w, d.box.h}},
                   {"foot", point_to_json(d.foot_point)},
                   {"score", d.score}});
  json rear = json::array();
  for (const auto& o : f.rear_observations)
    rear.push_back({{"image", point_to_json(o.image_point)},
                    {"world", point_to_json(o.world_point)},
                    {"feature", o.feature}});
  json truth = json::array();
  for (const auto& t : f.truth)
    truth.push_back({{"player", t.player_name}, {"world", point_to_json(t.world)}, {"visible", t.visible}});
  return {{"frame", f.frame_index}, {"top", top}, {"rear", rear}, {"truth", truth}};
}

sim::SimFrame frame_from_json(const json& j) {
  return guarded("frame", [&] {
    sim::SimFrame f;
    f.frame_index = j.at("frame").get<std::int64_t>();
    for (const auto& d : j.at("top")) {
      const auto b = vector_from_json(d.at("box"), "box");
      if (b.size() != 4) throw ParseError("box must hold x, y, w, h");
      auto det = features::Detection::from_box({b[0], b[1], b[2], b[3]}, d.at("score").get<double>());
      if (d.contains("foot")) det.foot_point = point_from_json(d.at("foot"));
      f.top_detections.push_back(std::move(det));
    }
    for (const auto& o : j.at("rear"))
      f.rear_observations.push_back({vector_from_json(o.at("feature"), "feature"),
                                     point_from_json(o.at("image")), point_from_json(o.at("world"))});
    for (const auto& t : j.at("truth"))
      f.truth.push_back({t.at("player").get<std::string>(), point_from_json(t.at("world")),
                         t.at("visible").get<bool>()});
    return f;
  });
}

void write_frames(std::ostream& out, const std::vector<sim::SimFrame>& frames) {
  for (const auto& f : frames) out << frame_to_json(f).dump() << '\n';
}

std::vector<sim::SimFrame> read_frames(std::istream& in) {
  std::vector<sim::SimFrame> frames;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      frames.push_back(frame_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError("frames line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return frames;
}

}  // namespace courtfusion::io

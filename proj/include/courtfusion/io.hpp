#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "courtfusion/features.hpp"
#include "courtfusion/geometry.hpp"
#include "courtfusion/sim.hpp"

namespace courtfusion::io {

using nlohmann::json;

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
json read_json(const std::filesystem::path& path);

// Calibration file: {"image_corners": [[x,y] x4], "world_corners": [[x,y] x4]}
// in near-left, near-right, far-right, far-left order. Written files also
// carry "to_world" and "from_world" as 3x3 row arrays.
struct CornerPair {
  geometry::Quad image_corners;
  geometry::Quad world_corners;
};
CornerPair corners_from_json(const json& j);
json calibration_to_json(const geometry::CameraCalibration& cal);
geometry::CameraCalibration calibration_from_json(const json& j);

json hog_params_to_json(const features::HogParams& p);
features::HogParams hog_params_from_json(const json& j);

// SVM model: {"weights": [...], "bias": b, "threshold": t, "hog": {...}}
features::LinearSvmModel svm_model_from_json(const json& j);
json svm_model_to_json(const features::LinearSvmModel& m);

// Binary PGM (P5), 8-bit, intensities scaled by 1/255.
features::GrayImage read_pgm(std::istream& in);
features::GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(std::ostream& out, const features::GrayImage& img);

sim::ScenarioSpec scenario_from_json(const json& j);
sim::Overrides overrides_from_json(const json& j);

// Frames file: one JSON object per line.
json frame_to_json(const sim::SimFrame& f);
sim::SimFrame frame_from_json(const json& j);
void write_frames(std::ostream& out, const std::vector<sim::SimFrame>& frames);
std::vector<sim::SimFrame> read_frames(std::istream& in);

}  // namespace courtfusion::io

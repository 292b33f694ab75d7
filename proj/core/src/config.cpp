#include "sonarflow/config.hpp"

#include <functional>
#include <map>

#include "json.hpp"
#include "sonarflow/error.hpp"

namespace sonarflow {

using nlohmann::json;

std::string pipeline_config_to_json(const PipelineConfig& c) {
    const json j = {
        {"bg_frames", c.preprocess.bg_frames},
        {"hole_thresh", c.preprocess.hole_thresh},
        {"inpaint", c.preprocess.inpaint ? std::string(to_string(*c.preprocess.inpaint)) : "none"},
        {"inpaint_radius", c.preprocess.inpaint_radius},
        {"gf_radius", c.preprocess.gf_radius},
        {"gf_eps", c.preprocess.gf_eps},
        {"roi_quantile", c.saliency.roi_quantile},
        {"min_blob_area", c.saliency.min_blob_area},
        {"min_mean_intensity", c.saliency.min_mean_intensity},
        {"stride", c.stride},
        {"fb_pyramid_scale", c.flow.pyramid_scale},
        {"fb_levels", c.flow.levels},
        {"fb_win", c.flow.win_size},
        {"fb_iters", c.flow.iterations},
        {"fb_poly_n", c.flow.poly_n},
        {"fb_poly_sigma", c.flow.poly_sigma},
        {"max_assoc_dist", c.tracker.max_assoc_dist},
        {"max_gap", c.tracker.max_gap},
        {"speed_window", c.tracker.speed_window},
        {"crosstalk_rejection", c.tracker.crosstalk_rejection},
        {"crosstalk_axis_ratio", c.tracker.crosstalk_axis_ratio},
        {"crosstalk_intensity_ratio", c.tracker.crosstalk_intensity_ratio},
        {"min_track_points", c.tracker.min_track_points},
    };
    return j.dump(2);
}

PipelineConfig pipeline_config_from_json(const std::string& text, PipelineConfig c) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("config: malformed JSON: ") + e.what());
    }
    if (j.contains("pipeline")) j = j.at("pipeline");
    if (!j.is_object()) throw InputError("config: expected a JSON object");

    using Setter = std::function<void(const json&)>;
    const std::map<std::string, Setter> setters = {
        {"bg_frames", [&](const json& v) { c.preprocess.bg_frames = v.get<int>(); }},
        {"hole_thresh", [&](const json& v) { c.preprocess.hole_thresh = v.get<double>(); }},
        {"inpaint",
         [&](const json& v) { c.preprocess.inpaint = parse_inpaint_method(v.get<std::string>()); }},
        {"inpaint_radius", [&](const json& v) { c.preprocess.inpaint_radius = v.get<int>(); }},
        {"gf_radius", [&](const json& v) { c.preprocess.gf_radius = v.get<int>(); }},
        {"gf_eps", [&](const json& v) { c.preprocess.gf_eps = v.get<double>(); }},
        {"roi_quantile", [&](const json& v) { c.saliency.roi_quantile = v.get<double>(); }},
        {"min_blob_area", [&](const json& v) { c.saliency.min_blob_area = v.get<int>(); }},
        {"min_mean_intensity", [&](const json& v) { c.saliency.min_mean_intensity = v.get<double>(); }},
        {"stride", [&](const json& v) { c.stride = v.get<int>(); }},
        {"fb_pyramid_scale", [&](const json& v) { c.flow.pyramid_scale = v.get<double>(); }},
        {"fb_levels", [&](const json& v) { c.flow.levels = v.get<int>(); }},
        {"fb_win", [&](const json& v) { c.flow.win_size = v.get<int>(); }},
        {"fb_iters", [&](const json& v) { c.flow.iterations = v.get<int>(); }},
        {"fb_poly_n", [&](const json& v) { c.flow.poly_n = v.get<int>(); }},
        {"fb_poly_sigma", [&](const json& v) { c.flow.poly_sigma = v.get<double>(); }},
        {"max_assoc_dist", [&](const json& v) { c.tracker.max_assoc_dist = v.get<double>(); }},
        {"max_gap", [&](const json& v) { c.tracker.max_gap = v.get<int>(); }},
        {"speed_window", [&](const json& v) { c.tracker.speed_window = v.get<int>(); }},
        {"crosstalk_rejection", [&](const json& v) { c.tracker.crosstalk_rejection = v.get<bool>(); }},
        {"crosstalk_axis_ratio", [&](const json& v) { c.tracker.crosstalk_axis_ratio = v.get<double>(); }},
        {"crosstalk_intensity_ratio",
         [&](const json& v) { c.tracker.crosstalk_intensity_ratio = v.get<double>(); }},
        {"min_track_points", [&](const json& v) { c.tracker.min_track_points = v.get<int>(); }},
    };
    for (const auto& [key, value] : j.items()) {
        auto it = setters.find(key);
        if (it == setters.end()) throw InputError("config: unknown key '" + key + "'");
        try {
            it->second(value);
        } catch (const json::exception&) {
            throw InputError("config: wrong type for '" + key + "'");
        }
    }
    return c;
}

}  // namespace sonarflow

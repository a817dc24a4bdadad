#include "nlos/io/json_formats.hpp"

#include <cmath>
#include <set>
#include <string>

#include "nlos/error.hpp"

namespace nlos::io {
namespace {

using nlohmann::json;

// "pixels[2].position" -> "/pixels/2/position"
std::string to_pointer(const std::string& field) {
  std::string out = "/";
  for (char c : field) {
    if (c == '[' || c == '.') {
      out += '/';
    } else if (c != ']') {
      out += c;
    }
  }
  return out;
}

/// Walks one JSON object, remembering which keys were consumed so that
/// leftovers can be rejected.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(where(), "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ValidationError(child(key), "required field is missing");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) throw ValidationError(child(key), "expected a number");
    return v.get<double>();
  }

  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_number_unsigned()) {
      throw ValidationError(child(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_boolean()) throw ValidationError(child(key), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_string()) throw ValidationError(child(key), "expected a string");
    return v.get<std::string>();
  }

  std::string child(const std::string& key) const { return path_ + "/" + key; }
  std::string where() const { return path_.empty() ? "/" : path_; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ValidationError(child(it.key()), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Point3 point_from(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) throw ValidationError(path, "expected [x, y, z]");
  for (std::size_t i = 0; i < 3; ++i) {
    if (!v[i].is_number()) throw ValidationError(path + "/" + std::to_string(i), "expected a number");
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

json point_to(const Point3& p) { return json::array({p.x, p.y, p.z}); }

std::vector<Point3> points_from(const json& v, const std::string& path) {
  if (!v.is_array()) throw ValidationError(path, "expected an array of [x, y, z]");
  std::vector<Point3> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(point_from(v[i], path + "/" + std::to_string(i)));
  return out;
}

std::vector<HiddenObject> objects_from(const json& v, const std::string& path) {
  if (!v.is_array()) throw ValidationError(path, "expected an array of objects");
  std::vector<HiddenObject> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    Fields f(v[i], path + "/" + std::to_string(i));
    HiddenObject obj;
    obj.position = point_from(f.at("position"), f.child("position"));
    obj.reflectivity = f.number("reflectivity", 1.0);
    obj.label = f.text("label", "");
    f.finish();
    out.push_back(std::move(obj));
  }
  return out;
}

json objects_to(const std::vector<HiddenObject>& objects) {
  json arr = json::array();
  for (const auto& o : objects) {
    arr.push_back({{"position", point_to(o.position)},
                   {"reflectivity", o.reflectivity},
                   {"label", o.label}});
  }
  return arr;
}

AcquisitionParams acquisition_from(const json& v, const std::string& path) {
  Fields f(v, path);
  AcquisitionParams p;
  p.rep_rate_hz = f.number("rep_rate_hz", p.rep_rate_hz);
  p.bin_width_s = f.number("bin_width_s", p.bin_width_s);
  p.acq_time_s = f.number("acq_time_s", p.acq_time_s);
  p.irf_sigma_s = f.number("irf_sigma_s", p.irf_sigma_s);
  p.dark_rate_hz = f.number("dark_rate_hz", p.dark_rate_hz);
  p.ambient_rate_hz = f.number("ambient_rate_hz", p.ambient_rate_hz);
  p.system_throughput = f.number("system_throughput", p.system_throughput);
  p.lambertian = f.boolean("lambertian", p.lambertian);
  p.poisson_noise = f.boolean("poisson_noise", p.poisson_noise);
  p.rng_seed = f.unsigned_integer("rng_seed", p.rng_seed);
  f.finish();
  return p;
}

GridSpec grid_from(const json& v, const std::string& path, double z_plane) {
  Fields f(v, path);
  GridSpec g;
  g.x_min = f.number("x_min", g.x_min);
  g.x_max = f.number("x_max", g.x_max);
  g.y_min = f.number("y_min", g.y_min);
  g.y_max = f.number("y_max", g.y_max);
  g.resolution = f.number("resolution", g.resolution);
  g.z_plane = z_plane;
  f.finish();
  return g;
}

json parse_text(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ValidationError("line " + std::to_string(line) + ", column " + std::to_string(col),
                          "malformed JSON");
  }
}

template <typename F>
auto rethrow_as_pointer(F&& build) {
  try {
    return build();
  } catch (const ValidationError& e) {
    if (!e.field().empty() && e.field().front() == '/') throw;
    const std::string prefix = e.field() + ": ";
    std::string message = e.what();
    if (message.rfind(prefix, 0) == 0) message.erase(0, prefix.size());
    throw ValidationError(to_pointer(e.field()), message);
  }
}

}  // namespace

json to_json(const AcquisitionParams& p) {
  return {{"rep_rate_hz", p.rep_rate_hz},
          {"bin_width_s", p.bin_width_s},
          {"acq_time_s", p.acq_time_s},
          {"irf_sigma_s", p.irf_sigma_s},
          {"dark_rate_hz", p.dark_rate_hz},
          {"ambient_rate_hz", p.ambient_rate_hz},
          {"system_throughput", p.system_throughput},
          {"lambertian", p.lambertian},
          {"poisson_noise", p.poisson_noise},
          {"rng_seed", p.rng_seed}};
}

json to_json(const GridSpec& g) {
  return {{"x_min", g.x_min},
          {"x_max", g.x_max},
          {"y_min", g.y_min},
          {"y_max", g.y_max},
          {"resolution", g.resolution}};
}

SceneDocument parse_scene_document(std::string_view text) {
  const json root = parse_text(text);
  return rethrow_as_pointer([&] {
    Fields f(root, "");
    SceneDocument doc;
    SceneSpec& s = doc.scene;
    s.laser_spot = point_from(f.at("laser_spot"), "/laser_spot");
    s.pixels = points_from(f.at("pixels"), "/pixels");
    s.objects = f.has("objects") ? objects_from(f.at("objects"), "/objects") : std::vector<HiddenObject>{};
    s.background_scatterers = f.has("background_scatterers")
                                  ? objects_from(f.at("background_scatterers"), "/background_scatterers")
                                  : std::vector<HiddenObject>{};
    s.scatter_height_z = f.number("scatter_height_z");
    s.wall_normal = f.has("wall_normal") ? point_from(f.at("wall_normal"), "/wall_normal")
                                         : Point3{0.0, 1.0, 0.0};
    s.standoff_m = f.number("standoff_m");
    doc.acquisition = f.has("acquisition") ? acquisition_from(f.at("acquisition"), "/acquisition")
                                           : AcquisitionParams{};
    GridSpec grid;
    grid.z_plane = s.scatter_height_z;
    doc.grid = f.has("grid") ? grid_from(f.at("grid"), "/grid", s.scatter_height_z) : grid;
    f.finish();

    const Scene validated(doc.scene);
    doc.acquisition.validate();
    doc.grid.validate();
    return doc;
  });
}

std::string serialize_scene_document(const SceneDocument& doc) {
  const SceneSpec& s = doc.scene;
  json pixels = json::array();
  for (const auto& p : s.pixels) pixels.push_back(point_to(p));
  json root = {{"laser_spot", point_to(s.laser_spot)},
               {"pixels", pixels},
               {"objects", objects_to(s.objects)},
               {"background_scatterers", objects_to(s.background_scatterers)},
               {"scatter_height_z", s.scatter_height_z},
               {"wall_normal", point_to(s.wall_normal)},
               {"standoff_m", s.standoff_m},
               {"acquisition", to_json(doc.acquisition)},
               {"grid", to_json(doc.grid)}};
  return root.dump(2) + "\n";
}

SweepConfig parse_sweep_config(std::string_view text) {
  const json root = parse_text(text);
  return rethrow_as_pointer([&] {
    Fields f(root, "");
    SweepConfig c = SweepConfig::defaults();
    if (f.has("laser_spot")) c.laser_spot = point_from(f.at("laser_spot"), "/laser_spot");
    if (f.has("d1_position")) c.d1_position = point_from(f.at("d1_position"), "/d1_position");
    if (f.has("d2_x_range")) {
      Fields r(f.at("d2_x_range"), "/d2_x_range");
      c.d2_x_min = r.number("min");
      c.d2_x_max = r.number("max");
      c.d2_x_steps = r.unsigned_integer("steps", c.d2_x_steps);
      r.finish();
    }
    if (f.has("object_positions")) {
      c.object_positions = points_from(f.at("object_positions"), "/object_positions");
    }
    c.reflectivity = f.number("reflectivity", c.reflectivity);
    c.trials_per_point = f.unsigned_integer("trials_per_point", c.trials_per_point);
    if (f.has("acquisition")) c.acquisition = acquisition_from(f.at("acquisition"), "/acquisition");
    const double z = f.number("scatter_height_z", c.grid.z_plane);
    if (f.has("grid")) {
      c.grid = grid_from(f.at("grid"), "/grid", z);
    } else {
      c.grid.z_plane = z;
    }
    if (f.has("wall_normal")) c.wall_normal = point_from(f.at("wall_normal"), "/wall_normal");
    c.standoff_m = f.number("standoff_m", c.standoff_m);
    c.seed = f.unsigned_integer("seed", c.seed);
    if (f.has("window")) {
      const json& w = f.at("window");
      if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number()) {
        throw ValidationError("/window", "expected [start_s, end_s]");
      }
      c.scenario.window = {w[0].get<double>(), w[1].get<double>()};
    }
    c.scenario.min_snr = f.number("min_snr", c.scenario.min_snr);
    f.finish();
    c.validate();
    return c;
  });
}

std::string serialize_sweep_config(const SweepConfig& c) {
  json objects = json::array();
  for (const auto& p : c.object_positions) objects.push_back(point_to(p));
  json root = {{"laser_spot", point_to(c.laser_spot)},
               {"d1_position", point_to(c.d1_position)},
               {"d2_x_range", {{"min", c.d2_x_min}, {"max", c.d2_x_max}, {"steps", c.d2_x_steps}}},
               {"object_positions", objects},
               {"reflectivity", c.reflectivity},
               {"trials_per_point", c.trials_per_point},
               {"acquisition", to_json(c.acquisition)},
               {"grid", to_json(c.grid)},
               {"scatter_height_z", c.grid.z_plane},
               {"wall_normal", point_to(c.wall_normal)},
               {"standoff_m", c.standoff_m},
               {"seed", c.seed},
               {"window", json::array({c.scenario.window.start_s, c.scenario.window.end_s})},
               {"min_snr", c.scenario.min_snr}};
  return root.dump(2) + "\n";
}

json scenario_to_json(const ScenarioResult& result) {
  auto tracks_json = [](const std::vector<TrackEstimate>& tracks) {
    json arr = json::array();
    for (const auto& t : tracks) {
      arr.push_back({{"label", t.label},
                     {"x", t.x},
                     {"y", t.y},
                     {"sigma_x", t.sigma_x},
                     {"sigma_y", t.sigma_y},
                     {"peak_value", t.peak_value}});
    }
    return arr;
  };
  auto hypothesis_json = [&](const AssociationHypothesis& h) {
    json assigned = json::array();
    for (const auto& per_target : h.assigned_t_s) {
      json row = json::array();
      for (const auto& t : per_target) row.push_back(t ? json(*t) : json(nullptr));
      assigned.push_back(row);
    }
    return json{{"log_score", h.log_score}, {"tracks", tracks_json(h.tracks)}, {"assigned_t_s", assigned}};
  };

  json pixels = json::array();
  for (const auto& p : result.pixels) {
    json peaks = json::array();
    for (const auto& pk : p.peaks) {
      peaks.push_back({{"t_s", pk.t_s},
                       {"sigma_s", pk.sigma_s},
                       {"amplitude", pk.amplitude},
                       {"t_stderr_s", pk.t_stderr_s}});
    }
    pixels.push_back({{"pixel", p.pixel_index}, {"peaks", peaks}, {"notes", p.notes}});
  }
  const auto& a = result.association;
  return {{"format", "nlos-tracks/1"},
          {"tracks", tracks_json(result.tracks)},
          {"association",
           {{"hypotheses", a.hypotheses},
            {"ambiguous", a.ambiguous},
            {"best", hypothesis_json(a.best)},
            {"runner_up", a.runner_up ? hypothesis_json(*a.runner_up) : json(nullptr)}}},
          {"pixels", pixels},
          {"warnings", result.warnings}};
}

}  // namespace nlos::io

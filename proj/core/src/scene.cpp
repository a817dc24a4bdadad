#include "nlos/scene.hpp"

#include <cmath>
#include <string>

#include "nlos/error.hpp"

namespace nlos {
namespace {

std::string indexed(const char* name, std::size_t i) {
  return std::string(name) + "[" + std::to_string(i) + "]";
}

void check_point(const Point3& p, const std::string& field) {
  if (!p.is_finite()) throw ValidationError(field, "coordinates must be finite");
}

void check_objects(const std::vector<HiddenObject>& objects, const char* name) {
  for (std::size_t i = 0; i < objects.size(); ++i) {
    check_point(objects[i].position, indexed(name, i) + ".position");
    const double rho = objects[i].reflectivity;
    if (!std::isfinite(rho) || rho < 0.0) {
      throw ValidationError(indexed(name, i) + ".reflectivity", "must be finite and >= 0");
    }
  }
}

}  // namespace

void validate_geometry(const RetrievalGeometry& g) {
  check_point(g.laser_spot, "laser_spot");
  if (g.pixels.empty()) throw ValidationError("pixels", "at least one pixel is required");
  for (std::size_t i = 0; i < g.pixels.size(); ++i) {
    check_point(g.pixels[i], indexed("pixels", i));
    if (g.pixels[i] == g.laser_spot) {
      throw ValidationError(indexed("pixels", i), "pixel coincides with laser_spot");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (g.pixels[i] == g.pixels[j]) {
        throw ValidationError(indexed("pixels", i),
                              "duplicate of " + indexed("pixels", j) +
                                  " (pixels must be pairwise distinct)");
      }
    }
  }
  check_point(g.wall_normal, "wall_normal");
  if (std::abs(norm(g.wall_normal) - 1.0) > 1e-9) {
    throw ValidationError("wall_normal", "must have unit length (tolerance 1e-9)");
  }
  if (!std::isfinite(g.scatter_height_z)) {
    throw ValidationError("scatter_height_z", "must be finite");
  }
  if (!std::isfinite(g.standoff_m) || g.standoff_m <= 0.0) {
    throw ValidationError("standoff_m", "must be > 0");
  }
}

Scene::Scene(SceneSpec spec)
    : geometry_{spec.laser_spot, std::move(spec.pixels), spec.scatter_height_z,
                spec.wall_normal, spec.standoff_m},
      objects_(std::move(spec.objects)),
      scatterers_(std::move(spec.background_scatterers)) {
  validate_geometry(geometry_);
  check_objects(objects_, "objects");
  check_objects(scatterers_, "background_scatterers");
}

SceneSpec Scene::spec() const {
  return SceneSpec{geometry_.laser_spot, geometry_.pixels,           objects_, scatterers_,
                   geometry_.scatter_height_z, geometry_.wall_normal, geometry_.standoff_m};
}

Scene Scene::with_objects(std::vector<HiddenObject> objects) const {
  SceneSpec s = spec();
  s.objects = std::move(objects);
  return Scene(std::move(s));
}

Scene Scene::with_pixels(std::vector<Point3> pixels) const {
  SceneSpec s = spec();
  s.pixels = std::move(pixels);
  return Scene(std::move(s));
}

}  // namespace nlos

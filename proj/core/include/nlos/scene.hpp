#pragma once

#include <string>
#include <vector>

#include "nlos/geometry.hpp"

namespace nlos {

struct HiddenObject {
  Point3 position;
  /// Relative albedo-area product; scales the expected return linearly.
  double reflectivity{1.0};
  std::string label;
};

/// Everything the reconstruction side is allowed to know about a scene.
/// Ground-truth objects are deliberately absent.
struct RetrievalGeometry {
  Point3 laser_spot;
  std::vector<Point3> pixels;
  double scatter_height_z{0.0};
  Point3 wall_normal{0.0, 1.0, 0.0};
  double standoff_m{53.0};
};

/// Plain field bundle used to build a Scene (and what file formats map to).
struct SceneSpec {
  Point3 laser_spot;
  std::vector<Point3> pixels;
  std::vector<HiddenObject> objects;
  std::vector<HiddenObject> background_scatterers;
  double scatter_height_z{0.0};
  Point3 wall_normal{0.0, 1.0, 0.0};
  double standoff_m{53.0};
};

/// Validated, immutable scene. Construction throws ValidationError naming the
/// offending field when an invariant does not hold.
class Scene {
 public:
  explicit Scene(SceneSpec spec);

  const Point3& laser_spot() const { return geometry_.laser_spot; }
  const std::vector<Point3>& pixels() const { return geometry_.pixels; }
  std::size_t pixel_count() const { return geometry_.pixels.size(); }
  const std::vector<HiddenObject>& objects() const { return objects_; }
  const std::vector<HiddenObject>& background_scatterers() const { return scatterers_; }
  double scatter_height_z() const { return geometry_.scatter_height_z; }
  const Point3& wall_normal() const { return geometry_.wall_normal; }
  double standoff_m() const { return geometry_.standoff_m; }

  /// Truth-free view handed to the reconstruction pipeline.
  const RetrievalGeometry& geometry() const { return geometry_; }

  SceneSpec spec() const;

  Scene with_objects(std::vector<HiddenObject> objects) const;
  Scene with_pixels(std::vector<Point3> pixels) const;

 private:
  RetrievalGeometry geometry_;
  std::vector<HiddenObject> objects_;
  std::vector<HiddenObject> scatterers_;
};

/// Checks the geometry invariants shared by Scene and RetrievalGeometry.
void validate_geometry(const RetrievalGeometry& geometry);

}  // namespace nlos

#include "mockshade/scene.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mockshade {

Vec3 direction_from_angles(double azimuth, double elevation) {
  const Vec3 to_light(std::cos(elevation) * std::cos(azimuth),
                      std::cos(elevation) * std::sin(azimuth), std::sin(elevation));
  return -to_light;
}

int MockScene::find_layer(const std::string& id) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

double MockScene::resolved_exposure() const {
  if (exposure) return *exposure;
  double total = 0.0;
  for (const Light& l : lights) total += luminance(l.intensity);
  return total > 0.0 ? 1.0 / total : 1.0;
}

int MockScene::light_group_count() const {
  int groups = 1;
  for (const Light& l : lights) groups = std::max(groups, l.group + 1);
  for (const Layer& layer : layers) {
    if (layer.material.caustic) groups = std::max(groups, layer.material.caustic->group + 1);
  }
  return groups;
}

std::vector<Light> MockScene::lights_at(double t) const {
  std::vector<Light> out = lights;
  if (!light_path) return out;
  for (std::size_t li = 0; li < out.size(); ++li) {
    std::vector<const LightKey*> keys;
    for (const LightKey& k : light_path->keys) {
      if (k.light_index == static_cast<int>(li)) keys.push_back(&k);
    }
    if (keys.empty()) continue;
    std::stable_sort(keys.begin(), keys.end(),
                     [](const LightKey* a, const LightKey* b) { return a->t < b->t; });
    const LightKey* a = keys.front();
    const LightKey* b = keys.front();
    double s = 0.0;
    if (t >= keys.back()->t) {
      a = b = keys.back();
    } else if (t > keys.front()->t) {
      for (std::size_t i = 1; i < keys.size(); ++i) {
        if (t < keys[i]->t) {
          a = keys[i - 1];
          b = keys[i];
          s = (t - a->t) / (b->t - a->t);
          break;
        }
      }
    }
    Light& light = out[li];
    auto blend = [s](const auto& x, const auto& y) { return ((1.0 - s) * x + s * y).eval(); };
    if (a->position && b->position) light.position = blend(*a->position, *b->position);
    if (a->direction && b->direction) {
      const Vec3 d = blend(*a->direction, *b->direction);
      if (d.norm() > 0.0) light.direction = d.normalized();
    }
    if (a->intensity && b->intensity) light.intensity = blend(*a->intensity, *b->intensity);
  }
  return out;
}

const char* to_string(IssueCode code) {
  switch (code) {
    case IssueCode::schema: return "SchemaError";
    case IssueCode::missing_channel: return "MissingChannel";
    case IssueCode::bad_reference: return "BadReference";
    case IssueCode::invariant_violation: return "InvariantViolation";
  }
  return "Unknown";
}

namespace {

std::string summarize(const std::vector<SceneIssue>& issues) {
  std::string msg = "scene has " + std::to_string(issues.size()) + " problem(s)";
  for (const SceneIssue& i : issues) {
    msg += "\n  ";
    msg += to_string(i.code);
    if (!i.layer_id.empty()) msg += " [layer " + i.layer_id + "]";
    if (!i.path.empty()) msg += " at " + i.path;
    msg += ": " + i.message;
  }
  return msg;
}

}  // namespace

SceneError::SceneError(std::vector<SceneIssue> issues)
    : std::runtime_error(summarize(issues)), issues_(std::move(issues)) {}

bool SceneError::has(IssueCode code) const {
  return std::any_of(issues_.begin(), issues_.end(),
                     [code](const SceneIssue& i) { return i.code == code; });
}

std::vector<SceneIssue> validate_scene(const MockScene& scene) {
  std::vector<SceneIssue> issues;
  auto fail = [&issues](std::string layer, std::string path, std::string message) {
    issues.push_back({IssueCode::invariant_violation, std::move(layer), std::move(path),
                      std::move(message)});
  };

  if (scene.layers.empty()) fail("", "layers", "scene needs at least one layer");
  if (scene.lights.empty()) fail("", "lights", "scene needs at least one light");
  if (scene.width < 1 || scene.height < 1) fail("", "resolution", "resolution must be positive");

  const WeightBasis& basis = scene.shading.basis;
  if (const char* why = basis.invalid_reason()) fail("", "shading/basis", why);
  const int n_weights = basis.invalid_reason() ? -1 : basis.n_weights();
  const bool screen_textures = !scene.shading.textures.empty();
  if (screen_textures && static_cast<int>(scene.shading.textures.size()) != n_weights) {
    fail("", "shading/textures", "texture count must equal the basis weight count (" +
                                     std::to_string(n_weights) + ")");
  }
  if (const auto& ov = scene.shading.specular_overlay) {
    if (const char* why = ov->basis.invalid_reason()) {
      fail("", "shading/specular_overlay/basis", why);
    } else if (static_cast<int>(ov->textures.size()) != ov->basis.n_weights()) {
      fail("", "shading/specular_overlay/textures",
           "texture count must equal the overlay basis weight count");
    }
  }

  std::set<std::string> ids;
  for (std::size_t i = 0; i < scene.layers.size(); ++i) {
    const Layer& layer = scene.layers[i];
    const std::string at = "layers/" + std::to_string(i);
    if (layer.id.empty()) fail("", at + "/id", "layer id must be non-empty");
    if (!ids.insert(layer.id).second) fail(layer.id, at + "/id", "duplicate layer id");
    if (layer.control_textures.size() < 2) {
      fail(layer.id, at + "/textures", "at least two control textures are required");
    } else if (!screen_textures && n_weights > 0 &&
               static_cast<int>(layer.control_textures.size()) != n_weights) {
      fail(layer.id, at + "/textures",
           "control texture count must equal the basis weight count (" +
               std::to_string(n_weights) + ")");
    }
    const Material& m = layer.material;
    if (m.specular_strength < 0.0) fail(layer.id, at + "/material/specular", "must be >= 0");
    if (m.shininess < 1.0) fail(layer.id, at + "/material/shininess", "must be >= 1");
    if (!(m.eta > 0.0)) fail(layer.id, at + "/material/eta", "must be > 0");
    if (m.caustic && m.caustic->group < 0) {
      fail(layer.id, at + "/material/caustic/group", "must be >= 0");
    }
    const ShapeChannel& s = layer.shape;
    if (s.kind == ShapeKind::shape_map) {
      for (double t : s.thickness.data.values()) {
        if (t < 0.0) {
          fail(layer.id, at + "/shape/thickness", "thickness must be >= 0");
          break;
        }
      }
    }
    for (std::size_t p = 0; p < s.normals.data.size(); ++p) {
      if (s.matte.data.size() == s.normals.data.size() && s.matte.data[p] > 0.0 &&
          std::abs(s.normals.data[p].norm() - 1.0) > 1e-6) {
        fail(layer.id, at + "/shape/normals", "normals must be unit length where matte > 0");
        break;
      }
    }
  }

  for (std::size_t i = 0; i < scene.lights.size(); ++i) {
    const Light& l = scene.lights[i];
    const std::string at = "lights/" + std::to_string(i);
    if (l.kind == LightKind::directional && std::abs(l.direction.norm() - 1.0) > 1e-9) {
      fail("", at + "/direction", "directional light direction must be unit length");
    }
    if ((l.intensity.array() < 0.0).any()) fail("", at + "/intensity", "must be >= 0");
    if (l.group < 0) fail("", at + "/group", "must be >= 0");
    if (l.kind == LightKind::area_rect && (l.extent.array() < 0.0).any()) {
      fail("", at + "/extent", "must be >= 0");
    }
  }
  if (scene.effects.area_samples < 1) fail("", "effects/area_samples", "must be >= 1");

  const Camera& cam = scene.camera;
  if (cam.kind == CameraKind::vantage) {
    if (!(cam.fov_y > 0.0 && cam.fov_y < M_PI)) fail("", "camera/fov_y", "must lie in (0, pi)");
    if (cam.eye == cam.look_at) fail("", "camera", "eye and look_at must differ");
  }

  if (scene.light_path) {
    const auto& keys = scene.light_path->keys;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const std::string at = "light_path/keys/" + std::to_string(i);
      if (keys[i].light_index < 0 || keys[i].light_index >= static_cast<int>(scene.lights.size())) {
        fail("", at + "/light_index", "no such light");
      }
      if (i > 0 && keys[i].t < keys[i - 1].t) fail("", at + "/t", "keys must be sorted by t");
    }
  }
  return issues;
}

}  // namespace mockshade

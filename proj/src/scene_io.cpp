#include "mockshade/scene_io.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "mockshade/image_io.hpp"

namespace mockshade {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string lower_ext(const std::string& path) {
  std::string ext = fs::path(path).extension().string();
  for (char& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext;
}

/// Collects issues while walking a document so that every problem is
/// reported in one pass.
class SceneReader {
 public:
  explicit SceneReader(fs::path base_dir) : base_dir_(std::move(base_dir)) {}

  std::vector<SceneIssue> issues;
  std::string layer;  // layer id currently being read

  void add(IssueCode code, const std::string& path, const std::string& message) {
    issues.push_back({code, layer, path, message});
  }

  bool check_keys(const json& obj, const std::string& path,
                  std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
      add(IssueCode::schema, path, "expected an object");
      return false;
    }
    bool ok = true;
    for (const auto& [key, value] : obj.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) {
        add(IssueCode::schema, path.empty() ? key : path + "/" + key, "unknown key");
        ok = false;
      }
    }
    return ok;
  }

  double number(const json& obj, const char* key, const std::string& path, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) {
      add(IssueCode::schema, path + "/" + key, "expected a number");
      return fallback;
    }
    return v.get<double>();
  }

  int integer(const json& obj, const char* key, const std::string& path, int fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
      add(IssueCode::schema, path + "/" + key, "expected an integer");
      return fallback;
    }
    return v.get<int>();
  }

  bool boolean(const json& obj, const char* key, const std::string& path, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) {
      add(IssueCode::schema, path + "/" + key, "expected a boolean");
      return fallback;
    }
    return v.get<bool>();
  }

  std::optional<std::vector<double>> numbers(const json& v, const std::string& path,
                                             std::size_t min_n, std::size_t max_n) {
    if (!v.is_array() || v.size() < min_n || v.size() > max_n) {
      add(IssueCode::schema, path,
          "expected an array of " + std::to_string(min_n) +
              (min_n == max_n ? "" : "-" + std::to_string(max_n)) + " numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (const json& x : v) {
      if (!x.is_number()) {
        add(IssueCode::schema, path, "expected numbers");
        return std::nullopt;
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::optional<Vec3> vec3(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    auto v = numbers(obj.at(key), path + "/" + key, 3, 3);
    if (!v) return std::nullopt;
    return Vec3((*v)[0], (*v)[1], (*v)[2]);
  }

  std::optional<Rgba> color(const json& v, const std::string& path) {
    if (v.is_number()) {
      const double g = v.get<double>();
      return Rgba(g, g, g, 1.0);
    }
    auto n = numbers(v, path, 3, 4);
    if (!n) return std::nullopt;
    return Rgba((*n)[0], (*n)[1], (*n)[2], n->size() == 4 ? (*n)[3] : 1.0);
  }

  fs::path resolve(const std::string& p) const {
    fs::path path(p);
    return path.is_absolute() ? path : base_dir_ / path;
  }

  // Channel loaders. A missing or unreadable file is a BadReference.
  std::optional<Channel<double>> scalar_channel(const json& v, const std::string& path) {
    Channel<double> ch;
    if (v.is_number()) {
      ch.ref.source = v.get<double>();
      ch.data = ScalarField(1, 1, v.get<double>());
      return ch;
    }
    if (!v.is_string()) {
      add(IssueCode::schema, path, "expected a file path or a number");
      return std::nullopt;
    }
    const std::string p = v.get<std::string>();
    ch.ref.source = p;
    try {
      check_exists(p);
      ch.data = lower_ext(p) == ".pfm" ? load_pfm_scalar(resolve(p)) : load_png_scalar(resolve(p));
    } catch (const IoError& e) {
      add(IssueCode::bad_reference, path, e.what());
      return std::nullopt;
    }
    return ch;
  }

  std::optional<Channel<Rgba>> color_channel(const json& v, const std::string& path) {
    Channel<Rgba> ch;
    if (v.is_number() || v.is_array()) {
      auto c = color(v, path);
      if (!c) return std::nullopt;
      if (v.is_number()) {
        ch.ref.source = v.get<double>();
      } else {
        ch.ref.source = v.get<std::vector<double>>();
      }
      ch.data = ColorField(1, 1, *c);
      return ch;
    }
    if (!v.is_string()) {
      add(IssueCode::schema, path, "expected a file path, a number or a colour array");
      return std::nullopt;
    }
    const std::string p = v.get<std::string>();
    ch.ref.source = p;
    try {
      check_exists(p);
      ch.data = lower_ext(p) == ".pfm" ? load_pfm_color(resolve(p)) : load_png_color(resolve(p));
    } catch (const IoError& e) {
      add(IssueCode::bad_reference, path, e.what());
      return std::nullopt;
    }
    return ch;
  }

  std::optional<Channel<Vec3>> normal_channel(const json& v, const std::string& path) {
    Channel<Vec3> ch;
    if (v.is_array()) {
      auto n = numbers(v, path, 3, 3);
      if (!n) return std::nullopt;
      Vec3 nv((*n)[0], (*n)[1], (*n)[2]);
      if (nv.norm() == 0.0) {
        add(IssueCode::invariant_violation, path, "normal must be non-zero");
        return std::nullopt;
      }
      ch.ref.source = *n;
      ch.data = Vec3Field(1, 1, nv.normalized());
      return ch;
    }
    if (!v.is_string()) {
      add(IssueCode::schema, path, "expected a file path or a normal vector");
      return std::nullopt;
    }
    const std::string p = v.get<std::string>();
    ch.ref.source = p;
    try {
      check_exists(p);
      if (lower_ext(p) == ".pfm") {
        const ColorField raw = load_pfm_color(resolve(p));
        ch.data = map(raw, [](const Rgba& c) {
          const Vec3 n(c[0], c[1], c[2]);
          return Vec3(n.norm() > 0.0 ? Vec3(n.normalized()) : Vec3(0.0, 0.0, 1.0));
        });
      } else {
        ch.data = load_png_normals(resolve(p));
      }
    } catch (const IoError& e) {
      add(IssueCode::bad_reference, path, e.what());
      return std::nullopt;
    }
    return ch;
  }

 private:
  void check_exists(const std::string& p) const {
    if (!fs::exists(resolve(p))) throw IoError("file not found: " + p);
  }

  fs::path base_dir_;
};

template <typename T>
bool conformed(const Field2D<T>& f, int w, int h) {
  return f.empty() || (f.width() == w && f.height() == h);
}

template <typename T>
void fit(Channel<T>& ch, int w, int h) {
  if (ch.data.empty() || (ch.data.width() == w && ch.data.height() == h)) return;
  if (ch.data.width() == 1 && ch.data.height() == 1) {
    ch.data = Field2D<T>(w, h, ch.data[0]);
  } else {
    ch.data = resample(ch.data, w, h, Filter::bilinear);
  }
}

WeightBasis read_basis(SceneReader& r, const json& j, const std::string& path) {
  WeightBasis b;
  if (!r.check_keys(j, path, {"kind", "degree", "knots"})) return b;
  const std::string kind = j.value("kind", "linear");
  if (kind == "linear") {
    b.kind = WeightBasis::Kind::linear;
  } else if (kind == "bezier") {
    b.kind = WeightBasis::Kind::bezier;
    b.degree = r.integer(j, "degree", path, 1);
  } else if (kind == "bspline0") {
    b.kind = WeightBasis::Kind::bspline0;
    b.degree = 0;
    if (j.contains("knots")) {
      if (auto k = r.numbers(j.at("knots"), path + "/knots", 2, 1u << 20)) b.knots = *k;
    } else {
      r.add(IssueCode::schema, path + "/knots", "bspline0 requires knots");
    }
  } else {
    r.add(IssueCode::schema, path + "/kind", "unknown basis kind '" + kind + "'");
  }
  return b;
}

std::vector<Channel<Rgba>> read_textures(SceneReader& r, const json& j, const std::string& path) {
  std::vector<Channel<Rgba>> out;
  if (!j.is_array()) {
    r.add(IssueCode::schema, path, "expected an array of textures");
    return out;
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (auto ch = r.color_channel(j[i], path + "/" + std::to_string(i))) out.push_back(std::move(*ch));
  }
  return out;
}

Camera read_camera(SceneReader& r, const json& j) {
  Camera cam;
  if (!r.check_keys(j, "camera", {"kind", "eye", "look_at", "fov_y"})) return cam;
  const std::string kind = j.value("kind", "ortho_frontal");
  if (kind == "ortho_frontal") {
    cam.kind = CameraKind::ortho_frontal;
  } else if (kind == "vantage") {
    cam.kind = CameraKind::vantage;
    if (auto e = r.vec3(j, "eye", "camera")) cam.eye = *e;
    if (auto l = r.vec3(j, "look_at", "camera")) cam.look_at = *l;
    cam.fov_y = r.number(j, "fov_y", "camera", cam.fov_y);
  } else {
    r.add(IssueCode::schema, "camera/kind", "unknown camera kind '" + kind + "'");
  }
  return cam;
}

Light read_light(SceneReader& r, const json& j, const std::string& path) {
  Light l;
  if (!r.check_keys(j, path, {"kind", "direction", "azimuth", "elevation", "position", "extent",
                              "intensity", "group"})) {
    return l;
  }
  const std::string kind = j.value("kind", "directional");
  if (kind == "directional") {
    l.kind = LightKind::directional;
    if (j.contains("direction")) {
      if (auto d = r.vec3(j, "direction", path)) {
        if (d->norm() == 0.0) {
          r.add(IssueCode::invariant_violation, path + "/direction", "direction must be non-zero");
        } else {
          l.direction = std::abs(d->norm() - 1.0) > 1e-12 ? Vec3(d->normalized()) : *d;
        }
      }
    } else if (j.contains("elevation")) {
      l.direction = direction_from_angles(r.number(j, "azimuth", path, 0.0),
                                          r.number(j, "elevation", path, M_PI / 2));
    }
  } else if (kind == "point" || kind == "area_rect") {
    l.kind = kind == "point" ? LightKind::point : LightKind::area_rect;
    if (auto p = r.vec3(j, "position", path)) {
      l.position = *p;
    } else {
      r.add(IssueCode::schema, path + "/position", kind + " light requires a position");
    }
    if (l.kind == LightKind::area_rect && j.contains("extent")) {
      if (auto e = r.numbers(j.at("extent"), path + "/extent", 2, 2)) l.extent = Vec2((*e)[0], (*e)[1]);
    }
  } else {
    r.add(IssueCode::schema, path + "/kind", "unknown light kind '" + kind + "'");
  }
  if (j.contains("intensity")) {
    if (auto c = r.color(j.at("intensity"), path + "/intensity")) l.intensity = *c;
  }
  l.group = r.integer(j, "group", path, 0);
  return l;
}

LightPath read_light_path(SceneReader& r, const json& j) {
  LightPath lp;
  if (!r.check_keys(j, "light_path", {"keys"})) return lp;
  const json keys = j.value("keys", json::array());
  if (!keys.is_array()) {
    r.add(IssueCode::schema, "light_path/keys", "expected an array");
    return lp;
  }
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const std::string path = "light_path/keys/" + std::to_string(i);
    const json& k = keys[i];
    if (!r.check_keys(k, path, {"t", "light_index", "position", "direction", "intensity"})) continue;
    LightKey key;
    key.t = r.number(k, "t", path, 0.0);
    key.light_index = r.integer(k, "light_index", path, 0);
    key.position = r.vec3(k, "position", path);
    key.direction = r.vec3(k, "direction", path);
    if (k.contains("intensity")) key.intensity = r.color(k.at("intensity"), path + "/intensity");
    lp.keys.push_back(key);
  }
  return lp;
}

std::optional<Layer> read_layer(SceneReader& r, const json& j, const std::string& path) {
  Layer layer;
  r.layer = j.is_object() ? j.value("id", std::string()) : std::string();
  if (!r.check_keys(j, path, {"id", "c", "shape", "matte", "textures", "material", "z_deform"})) {
    r.layer.clear();
    return std::nullopt;
  }
  layer.id = r.layer;
  layer.c = r.number(j, "c", path, 0.0);

  if (!j.contains("shape")) {
    r.add(IssueCode::missing_channel, path + "/shape", "layer has no shape channel");
  } else {
    const json& s = j.at("shape");
    const std::string sp = path + "/shape";
    if (r.check_keys(s, sp, {"kind", "height", "normals", "thickness"})) {
      const std::string kind = s.value("kind", "height_field");
      auto need = [&](const char* key) {
        if (!s.contains(key)) {
          r.add(IssueCode::missing_channel, sp + "/" + key, kind + " needs a '" + key + "' channel");
          return false;
        }
        return true;
      };
      if (kind == "height_field") {
        layer.shape.kind = ShapeKind::height_field;
        if (need("height")) {
          if (auto ch = r.scalar_channel(s.at("height"), sp + "/height")) layer.shape.height = *ch;
        }
      } else if (kind == "normal_field" || kind == "shape_map") {
        layer.shape.kind = kind == "normal_field" ? ShapeKind::normal_field : ShapeKind::shape_map;
        if (need("normals")) {
          if (auto ch = r.normal_channel(s.at("normals"), sp + "/normals")) layer.shape.normals = *ch;
        }
        if (layer.shape.kind == ShapeKind::shape_map && need("thickness")) {
          if (auto ch = r.scalar_channel(s.at("thickness"), sp + "/thickness")) {
            layer.shape.thickness = *ch;
          }
        }
      } else {
        r.add(IssueCode::schema, sp + "/kind", "unknown shape kind '" + kind + "'");
      }
    }
  }

  if (auto m = r.scalar_channel(j.value("matte", json(1.0)), path + "/matte")) layer.shape.matte = *m;

  if (j.contains("textures")) {
    layer.control_textures = read_textures(r, j.at("textures"), path + "/textures");
  }

  if (j.contains("z_deform")) {
    if (auto z = r.scalar_channel(j.at("z_deform"), path + "/z_deform")) layer.z_deform = *z;
  }

  Material& mat = layer.material;
  mat.albedo.ref.source = std::vector<double>{0.5, 0.5, 0.5, 1.0};
  mat.albedo.data = ColorField(1, 1, Rgba(0.5, 0.5, 0.5, 1.0));
  if (j.contains("material")) {
    const json& m = j.at("material");
    const std::string mp = path + "/material";
    if (r.check_keys(m, mp, {"albedo", "specular", "shininess", "mirror", "transmissive", "eta",
                             "caustic"})) {
      if (m.contains("albedo")) {
        if (auto a = r.color_channel(m.at("albedo"), mp + "/albedo")) mat.albedo = *a;
      }
      mat.specular_strength = r.number(m, "specular", mp, 0.0);
      mat.shininess = r.number(m, "shininess", mp, 16.0);
      mat.transmissive = r.boolean(m, "transmissive", mp, false);
      mat.eta = r.number(m, "eta", mp, 1.5);
      if (m.contains("mirror") && !m.at("mirror").is_null()) {
        const json& mir = m.at("mirror");
        if (r.check_keys(mir, mp + "/mirror", {"plane_height"})) {
          mat.mirror = PlanarMirror{r.number(mir, "plane_height", mp + "/mirror", 0.0)};
        }
      }
      if (m.contains("caustic")) {
        const json& ca = m.at("caustic");
        if (r.check_keys(ca, mp + "/caustic", {"texture", "group"})) {
          Caustic caustic;
          caustic.group = r.integer(ca, "group", mp + "/caustic", 0);
          if (!ca.contains("texture")) {
            r.add(IssueCode::missing_channel, mp + "/caustic/texture", "caustic needs a texture");
          } else if (auto t = r.color_channel(ca.at("texture"), mp + "/caustic/texture")) {
            caustic.texture = *t;
            mat.caustic = caustic;
          }
        }
      }
    }
  }
  r.layer.clear();
  return layer;
}

template <typename T>
void note_size(const Channel<T>& ch, int& w, int& h) {
  if (w == 0 && ch.ref.is_path() && !ch.data.empty()) {
    w = ch.data.width();
    h = ch.data.height();
  }
}

json ref_to_json(const ChannelRef& ref) {
  if (const auto* s = std::get_if<std::string>(&ref.source)) return *s;
  if (const auto* d = std::get_if<double>(&ref.source)) return *d;
  if (const auto* v = std::get_if<std::vector<double>>(&ref.source)) return *v;
  return nullptr;
}

json vec_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

json textures_to_json(const std::vector<Channel<Rgba>>& textures) {
  json arr = json::array();
  for (const auto& t : textures) arr.push_back(ref_to_json(t.ref));
  return arr;
}

json light_to_json(const Light& l) {
  json j;
  switch (l.kind) {
    case LightKind::directional:
      j["kind"] = "directional";
      j["direction"] = vec_to_json(l.direction);
      break;
    case LightKind::point:
      j["kind"] = "point";
      j["position"] = vec_to_json(l.position);
      break;
    case LightKind::area_rect:
      j["kind"] = "area_rect";
      j["position"] = vec_to_json(l.position);
      j["extent"] = vec_to_json(l.extent);
      break;
  }
  j["intensity"] = vec_to_json(l.intensity);
  j["group"] = l.group;
  return j;
}

json w_source_to_json(const WSource& w) {
  if (w.combined) return "combined";
  return json{{"group", w.group}, {"plane", w.specular ? "specular" : "diffuse"}};
}

WSource read_w_source(SceneReader& r, const json& j) {
  WSource w;
  if (j.is_string()) {
    if (j.get<std::string>() != "combined") {
      r.add(IssueCode::schema, "shading/w_source", "expected \"combined\" or {group, plane}");
    }
    return w;
  }
  if (!r.check_keys(j, "shading/w_source", {"group", "plane"})) return w;
  w.combined = false;
  w.group = r.integer(j, "group", "shading/w_source", 0);
  const std::string plane = j.value("plane", "diffuse");
  if (plane != "diffuse" && plane != "specular") {
    r.add(IssueCode::schema, "shading/w_source/plane", "plane must be diffuse or specular");
  }
  w.specular = plane == "specular";
  return w;
}

ShadingDoc read_shading(SceneReader& r, const json& j) {
  ShadingDoc doc;
  if (!r.check_keys(j, "shading", {"basis", "textures", "w_source", "specular_overlay"})) return doc;
  if (j.contains("basis")) doc.basis = read_basis(r, j.at("basis"), "shading/basis");
  if (j.contains("textures")) doc.textures = read_textures(r, j.at("textures"), "shading/textures");
  if (j.contains("w_source")) doc.w_source = read_w_source(r, j.at("w_source"));
  if (j.contains("specular_overlay")) {
    const json& o = j.at("specular_overlay");
    if (r.check_keys(o, "shading/specular_overlay", {"basis", "textures"})) {
      OverlayDoc ov;
      if (o.contains("basis")) ov.basis = read_basis(r, o.at("basis"), "shading/specular_overlay/basis");
      if (o.contains("textures")) {
        ov.textures = read_textures(r, o.at("textures"), "shading/specular_overlay/textures");
      }
      doc.specular_overlay = std::move(ov);
    }
  }
  return doc;
}

Effects read_effects(SceneReader& r, const json& j) {
  Effects e;
  if (!r.check_keys(j, "effects", {"shadows", "reflections", "refraction", "bleed", "area_samples"})) {
    return e;
  }
  e.shadows = r.boolean(j, "shadows", "effects", true);
  e.reflections = r.boolean(j, "reflections", "effects", true);
  e.refraction = r.boolean(j, "refraction", "effects", true);
  e.bleed = r.number(j, "bleed", "effects", 0.0);
  e.area_samples = r.integer(j, "area_samples", "effects", 16);
  return e;
}

}  // namespace

bool channels_conformed(const MockScene& s) {
  const int w = s.width;
  const int h = s.height;
  for (const Layer& l : s.layers) {
    if (l.shape.matte.data.empty() || l.shape.normals.data.empty() ||
        l.material.albedo.data.empty()) {
      return false;
    }
    if (!conformed(l.shape.matte.data, w, h) || !conformed(l.shape.normals.data, w, h) ||
        !conformed(l.shape.height.data, w, h) || !conformed(l.shape.thickness.data, w, h) ||
        !conformed(l.material.albedo.data, w, h)) {
      return false;
    }
    if (l.z_deform && !conformed(l.z_deform->data, w, h)) return false;
    if (l.material.caustic && !conformed(l.material.caustic->texture.data, w, h)) return false;
    for (const auto& t : l.control_textures) {
      if (!conformed(t.data, w, h)) return false;
    }
  }
  for (const auto& t : s.shading.textures) {
    if (!conformed(t.data, w, h)) return false;
  }
  if (s.shading.specular_overlay) {
    for (const auto& t : s.shading.specular_overlay->textures) {
      if (!conformed(t.data, w, h)) return false;
    }
  }
  return !s.background || conformed(s.background->data, w, h);
}

void conform_channels(MockScene& scene) {
  const int w = scene.width;
  const int h = scene.height;
  for (Layer& layer : scene.layers) {
    ShapeChannel& s = layer.shape;
    if (s.matte.data.empty()) s.matte.data = ScalarField(1, 1, 1.0);
    if (s.normals.data.empty() && s.kind != ShapeKind::height_field) {
      s.normals.data = Vec3Field(1, 1, Vec3(0.0, 0.0, 1.0));
    }
    if (layer.material.albedo.data.empty()) {
      layer.material.albedo.data = ColorField(1, 1, Rgba(0.5, 0.5, 0.5, 1.0));
    }
    fit(s.height, w, h);
    fit(s.normals, w, h);
    for (Vec3& n : s.normals.data.values()) {
      const double len = n.norm();
      if (len > 0.0 && std::abs(len - 1.0) > 1e-12) n /= len;
    }
    fit(s.thickness, w, h);
    fit(s.matte, w, h);
    if (s.kind == ShapeKind::height_field && !s.height.data.empty()) {
      s.normals.ref = {};
      s.normals.data = w >= 2 && h >= 2 ? normals_from_height(s.height.data)
                                        : Vec3Field(w, h, Vec3(0.0, 0.0, 1.0));
    }
    if (s.kind != ShapeKind::height_field) {
      s.height.ref = {};
      s.height.data = ScalarField(w, h, 0.0);
    }
    if (s.kind != ShapeKind::shape_map) {
      s.thickness.ref = {};
      s.thickness.data = ScalarField(w, h, 0.0);
    }
    if (layer.z_deform) fit(*layer.z_deform, w, h);
    for (auto& t : layer.control_textures) fit(t, w, h);
    fit(layer.material.albedo, w, h);
    if (layer.material.caustic) fit(layer.material.caustic->texture, w, h);
  }
  if (scene.background) fit(*scene.background, w, h);
  for (auto& t : scene.shading.textures) fit(t, w, h);
  if (scene.shading.specular_overlay) {
    for (auto& t : scene.shading.specular_overlay->textures) fit(t, w, h);
  }
}

MockScene parse_scene(const json& document, const fs::path& base_dir) {
  SceneReader r(base_dir);
  MockScene scene;
  if (!r.check_keys(document, "", {"layers", "lights", "camera", "background", "shading",
                                   "resolution", "exposure", "effects", "light_path"})) {
    if (!document.is_object()) throw SceneError(r.issues);
  }

  if (document.contains("resolution")) {
    const json& res = document.at("resolution");
    if (res.is_array() && res.size() == 2 && res[0].is_number_integer() && res[1].is_number_integer()) {
      scene.width = res[0].get<int>();
      scene.height = res[1].get<int>();
      scene.resolution_explicit = true;
    } else {
      r.add(IssueCode::schema, "resolution", "expected [width, height] integers");
    }
  }
  if (document.contains("exposure")) {
    if (document.at("exposure").is_number()) {
      scene.exposure = document.at("exposure").get<double>();
    } else {
      r.add(IssueCode::schema, "exposure", "expected a number");
    }
  }
  if (document.contains("effects")) scene.effects = read_effects(r, document.at("effects"));
  if (document.contains("camera")) scene.camera = read_camera(r, document.at("camera"));

  const json layers = document.value("layers", json::array());
  if (!layers.is_array()) {
    r.add(IssueCode::schema, "layers", "expected an array");
  } else {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (auto layer = read_layer(r, layers[i], "layers/" + std::to_string(i))) {
        scene.layers.push_back(std::move(*layer));
      }
    }
  }

  const json lights = document.value("lights", json::array());
  if (!lights.is_array()) {
    r.add(IssueCode::schema, "lights", "expected an array");
  } else {
    for (std::size_t i = 0; i < lights.size(); ++i) {
      scene.lights.push_back(read_light(r, lights[i], "lights/" + std::to_string(i)));
    }
  }

  if (document.contains("background") && !document.at("background").is_null()) {
    if (auto bg = r.color_channel(document.at("background"), "background")) scene.background = *bg;
  }
  if (document.contains("shading")) scene.shading = read_shading(r, document.at("shading"));
  if (document.contains("light_path")) scene.light_path = read_light_path(r, document.at("light_path"));

  if (!r.issues.empty()) throw SceneError(r.issues);

  if (!scene.resolution_explicit) {
    int w = 0;
    int h = 0;
    for (const Layer& layer : scene.layers) {
      note_size(layer.shape.height, w, h);
      note_size(layer.shape.normals, w, h);
    }
    for (const Layer& layer : scene.layers) {
      note_size(layer.shape.matte, w, h);
      for (const auto& t : layer.control_textures) note_size(t, w, h);
    }
    scene.width = w > 0 ? w : 256;
    scene.height = h > 0 ? h : 256;
  }
  if (scene.width >= 1 && scene.height >= 1) conform_channels(scene);

  std::vector<SceneIssue> problems = validate_scene(scene);
  if (!problems.empty()) throw SceneError(std::move(problems));
  return scene;
}

MockScene parse_scene(const std::string& text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SceneError({{IssueCode::schema, "", "", std::string("invalid JSON: ") + e.what()}});
  }
  return parse_scene(doc, base_dir);
}

MockScene load_scene(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open scene file: " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str(), path.parent_path());
}

json basis_to_json(const WeightBasis& basis) {
  switch (basis.kind) {
    case WeightBasis::Kind::linear: return json{{"kind", "linear"}};
    case WeightBasis::Kind::bezier: return json{{"kind", "bezier"}, {"degree", basis.degree}};
    case WeightBasis::Kind::bspline0: return json{{"kind", "bspline0"}, {"knots", basis.knots}};
  }
  return nullptr;
}

WeightBasis basis_from_json(const json& j) {
  SceneReader r{fs::path()};
  WeightBasis b = read_basis(r, j, "basis");
  if (!r.issues.empty()) throw SceneError(r.issues);
  return b;
}

json camera_to_json(const Camera& camera) {
  if (camera.kind == CameraKind::ortho_frontal) return json{{"kind", "ortho_frontal"}};
  return json{{"kind", "vantage"},
              {"eye", vec_to_json(camera.eye)},
              {"look_at", vec_to_json(camera.look_at)},
              {"fov_y", camera.fov_y}};
}

Camera camera_from_json(const json& j) {
  SceneReader r{fs::path()};
  Camera c = read_camera(r, j);
  if (!r.issues.empty()) throw SceneError(r.issues);
  return c;
}

LightPath parse_light_path(const json& j) {
  SceneReader r{fs::path()};
  LightPath lp = read_light_path(r, j);
  if (!r.issues.empty()) throw SceneError(r.issues);
  return lp;
}

json light_path_to_json(const LightPath& path) {
  json keys = json::array();
  for (const LightKey& k : path.keys) {
    json jk{{"t", k.t}, {"light_index", k.light_index}};
    if (k.position) jk["position"] = vec_to_json(*k.position);
    if (k.direction) jk["direction"] = vec_to_json(*k.direction);
    if (k.intensity) jk["intensity"] = vec_to_json(*k.intensity);
    keys.push_back(jk);
  }
  return json{{"keys", keys}};
}

json serialize_scene(const MockScene& scene) {
  json doc;
  if (scene.resolution_explicit) doc["resolution"] = {scene.width, scene.height};
  if (scene.exposure) doc["exposure"] = *scene.exposure;
  doc["effects"] = {{"shadows", scene.effects.shadows},
                    {"reflections", scene.effects.reflections},
                    {"refraction", scene.effects.refraction},
                    {"bleed", scene.effects.bleed},
                    {"area_samples", scene.effects.area_samples}};
  doc["camera"] = camera_to_json(scene.camera);
  doc["background"] = scene.background ? ref_to_json(scene.background->ref) : json(nullptr);

  json layers = json::array();
  for (const Layer& layer : scene.layers) {
    json jl;
    jl["id"] = layer.id;
    jl["c"] = layer.c;
    json shape;
    switch (layer.shape.kind) {
      case ShapeKind::height_field:
        shape["kind"] = "height_field";
        shape["height"] = ref_to_json(layer.shape.height.ref);
        break;
      case ShapeKind::normal_field:
        shape["kind"] = "normal_field";
        shape["normals"] = ref_to_json(layer.shape.normals.ref);
        break;
      case ShapeKind::shape_map:
        shape["kind"] = "shape_map";
        shape["normals"] = ref_to_json(layer.shape.normals.ref);
        shape["thickness"] = ref_to_json(layer.shape.thickness.ref);
        break;
    }
    jl["shape"] = shape;
    jl["matte"] = ref_to_json(layer.shape.matte.ref);
    jl["textures"] = textures_to_json(layer.control_textures);
    if (layer.z_deform) jl["z_deform"] = ref_to_json(layer.z_deform->ref);
    const Material& m = layer.material;
    json jm{{"albedo", ref_to_json(m.albedo.ref)},
            {"specular", m.specular_strength},
            {"shininess", m.shininess},
            {"transmissive", m.transmissive},
            {"eta", m.eta}};
    jm["mirror"] = m.mirror ? json{{"plane_height", m.mirror->plane_height}} : json(nullptr);
    if (m.caustic) {
      jm["caustic"] = {{"texture", ref_to_json(m.caustic->texture.ref)}, {"group", m.caustic->group}};
    }
    jl["material"] = jm;
    layers.push_back(jl);
  }
  doc["layers"] = layers;

  json lights = json::array();
  for (const Light& l : scene.lights) lights.push_back(light_to_json(l));
  doc["lights"] = lights;

  json shading;
  shading["basis"] = basis_to_json(scene.shading.basis);
  if (!scene.shading.textures.empty()) shading["textures"] = textures_to_json(scene.shading.textures);
  shading["w_source"] = w_source_to_json(scene.shading.w_source);
  if (const auto& ov = scene.shading.specular_overlay) {
    shading["specular_overlay"] = {{"basis", basis_to_json(ov->basis)},
                                   {"textures", textures_to_json(ov->textures)}};
  }
  doc["shading"] = shading;
  if (scene.light_path) doc["light_path"] = light_path_to_json(*scene.light_path);
  return doc;
}

MockScene apply_patch(const MockScene& scene, const json& patch, const fs::path& base_dir) {
  SceneReader r(base_dir);
  MockScene out = scene;
  r.check_keys(patch, "", {"lights", "exposure", "shading", "effects", "layers", "base_revision"});

  if (patch.contains("exposure")) {
    const json& e = patch.at("exposure");
    if (e.is_null()) {
      out.exposure.reset();
    } else if (e.is_number()) {
      out.exposure = e.get<double>();
    } else {
      r.add(IssueCode::schema, "exposure", "expected a number or null");
    }
  }
  if (patch.contains("effects")) {
    json merged = serialize_scene(scene)["effects"];
    merged.update(patch.at("effects"));
    out.effects = read_effects(r, merged);
  }

  // lights: array of {index, ...fields}; fields replace the light's values.
  if (patch.contains("lights")) {
    const json& lights = patch.at("lights");
    if (!lights.is_array()) {
      r.add(IssueCode::schema, "lights", "expected an array of light edits");
    } else {
      for (std::size_t i = 0; i < lights.size(); ++i) {
        const json& edit = lights[i];
        const std::string path = "lights/" + std::to_string(i);
        if (!edit.is_object() || !edit.contains("index") || !edit.at("index").is_number_integer()) {
          r.add(IssueCode::schema, path, "light edit needs an integer index");
          continue;
        }
        const int index = edit.at("index").get<int>();
        if (index < 0 || index >= static_cast<int>(out.lights.size())) {
          r.add(IssueCode::invariant_violation, path + "/index", "no such light");
          continue;
        }
        json merged = light_to_json(out.lights[index]);
        json fields = edit;
        fields.erase("index");
        if (fields.contains("azimuth") || fields.contains("elevation")) merged.erase("direction");
        merged.update(fields);
        out.lights[index] = read_light(r, merged, path);
      }
    }
  }

  if (patch.contains("shading")) {
    json merged = serialize_scene(scene)["shading"];
    merged.update(patch.at("shading"));
    out.shading = read_shading(r, merged);
  }

  // layers: {id: {textures: [...]}}
  if (patch.contains("layers")) {
    const json& layers = patch.at("layers");
    if (!layers.is_object()) {
      r.add(IssueCode::schema, "layers", "expected an object keyed by layer id");
    } else {
      for (const auto& [id, edit] : layers.items()) {
        const int li = out.find_layer(id);
        if (li < 0) {
          r.add(IssueCode::invariant_violation, "layers/" + id, "no such layer");
          continue;
        }
        if (!r.check_keys(edit, "layers/" + id, {"textures"})) continue;
        if (edit.contains("textures")) {
          out.layers[li].control_textures = read_textures(r, edit.at("textures"), "layers/" + id + "/textures");
        }
      }
    }
  }

  if (!r.issues.empty()) throw SceneError(r.issues);
  conform_channels(out);
  std::vector<SceneIssue> problems = validate_scene(out);
  if (!problems.empty()) throw SceneError(std::move(problems));
  return out;
}

}  // namespace mockshade

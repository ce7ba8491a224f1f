#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <boost/system/system_error.hpp>
#include <nlohmann/json.hpp>

#include "mockshade/anamorph.hpp"
#include "mockshade/compositor.hpp"
#include "mockshade/demo.hpp"
#include "mockshade/image_io.hpp"
#include "mockshade/integrability.hpp"
#include "mockshade/parallel.hpp"
#include "mockshade/pipeline.hpp"
#include "mockshade/scene_io.hpp"
#include "mockshade/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mockshade;

namespace {

constexpr int kParseFailure = 1;
constexpr int kIoFailure = 2;

// {prefix}{suffix} next to the prefix, keeping any dots in the stem.
fs::path with_suffix(const fs::path& prefix, const std::string& suffix) {
  fs::path p = prefix;
  p.replace_filename(prefix.filename().string() + suffix);
  return p;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

json read_json(const fs::path& path) {
  const Bytes bytes = read_file(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw SceneError({{IssueCode::schema, "", path.string(), std::string("invalid JSON: ") + e.what()}});
  }
}

void write_render(const Render& r, const fs::path& prefix, bool w_only) {
  ensure_parent(prefix);
  save_pfm(with_suffix(prefix, "_w.pfm"), exposed_illumination(r.w));
  json side = w_sidecar(r.w);
  side["w"] = with_suffix(prefix, "_w.pfm").filename().string();
  if (!w_only) {
    save_png(with_suffix(prefix, "_final.png"), r.image);
    side["final"] = with_suffix(prefix, "_final.png").filename().string();
  }
  write_file(with_suffix(prefix, ".json"), side.dump(2) + "\n");
}

struct Common {
  std::string scene;
  std::string out;
  double t = 0.0;
  bool w_only = false;
};

int cmd_render(const Common& c) {
  const MockScene scene = load_scene(c.scene);
  write_render(render_scene(scene, c.t), c.out, c.w_only);
  return 0;
}

int cmd_animate(const Common& c, const std::string& light_path, int frames, double fps) {
  MockScene scene = load_scene(c.scene);
  if (!light_path.empty()) {
    scene.light_path = parse_light_path(read_json(light_path));
    if (auto issues = validate_scene(scene); !issues.empty()) throw SceneError(std::move(issues));
  }
  json index = json::array();
  for (int i = 0; i < frames; ++i) {
    const double t = i / fps;
    char tag[16];
    std::snprintf(tag, sizeof tag, "_%04d", i);
    const fs::path prefix = with_suffix(fs::path(c.out), tag);
    write_render(render_scene(scene, t), prefix, c.w_only);
    index.push_back({{"frame", i}, {"t", t}, {"prefix", prefix.filename().string()}});
  }
  ensure_parent(c.out);
  write_file(with_suffix(c.out, ".json"), json{{"fps", fps}, {"frames", index}}.dump(2) + "\n");
  return 0;
}

json analyze_scene(const MockScene& scene) {
  json report = json::object();
  for (const Layer& layer : scene.layers) {
    const Vec3Field& n = layer.shape.normals.data;
    const CurlResult curl = curl_residual(n);
    json entry{{"max_curl", curl.max_abs}, {"masked_fraction", curl.masked_fraction}};
    try {
      entry["residual_norm"] = integrate_normals(n).residual_norm;
    } catch (const SolverDiverged&) {
      entry["residual_norm"] = nullptr;
    }
    report[layer.id] = entry;
  }
  return report;
}

int cmd_analyze(const Common& c) {
  const MockScene scene = load_scene(c.scene);
  if (scene.layers.empty()) {
    throw SceneError({{IssueCode::invariant_violation, "", "layers", "scene has no layers to analyze"}});
  }
  const std::string text = analyze_scene(scene).dump(2) + "\n";
  if (c.out.empty()) {
    std::cout << text;
  } else {
    ensure_parent(c.out);
    write_file(c.out, text);
  }
  return 0;
}

int cmd_composite(const std::string& recipe, const std::string& out) {
  const ColorField image = composite(load_recipe(recipe));
  ensure_parent(out);
  save_png(out, image);
  return 0;
}

// Writes the impact planes of the virtual layers, the proxy-only render as
// the background, and a recipe joining them.
int cmd_impacts(const Common& c, const std::vector<std::string>& virtual_ids) {
  const MockScene scene = load_scene(c.scene);
  const std::set<std::string> ids(virtual_ids.begin(), virtual_ids.end());
  for (const std::string& id : ids) {
    if (scene.find_layer(id) < 0) {
      throw SceneError({{IssueCode::bad_reference, id, "virtual", "no layer with this id"}});
    }
  }
  const ImpactSet impacts = render_impacts(scene, ids, c.t);
  MockScene proxy = scene;
  std::erase_if(proxy.layers, [&](const Layer& l) { return ids.count(l.id) > 0; });
  const fs::path prefix(c.out);
  ensure_parent(prefix);
  const fs::path background = with_suffix(prefix, "_background.pfm");
  save_pfm(background, render_scene(proxy, c.t).image);
  const json recipe{{"background", background.filename().string()},
                    {"impacts", json::array({save_impacts(impacts, prefix)})}};
  write_file(with_suffix(prefix, "_recipe.json"), recipe.dump(2) + "\n");
  return 0;
}

Filter parse_filter(const std::string& name) {
  if (name == "nearest") return Filter::nearest;
  if (name == "bilinear") return Filter::bilinear;
  throw SceneError({{IssueCode::schema, "", "filter", "expected nearest or bilinear"}});
}

int cmd_bake(const std::string& config_path, const std::string& out) {
  const json config = read_json(config_path);
  const fs::path base = fs::path(config_path).parent_path();
  for (const char* key : {"source", "vantage", "receiver"}) {
    if (!config.contains(key)) {
      throw SceneError({{IssueCode::missing_channel, "", key, "bake config needs this key"}});
    }
  }
  const ColorField source = load_png_color(base / config.at("source").get<std::string>());
  const Camera vantage = camera_from_json(config.at("vantage"));
  const Receiver receiver = receiver_from_json(config.at("receiver"), base);
  BakeOptions options;
  if (config.contains("filter")) options.filter = parse_filter(config.at("filter").get<std::string>());
  if (config.contains("texture_scale")) options.texture_scale = config.at("texture_scale").get<int>();
  const BakedAnamorph baked = bake(source, vantage, receiver, options);
  ensure_parent(out);
  save_baked(baked, out);
  std::cout << json{{"texture", with_suffix(out, ".png").string()},
                    {"occluded_texels", baked.occluded_count}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_view(const std::string& baked_path, const std::string& viewer_path, const std::string& resolution,
             const std::string& filter, const std::string& out) {
  const BakedAnamorph baked = load_baked(baked_path);
  const Camera viewer = viewer_path.empty() ? baked.vantage : camera_from_json(read_json(viewer_path));
  int w = baked.source_width;
  int h = baked.source_height;
  if (!resolution.empty()) {
    char x = 0;
    std::istringstream in(resolution);
    if (!(in >> w >> x >> h) || x != 'x' || w <= 0 || h <= 0) {
      throw SceneError({{IssueCode::schema, "", "resolution", "expected WIDTHxHEIGHT"}});
    }
  }
  const ColorField image = render_view(baked, viewer, w, h, parse_filter(filter));
  ensure_parent(out);
  save_png(out, image);
  return 0;
}

int cmd_serve(const std::string& scene_path, int port, const std::string& address) {
  MockScene scene = load_scene(scene_path);
  SessionState session(std::move(scene), fs::path(scene_path).parent_path());

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  RenderServer server(session, static_cast<std::uint16_t>(port), address);
  server.start();
  std::cout << "listening on http://" << address << ":" << server.port() << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  return 0;
}

void report_scene_error(const SceneError& e) {
  for (const SceneIssue& i : e.issues()) {
    std::cerr << "error[" << to_string(i.code) << "]";
    if (!i.layer_id.empty()) std::cerr << " layer " << i.layer_id;
    if (!i.path.empty()) std::cerr << " at " << i.path;
    std::cerr << ": " << i.message << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mockshade: two-stage stylised renderer for layered mock-3D scenes"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: MOCKSHADE_THREADS, then all cores)")
      ->check(CLI::NonNegativeNumber);

  Common c;
  auto scene_opt = [&](CLI::App* sub) { sub->add_option("--scene", c.scene, "scene JSON")->required(); };

  auto* render = app.add_subcommand("render", "render W and the final image at time t");
  scene_opt(render);
  render->add_option("--out", c.out, "output prefix")->required();
  render->add_option("--t", c.t, "time in seconds");
  render->add_flag("--w-only", c.w_only, "skip the final image");

  std::string light_path;
  int frames = 1;
  double fps = 24.0;
  auto* animate = app.add_subcommand("animate", "render frames i / fps along a light path");
  scene_opt(animate);
  animate->add_option("--out", c.out, "output prefix")->required();
  animate->add_option("--light-path", light_path, "light path JSON (default: the scene's own)");
  animate->add_option("--frames", frames, "frame count")->check(CLI::PositiveNumber);
  animate->add_option("--fps", fps, "frames per second")->check(CLI::PositiveNumber);
  animate->add_flag("--w-only", c.w_only, "skip the final images");

  auto* analyze = app.add_subcommand("analyze", "per-layer curl and integration residuals");
  scene_opt(analyze);
  analyze->add_option("--out", c.out, "report path (default: stdout)");

  std::string recipe;
  auto* comp = app.add_subcommand("composite", "apply a compositing recipe");
  comp->add_option("--recipe", recipe, "recipe JSON")->required();
  comp->add_option("--out", c.out, "output PNG")->required();

  std::vector<std::string> virtual_ids;
  auto* impacts = app.add_subcommand("impacts", "split virtual layers into impact planes and a recipe");
  scene_opt(impacts);
  impacts->add_option("--virtual", virtual_ids, "ids of the virtual layers")->required();
  impacts->add_option("--out", c.out, "output prefix")->required();
  impacts->add_option("--t", c.t, "time in seconds");

  std::string config;
  auto* bake_cmd = app.add_subcommand("bake", "project a picture onto a receiver from a vantage");
  bake_cmd->add_option("--config", config, "bake config JSON")->required();
  bake_cmd->add_option("--out", c.out, "output prefix")->required();

  std::string baked, viewer, resolution, filter = "bilinear";
  auto* view = app.add_subcommand("view", "look at a baked receiver from a camera");
  view->add_option("--baked", baked, "sidecar JSON written by bake")->required();
  view->add_option("--viewer", viewer, "camera JSON (default: the vantage)");
  view->add_option("--resolution", resolution, "WIDTHxHEIGHT (default: the source size)");
  view->add_option("--filter", filter, "nearest or bilinear");
  view->add_option("--out", c.out, "output PNG")->required();

  int port = 8080;
  std::string address = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "HTTP and WebSocket render service");
  scene_opt(serve);
  serve->add_option("--port", port, "port, 0 for any free one")->check(CLI::Range(0, 65535));
  serve->add_option("--address", address, "bind address");

  int demo_resolution = 256;
  auto* demo = app.add_subcommand("demo", "write the demo scene");
  demo->add_option("--out", c.out, "output directory")->required();
  demo->add_option("--resolution", demo_resolution, "square resolution")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) set_thread_count(threads);

  try {
    if (*render) return cmd_render(c);
    if (*animate) return cmd_animate(c, light_path, frames, fps);
    if (*analyze) return cmd_analyze(c);
    if (*comp) return cmd_composite(recipe, c.out);
    if (*impacts) return cmd_impacts(c, virtual_ids);
    if (*bake_cmd) return cmd_bake(config, c.out);
    if (*view) return cmd_view(baked, viewer, resolution, filter, c.out);
    if (*serve) return cmd_serve(c.scene, port, address);
    if (*demo) {
      std::cout << write_demo_scene(c.out, demo_resolution).string() << "\n";
      return 0;
    }
  } catch (const SceneError& e) {
    report_scene_error(e);
    return kParseFailure;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParseFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParseFailure;
  } catch (const boost::system::system_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoFailure;
  }
  return 0;
}

#include "mockshade/service.hpp"

#include <atomic>
#include <charconv>
#include <deque>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "mockshade/image_io.hpp"
#include "mockshade/scene_io.hpp"

namespace mockshade {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

SessionState::SessionState(MockScene scene, std::filesystem::path base_dir)
    : current_{std::make_shared<const MockScene>(std::move(scene)), 0},
      base_dir_(std::move(base_dir)) {}

SessionState::Snapshot SessionState::snapshot() const {
  std::lock_guard lock(mutex_);
  return current_;
}

SessionState::PatchOutcome SessionState::patch(const json& edit,
                                               std::optional<std::int64_t> expected) {
  PatchOutcome out;
  std::int64_t revision = 0;
  {
    std::lock_guard lock(mutex_);
    out.revision = current_.revision;
    if (!expected && edit.is_object() && edit.contains("base_revision")) {
      if (!edit.at("base_revision").is_number_integer()) {
        out.status = 400;
        out.body = {{"error", "base_revision must be an integer"}};
        return out;
      }
      expected = edit.at("base_revision").get<std::int64_t>();
    }
    if (expected && *expected != current_.revision) {
      out.status = 409;
      out.body = {{"error", "stale revision"}, {"revision", current_.revision}};
      return out;
    }
    try {
      MockScene next = apply_patch(*current_.scene, edit, base_dir_);
      current_ = {std::make_shared<const MockScene>(std::move(next)), current_.revision + 1};
    } catch (const SceneError& e) {
      json issues = json::array();
      for (const SceneIssue& i : e.issues()) {
        issues.push_back({{"code", to_string(i.code)},
                          {"layer", i.layer_id},
                          {"path", i.path},
                          {"message", i.message}});
      }
      out.status = 400;
      out.body = {{"error", e.what()}, {"issues", issues}, {"revision", current_.revision}};
      return out;
    } catch (const std::exception& e) {
      out.status = 400;
      out.body = {{"error", e.what()}, {"revision", current_.revision}};
      return out;
    }
    revision = current_.revision;
  }
  {
    std::lock_guard lock(cache_mutex_);
    std::erase_if(cache_, [revision](const auto& kv) { return kv.first.first < revision; });
  }
  out.revision = revision;
  out.body = {{"revision", revision}};
  std::vector<Listener> listeners;
  {
    std::lock_guard lock(listener_mutex_);
    for (const auto& [id, l] : listeners_) listeners.push_back(l);
  }
  for (const Listener& l : listeners) l(revision);
  return out;
}

std::shared_ptr<const Render> SessionState::render(const Snapshot& snap, double t) {
  const auto key = std::make_pair(snap.revision, t);
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  auto result = std::make_shared<const Render>(render_scene(*snap.scene, t));
  std::lock_guard lock(cache_mutex_);
  if (cache_.size() >= 16) cache_.erase(cache_.begin());
  cache_.emplace(key, result);
  return result;
}

int SessionState::subscribe(Listener listener) {
  std::lock_guard lock(listener_mutex_);
  listeners_.emplace(next_listener_, std::move(listener));
  return next_listener_++;
}

void SessionState::unsubscribe(int id) {
  std::lock_guard lock(listener_mutex_);
  listeners_.erase(id);
}

namespace {

std::string_view sv(beast::string_view s) { return {s.data(), s.size()}; }

struct Target {
  std::string path;
  std::map<std::string, std::string> query;
};

Target parse_target(std::string_view target) {
  Target out;
  const auto q = target.find('?');
  out.path = std::string(target.substr(0, q));
  if (q == std::string_view::npos) return out;
  std::string_view rest = target.substr(q + 1);
  while (!rest.empty()) {
    const auto amp = rest.find('&');
    const std::string_view pair = rest.substr(0, amp);
    const auto eq = pair.find('=');
    out.query[std::string(pair.substr(0, eq))] =
        eq == std::string_view::npos ? "" : std::string(pair.substr(eq + 1));
    if (amp == std::string_view::npos) break;
    rest = rest.substr(amp + 1);
  }
  return out;
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// "3", "\"3\"" and W/"3" all name revision 3.
std::optional<std::int64_t> parse_revision(std::string_view s) {
  if (s.starts_with("W/")) s.remove_prefix(2);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

using Response = http::response<http::string_body>;

Response make_response(const http::request<http::string_body>& req, http::status status,
                       std::string body, const char* content_type) {
  Response res{status, req.version()};
  res.set(http::field::server, "mockshade");
  res.set(http::field::content_type, content_type);
  res.set(http::field::access_control_allow_origin, "*");
  res.set(http::field::access_control_expose_headers, "X-Revision, ETag");
  res.keep_alive(req.keep_alive());
  res.body() = std::move(body);
  res.prepare_payload();
  return res;
}

Response json_response(const http::request<http::string_body>& req, http::status status,
                       const json& body) {
  return make_response(req, status, body.dump(), "application/json");
}

std::string to_string(const Bytes& b) { return std::string(b.begin(), b.end()); }

}  // namespace

struct RenderServer::Impl {
  SessionState& session;
  net::io_context ioc{1};
  tcp::acceptor acceptor;
  net::thread_pool workers{2};
  std::vector<std::thread> threads;
  std::atomic<bool> stopped{false};

  Impl(SessionState& s, std::uint16_t port, const std::string& address)
      : session(s), acceptor(ioc) {
    const tcp::endpoint ep(net::ip::make_address(address), port);
    acceptor.open(ep.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen(net::socket_base::max_listen_connections);
  }

  void accept();
};

namespace {

class LiveSession : public std::enable_shared_from_this<LiveSession> {
 public:
  LiveSession(tcp::socket socket, SessionState& session, net::thread_pool& workers)
      : ws_(std::move(socket)), session_(session), workers_(workers) {}

  ~LiveSession() {
    if (listener_ >= 0) session_.unsubscribe(listener_);
  }

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    const auto q = parse_target(sv(req.target()));
    if (auto it = q.query.find("t"); it != q.query.end()) t_ = parse_number(it->second).value_or(0.0);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->on_open();
    });
  }

 private:
  void on_open() {
    std::weak_ptr<LiveSession> weak = shared_from_this();
    auto exec = ws_.get_executor();
    listener_ = session_.subscribe([weak, exec](std::int64_t) {
      net::post(exec, [weak] {
        if (auto self = weak.lock()) self->request_frame();
      });
    });
    request_frame();
    read();
  }

  void read() {
    ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        return;
      }
      const std::string text = beast::buffers_to_string(self->in_.data());
      self->in_.consume(self->in_.size());
      const json msg = json::parse(text, nullptr, false);
      if (msg.is_object() && msg.contains("t") && msg.at("t").is_number()) {
        self->t_ = msg.at("t").get<double>();
        self->request_frame();
      }
      self->read();
    });
  }

  // At most one render in flight; edits arriving meanwhile coalesce into one
  // follow-up render of the newest revision.
  void request_frame() {
    if (closed_) return;
    if (rendering_) {
      pending_ = true;
      return;
    }
    rendering_ = true;
    const double t = t_;
    net::post(workers_, [self = shared_from_this(), t] {
      const SessionState::Snapshot snap = self->session_.snapshot();
      std::shared_ptr<std::string> header;
      std::shared_ptr<std::string> frame;
      try {
        const auto r = self->session_.render(snap, t);
        frame = std::make_shared<std::string>(to_string(encode_png(r->image)));
        header = std::make_shared<std::string>(
            json{{"revision", snap.revision}, {"t", t}, {"format", "png"}, {"bytes", frame->size()}}
                .dump());
      } catch (const std::exception& e) {
        header = std::make_shared<std::string>(json{{"revision", snap.revision}, {"error", e.what()}}.dump());
      }
      net::post(self->ws_.get_executor(), [self, header, frame] { self->on_frame(header, frame); });
    });
  }

  void on_frame(std::shared_ptr<std::string> header, std::shared_ptr<std::string> frame) {
    rendering_ = false;
    queue_.push_back({true, std::move(header)});
    if (frame) queue_.push_back({false, std::move(frame)});
    if (!writing_) write();
    if (pending_) {
      pending_ = false;
      request_frame();
    }
  }

  void write() {
    if (queue_.empty() || closed_) {
      writing_ = false;
      return;
    }
    writing_ = true;
    ws_.text(queue_.front().first);
    ws_.async_write(net::buffer(*queue_.front().second),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->queue_.pop_front();
                      if (ec) {
                        self->closed_ = true;
                        self->writing_ = false;
                        return;
                      }
                      self->write();
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  SessionState& session_;
  net::thread_pool& workers_;
  beast::flat_buffer in_;
  std::deque<std::pair<bool, std::shared_ptr<std::string>>> queue_;
  double t_ = 0.0;
  int listener_ = -1;
  bool rendering_ = false;
  bool pending_ = false;
  bool writing_ = false;
  bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, SessionState& session, net::thread_pool& workers)
      : stream_(std::move(socket)), session_(session), workers_(workers) {}

  void run() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (ec) {
                         self->close();
                         return;
                       }
                       self->handle();
                     });
  }

  void handle() {
    const Target target = parse_target(sv(req_.target()));
    if (websocket::is_upgrade(req_)) {
      if (target.path != "/live") {
        send(json_response(req_, http::status::not_found, {{"error", "no such socket"}}));
        return;
      }
      stream_.expires_never();
      std::make_shared<LiveSession>(stream_.release_socket(), session_, workers_)->run(std::move(req_));
      return;
    }
    const auto method = req_.method();
    if (method == http::verb::options) {
      Response res = make_response(req_, http::status::no_content, "", "text/plain");
      res.set(http::field::access_control_allow_methods, "GET, POST, PATCH, OPTIONS");
      res.set(http::field::access_control_allow_headers, "Content-Type, If-Match");
      send(std::move(res));
      return;
    }
    if (target.path == "/scene") {
      if (method == http::verb::get) return get_scene();
      if (method == http::verb::patch) return patch_scene();
      return send(json_response(req_, http::status::method_not_allowed, {{"error", "use GET or PATCH"}}));
    }
    if (target.path == "/render" || target.path == "/w") {
      const bool is_render = target.path == "/render";
      if (is_render ? (method != http::verb::post && method != http::verb::get)
                    : method != http::verb::get) {
        return send(json_response(req_, http::status::method_not_allowed, {{"error", "wrong method"}}));
      }
      double t = 0.0;
      if (auto it = target.query.find("t"); it != target.query.end()) {
        const auto v = parse_number(it->second);
        if (!v) return send(json_response(req_, http::status::bad_request, {{"error", "t must be a number"}}));
        t = *v;
      }
      return render(is_render, t);
    }
    send(json_response(req_, http::status::not_found, {{"error", "no such endpoint"}}));
  }

  void get_scene() {
    const auto snap = session_.snapshot();
    Response res = json_response(req_, http::status::ok,
                                 {{"revision", snap.revision}, {"scene", serialize_scene(*snap.scene)}});
    res.set("X-Revision", std::to_string(snap.revision));
    res.set(http::field::etag, "\"" + std::to_string(snap.revision) + "\"");
    send(std::move(res));
  }

  void patch_scene() {
    std::optional<std::int64_t> expected;
    if (auto it = req_.find(http::field::if_match); it != req_.end()) {
      expected = parse_revision(sv(it->value()));
      if (!expected) {
        return send(json_response(req_, http::status::bad_request, {{"error", "If-Match must name a revision"}}));
      }
    }
    const json edit = json::parse(req_.body(), nullptr, false);
    if (edit.is_discarded() || !edit.is_object()) {
      return send(json_response(req_, http::status::bad_request, {{"error", "body must be a JSON object"}}));
    }
    const auto outcome = session_.patch(edit, expected);
    Response res = json_response(req_, static_cast<http::status>(outcome.status), outcome.body);
    res.set("X-Revision", std::to_string(outcome.revision));
    send(std::move(res));
  }

  void render(bool image, double t) {
    net::post(workers_, [self = shared_from_this(), image, t] {
      const auto snap = self->session_.snapshot();
      Response res;
      try {
        const auto r = self->session_.render(snap, t);
        res = image ? make_response(self->req_, http::status::ok, to_string(encode_png(r->image)), "image/png")
                    : make_response(self->req_, http::status::ok,
                                    to_string(encode_pfm(exposed_illumination(r->w))),
                                    "application/octet-stream");
        res.set("X-Exposure", std::to_string(r->w.exposure));
      } catch (const std::exception& e) {
        res = json_response(self->req_, http::status::internal_server_error, {{"error", e.what()}});
      }
      res.set("X-Revision", std::to_string(snap.revision));
      net::post(self->stream_.get_executor(),
                [self, res = std::move(res)]() mutable { self->send(std::move(res)); });
    });
  }

  void send(Response res) {
    res_ = std::make_shared<Response>(std::move(res));
    http::async_write(stream_, *res_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec || !self->res_->keep_alive()) {
        self->close();
        return;
      }
      self->read();
    });
  }

  void close() {
    beast::error_code ec;
    stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
  }

  beast::tcp_stream stream_;
  SessionState& session_;
  net::thread_pool& workers_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  std::shared_ptr<Response> res_;
};

}  // namespace

void RenderServer::Impl::accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (stopped) return;
    } else {
      std::make_shared<HttpSession>(std::move(socket), session, workers)->run();
    }
    accept();
  });
}

RenderServer::RenderServer(SessionState& session, std::uint16_t port, std::string address)
    : impl_(std::make_unique<Impl>(session, port, address)) {}

RenderServer::~RenderServer() { stop(); }

std::uint16_t RenderServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void RenderServer::start() {
  impl_->accept();
  impl_->threads.emplace_back([this] { impl_->ioc.run(); });
}

void RenderServer::run() {
  impl_->accept();
  impl_->ioc.run();
}

void RenderServer::stop() {
  if (impl_->stopped.exchange(true)) return;
  net::post(impl_->ioc, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
  });
  impl_->ioc.stop();
  for (auto& t : impl_->threads) {
    if (t.joinable()) t.join();
  }
  impl_->workers.join();
}

}  // namespace mockshade

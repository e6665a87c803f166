#pragma once

// WebSocket front end for Session: one thread per connection, text frames
// carrying one JSON message each. Plain HTTP GETs are answered from an
// optional static directory (the browser client's assets).

#include <sys/socket.h>

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <filesystem>
#include <fstream>
#include <functional>
#include <list>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "iglu/session.hpp"

namespace iglu {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

inline constexpr const char* kPortEnv = "IGLU_PORT";
inline constexpr unsigned short kDefaultPort = 8765;

// Port from IGLU_PORT, or the built-in default.
inline unsigned short default_port() {
  const char* v = std::getenv(kPortEnv);
  if (v == nullptr || *v == '\0') return kDefaultPort;
  try {
    std::size_t used = 0;
    const int p = std::stoi(v, &used);
    if (used == std::strlen(v) && p >= 0 && p <= 65535) return static_cast<unsigned short>(p);
  } catch (const std::exception&) {
  }
  throw std::invalid_argument(std::string(kPortEnv) + " must be a port number, got '" + v + "'");
}

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 0;  // 0 picks a free port
  SessionMode mode = SessionMode::AgentEval;
  std::string static_dir;  // empty: no static files
  std::size_t max_sessions = 64;
};

inline std::string_view content_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".svg") return "image/svg+xml";
  return "application/octet-stream";
}

class Server {
 public:
  explicit Server(ServerOptions opt) : opt_(std::move(opt)), registry_(opt_.max_sessions, opt_.mode) {}
  ~Server() { stop(); }
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  void start() {
    acceptor_ = std::make_unique<tcp::acceptor>(io_);
    const tcp::endpoint ep(net::ip::make_address(opt_.address), opt_.port);
    acceptor_->open(ep.protocol());
    acceptor_->set_option(net::socket_base::reuse_address(true));
    acceptor_->bind(ep);
    acceptor_->listen();
    port_ = acceptor_->local_endpoint().port();
    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  unsigned short port() const { return port_; }
  const SessionRegistry& registry() const { return registry_; }

  void stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(acceptor_->native_handle(), SHUT_RDWR);  // wakes the blocking accept
    if (accept_thread_.joinable()) accept_thread_.join();
    std::list<Worker> workers;
    {
      std::lock_guard lock(mu_);
      for (int fd : live_fds_) ::shutdown(fd, SHUT_RDWR);
      workers.splice(workers.end(), workers_);
    }
    for (auto& w : workers) w.thread.join();
    beast::error_code ec;
    acceptor_->close(ec);
  }

 private:
  void accept_loop() {
    while (running_) {
      tcp::socket sock(io_);
      beast::error_code ec;
      acceptor_->accept(sock, ec);
      if (ec || !running_) break;
      std::lock_guard lock(mu_);
      reap_finished();
      live_fds_.insert(sock.native_handle());
      auto& w = workers_.emplace_back();
      w.thread = std::thread([this, &w, s = std::move(sock)]() mutable {
        serve_connection(std::move(s));
        w.done = true;
      });
    }
  }

  // Caller holds mu_.
  void reap_finished() {
    for (auto it = workers_.begin(); it != workers_.end();) {
      if (it->done) {
        it->thread.join();
        it = workers_.erase(it);
      } else {
        ++it;
      }
    }
  }

  void serve_connection(tcp::socket sock) {
    const int fd = sock.native_handle();
    try {
      beast::flat_buffer buf;
      http::request<http::string_body> req;
      http::read(sock, buf, req);
      if (websocket::is_upgrade(req)) run_websocket(std::move(sock), req);
      else serve_file(sock, req);
    } catch (const std::exception&) {
      // Client went away or sent garbage; nothing to report to.
    }
    std::lock_guard lock(mu_);
    live_fds_.erase(fd);
  }

  void run_websocket(tcp::socket sock, const http::request<http::string_body>& req) {
    websocket::stream<tcp::socket> ws(std::move(sock));
    ws.read_message_max(1 << 20);
    ws.accept(req);
    auto session = registry_.create();
    if (!session) {
      ws.text(true);
      ws.write(net::buffer(nlohmann::json{{"type", "error"}, {"seq", 1}, {"ack", nullptr}, {"code", "busy"},
                                          {"message", "session limit reached"}}
                               .dump()));
      ws.close(websocket::close_code::try_again_later);
      return;
    }
    struct Cleanup {
      SessionRegistry& r;
      std::string id;
      ~Cleanup() { r.remove(id); }
    } cleanup{registry_, session->id()};

    beast::flat_buffer buf;
    for (;;) {
      buf.clear();
      ws.read(buf);
      const auto replies = session->handle(beast::buffers_to_string(buf.data()));
      for (const auto& r : replies) {
        ws.text(true);
        ws.write(net::buffer(r.dump()));
      }
      if (session->closed()) {
        ws.close(websocket::close_code::policy_error);
        return;
      }
    }
  }

  void serve_file(tcp::socket& sock, const http::request<http::string_body>& req) {
    http::response<http::string_body> res;
    res.version(req.version());
    res.keep_alive(false);
    std::string target(req.target());
    if (auto q = target.find('?'); q != std::string::npos) target.resize(q);
    if (target == "/") target = "/index.html";
    const bool safe = target.find("..") == std::string::npos && !target.empty() && target[0] == '/';
    const auto path = std::filesystem::path(opt_.static_dir) / target.substr(1);
    if (req.method() != http::verb::get || opt_.static_dir.empty() || !safe || !std::filesystem::is_regular_file(path)) {
      res.result(http::status::not_found);
      res.set(http::field::content_type, "text/plain");
      res.body() = "not found\n";
    } else {
      std::ifstream in(path, std::ios::binary);
      std::ostringstream body;
      body << in.rdbuf();
      res.result(http::status::ok);
      res.set(http::field::content_type, std::string(content_type(path)));
      res.body() = body.str();
    }
    res.prepare_payload();
    http::write(sock, res);
    beast::error_code ec;
    sock.shutdown(tcp::socket::shutdown_send, ec);
  }

  ServerOptions opt_;
  SessionRegistry registry_;
  net::io_context io_;
  std::unique_ptr<tcp::acceptor> acceptor_;
  std::thread accept_thread_;
  std::atomic<bool> running_{false};
  unsigned short port_ = 0;
  std::mutex mu_;
  std::set<int> live_fds_;
  struct Worker {
    std::thread thread;
    std::atomic<bool> done{false};
  };
  std::list<Worker> workers_;
};

}  // namespace iglu

#include "gsc/server.hpp"

#include "gsc/teleop.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <cstdio>
#include <deque>
#include <map>
#include <memory>
#include <random>

namespace gsc {
namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

constexpr auto kTickPeriod = std::chrono::milliseconds(100);

class WsConnection;

// A TeleopSession plus its timers. Everything runs on the single io_context
// thread, so the session loop and the socket handlers never overlap; the
// session's own mailbox lock is what would keep a multi-threaded variant safe.
struct LiveSession : std::enable_shared_from_this<LiveSession> {
  LiveSession(net::io_context& io, std::string id) : session(std::move(id)), tick_timer(io), park_timer(io) {}

  TeleopSession session;
  net::steady_timer tick_timer;
  net::steady_timer park_timer;
  std::weak_ptr<WsConnection> client;
  bool ticking = false;
};

class Registry {
 public:
  Registry(net::io_context& io, const ServerOptions& opts) : io_(io), opts_(opts) {}

  std::shared_ptr<LiveSession> create() {
    std::string id;
    do {
      char buf[24];
      std::snprintf(buf, sizeof buf, "s-%08x", static_cast<unsigned>(rng_()));
      id = buf;
    } while (sessions_.count(id));
    auto s = std::make_shared<LiveSession>(io_, id);
    sessions_[id] = s;
    return s;
  }

  std::shared_ptr<LiveSession> find(const std::string& id) const {
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  void erase(const std::string& id) { sessions_.erase(id); }
  const ServerOptions& options() const { return opts_; }

 private:
  net::io_context& io_;
  ServerOptions opts_;
  std::map<std::string, std::shared_ptr<LiveSession>> sessions_;
  std::mt19937 rng_{std::random_device{}()};
};

void start_ticking(const std::shared_ptr<LiveSession>& live);

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket socket, Registry& registry)
      : ws_(std::move(socket)), registry_(registry) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.read_message_max(registry_.options().max_frame_bytes);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->attach(self->registry_.create());
      self->read();
    });
  }

  // Snapshots are droppable: a slow client loses frames instead of stalling
  // the session loop or growing the queue without bound.
  void send(const Json& msg) {
    const bool droppable = msg.value("type", "") == "state_snapshot";
    if (droppable && snapshots_queued_ >= registry_.options().queue_cap) return;
    outbox_.push_back({msg.dump(), droppable});
    if (droppable) ++snapshots_queued_;
    if (!writing_) write();
  }

 private:
  struct Outgoing {
    std::string text;
    bool snapshot;
  };

  void attach(std::shared_ptr<LiveSession> live) {
    live->park_timer.cancel();
    live->client = weak_from_this();
    live_ = std::move(live);
    start_ticking(live_);
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->park();
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->on_text(text);
      self->read();
    });
  }

  void on_text(const std::string& text) {
    if (!ws_.got_text()) {
      send(make_error(live_->session.id(), "malformed", "binary frames are not part of the protocol"));
      return;
    }
    // Resuming swaps this connection onto a parked session.
    const Json msg = Json::parse(text, nullptr, false);
    if (!msg.is_discarded() && msg.is_object() && msg.value("type", "") == "hello" &&
        validate_message(msg, Direction::ClientToServer).empty()) {
      const auto& payload = msg.value("payload", Json::object());
      if (payload.contains("resume")) {
        auto parked = registry_.find(payload["resume"].get<std::string>());
        if (parked && parked != live_ && parked->client.expired()) {
          registry_.erase(live_->session.id());
          attach(parked);
          auto replies = live_->session.handle(msg);
          replies.front()["payload"]["resumed"] = true;
          for (const auto& r : replies) send(r);
          return;
        }
      }
    }
    for (const auto& r : live_->session.handle_text(text)) send(r);
  }

  void write() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front().text),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (self->outbox_.front().snapshot) --self->snapshots_queued_;
                      self->outbox_.pop_front();
                      if (ec) {
                        self->writing_ = false;
                        return;
                      }
                      if (self->outbox_.empty()) {
                        self->writing_ = false;
                      } else {
                        self->write();
                      }
                    });
  }

  void park() {
    if (!live_) return;
    auto live = std::move(live_);
    live->client.reset();
    live->park_timer.expires_after(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(registry_.options().park_seconds)));
    live->park_timer.async_wait([&registry = registry_, id = live->session.id()](beast::error_code ec) {
      if (!ec) registry.erase(id);
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  Registry& registry_;
  beast::flat_buffer buffer_;
  std::shared_ptr<LiveSession> live_;
  std::deque<Outgoing> outbox_;
  std::size_t snapshots_queued_ = 0;
  bool writing_ = false;
};

// Steps the session at 10 Hz while a client is attached; a parked session
// keeps its state but does not advance.
void start_ticking(const std::shared_ptr<LiveSession>& live) {
  if (live->ticking) return;
  live->ticking = true;
  live->tick_timer.expires_after(kTickPeriod);
  live->tick_timer.async_wait([weak = std::weak_ptr<LiveSession>(live)](beast::error_code ec) {
    auto s = weak.lock();
    if (!s) return;
    s->ticking = false;
    if (ec) return;
    auto client = s->client.lock();
    if (!client) return;
    for (const auto& msg : s->session.tick()) client->send(msg);
    start_ticking(s);
  });
}

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket socket, Registry& registry) : stream_(std::move(socket)), registry_(registry) {}

  void run() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (!ec) self->dispatch();
    });
  }

 private:
  void dispatch() {
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/session") {
        stream_.expires_never();
        std::make_shared<WsConnection>(stream_.release_socket(), registry_)->run(std::move(req_));
        return;
      }
      return reply(http::status::not_found, "{\"error\":\"unknown endpoint\"}");
    }
    if (req_.method() == http::verb::get && req_.target() == "/scenarios") {
      return reply(http::status::ok, scenario_catalog_json().dump());
    }
    reply(http::status::not_found, "{\"error\":\"unknown endpoint\"}");
  }

  void reply(http::status status, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::content_type, "application/json");
    res->set(http::field::access_control_allow_origin, "*");
    res->body() = std::move(body);
    res->keep_alive(false);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  beast::tcp_stream stream_;
  Registry& registry_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

void accept_loop(tcp::acceptor& acceptor, Registry& registry) {
  acceptor.async_accept([&acceptor, &registry](beast::error_code ec, tcp::socket socket) {
    if (ec) return;
    std::make_shared<HttpConnection>(std::move(socket), registry)->run();
    accept_loop(acceptor, registry);
  });
}

}  // namespace

int run_server(const ServerOptions& options, const std::function<void(std::uint16_t)>& on_listening) {
  net::io_context io;
  Registry registry(io, options);
  tcp::acceptor acceptor(io);
  try {
    const tcp::endpoint endpoint(net::ip::make_address(options.host), options.port);
    acceptor.open(endpoint.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "gsc_bench serve: cannot listen on %s:%u: %s\n", options.host.c_str(),
                 static_cast<unsigned>(options.port), e.what());
    return 1;
  }
  const auto port = acceptor.local_endpoint().port();
  if (on_listening) on_listening(port);

  net::signal_set signals(io, SIGINT, SIGTERM);
  signals.async_wait([&io](beast::error_code, int) { io.stop(); });
  accept_loop(acceptor, registry);
  io.run();
  return 0;
}

}  // namespace gsc

#include "announcer/service.hpp"

#include "announcer/engine.hpp"
#include "announcer/errors.hpp"
#include "announcer/protocol.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace announcer {

using nlohmann::json;

namespace {

struct Outgoing {
  std::shared_ptr<const json> body;
  bool droppable = false;
};

std::string new_session_id() {
  static std::atomic<std::uint64_t> counter{0};
  std::random_device rd;
  const std::uint64_t salt = (std::uint64_t{rd()} << 32) ^ rd();
  return fmt::format("s{:x}-{}", salt & 0xFFFFFFFFFFULL, ++counter);
}

bool send_all(int fd, const std::string& bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      return false;
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

/// One viewer: a reader thread decoding inbound frames and a writer thread
/// draining the outbox. Sequence numbers are stamped at write time so each
/// connection sees a gapless sequence even when snapshots are dropped.
class Connection {
 public:
  Connection(int fd, std::string session, std::size_t limit) : fd_(fd), session_(std::move(session)), limit_(limit) {}
  ~Connection() {
    if (fd_ >= 0) ::close(fd_);
  }

  const std::string& session() const { return session_; }
  bool alive() const { return alive_.load(); }

  void push(std::shared_ptr<const json> body, bool droppable) {
    {
      std::lock_guard lock(mutex_);
      if (closing_) return;
      if (droppable && outbox_.size() >= limit_) {
        for (auto it = outbox_.begin(); it != outbox_.end(); ++it) {
          if (it->droppable) {
            outbox_.erase(it);
            ++dropped_;
            break;
          }
        }
        if (outbox_.size() >= limit_) {
          ++dropped_;
          return;
        }
      }
      outbox_.push_back({std::move(body), droppable});
    }
    cv_.notify_one();
  }

  /// Stop accepting new messages; the writer flushes what is queued, then hangs up.
  void close_after_flush() {
    {
      std::lock_guard lock(mutex_);
      closing_ = true;
    }
    cv_.notify_one();
  }

  void start(std::function<void(Connection&, std::string)> on_frame) {
    writer_ = std::thread([this] { write_loop(); });
    reader_ = std::thread([this, on_frame = std::move(on_frame)] { read_loop(on_frame); });
  }

  void join() {
    if (writer_.joinable()) writer_.join();
    stop_reading_ = true;
    if (reader_.joinable()) reader_.join();
  }

 private:
  void write_loop() {
    for (;;) {
      Outgoing next;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return !outbox_.empty() || closing_; });
        if (outbox_.empty()) break;
        next = std::move(outbox_.front());
        outbox_.pop_front();
      }
      json msg = *next.body;
      msg["seq"] = ++seq_;
      const std::string payload = msg.dump(-1, ' ', false, json::error_handler_t::replace);
      if (!send_all(fd_, encode_frame(payload))) {
        std::lock_guard lock(mutex_);
        closing_ = true;
        outbox_.clear();
        break;
      }
    }
    ::shutdown(fd_, SHUT_RDWR);
    alive_ = false;
  }

  void read_loop(const std::function<void(Connection&, std::string)>& on_frame) {
    FrameDecoder decoder;
    char buf[16384];
    while (!stop_reading_) {
      pollfd pfd{fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, 100);
      if (ready < 0 && errno != EINTR) break;
      if (ready <= 0) continue;
      const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
      if (n <= 0) break;
      decoder.feed(buf, static_cast<std::size_t>(n));
      while (auto frame = decoder.next()) on_frame(*this, std::move(*frame));
      if (decoder.oversized()) {
        push(std::make_shared<const json>(error_message("frame exceeds 1 MiB; closing")), false);
        break;
      }
    }
    // The peer is gone or unusable: let the writer flush and hang up.
    close_after_flush();
  }

  int fd_;
  std::string session_;
  std::size_t limit_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Outgoing> outbox_;
  bool closing_ = false;
  std::int64_t seq_ = 0;
  std::int64_t dropped_ = 0;
  std::atomic<bool> alive_{true};
  std::atomic<bool> stop_reading_{false};
  std::thread reader_;
  std::thread writer_;
};

struct Service::Impl {
  EngineConfig config;
  ServiceOptions options;
  int listen_fd = -1;
  std::atomic<bool> running{false};
  std::thread acceptor;

  mutable std::mutex conn_mutex;
  std::vector<std::shared_ptr<Connection>> connections;

  std::mutex inbox_mutex;
  std::deque<std::pair<std::string, std::string>> inbox;  // (session, payload)
  std::atomic<std::int64_t> ticks{0};
  std::atomic<double> now{0.0};
  std::shared_ptr<const json> current_config;  // guarded by conn_mutex

  void accept_loop() {
    while (running) {
      pollfd pfd{listen_fd, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, 100);
      if (ready <= 0) continue;
      const int fd = ::accept(listen_fd, nullptr, nullptr);
      if (fd < 0) continue;
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      auto conn = std::make_shared<Connection>(fd, new_session_id(), options.outbox_limit);
      {
        std::lock_guard lock(conn_mutex);
        json hello = current_config ? *current_config : json::object();
        hello["session"] = conn->session();
        conn->push(std::make_shared<const json>(std::move(hello)), false);
        connections.push_back(conn);
      }
      conn->start([this](Connection& c, std::string payload) { on_frame(c, std::move(payload)); });
      spdlog::info("viewer connected (session {})", conn->session());
    }
  }

  void on_frame(Connection& c, std::string payload) {
    // Decode eagerly so malformed input is answered on the reader's own connection.
    try {
      (void)decode_inbound(payload, c.session(), now.load());
    } catch (const ProtocolError& e) {
      c.push(std::make_shared<const json>(error_message(e.what())), false);
      return;
    }
    std::lock_guard lock(inbox_mutex);
    inbox.emplace_back(c.session(), std::move(payload));
  }

  void broadcast(json body, bool droppable) {
    auto shared = std::make_shared<const json>(std::move(body));
    std::lock_guard lock(conn_mutex);
    for (auto& c : connections) c->push(shared, droppable);
  }

  void unicast(const std::string& session, json body) {
    auto shared = std::make_shared<const json>(std::move(body));
    std::lock_guard lock(conn_mutex);
    for (auto& c : connections) {
      if (c->session() == session) c->push(shared, false);
    }
  }

  void publish_config(const QoEConfig& qoe) {
    auto body = config_message(qoe);
    {
      std::lock_guard lock(conn_mutex);
      current_config = std::make_shared<const json>(body);
    }
    broadcast(std::move(body), false);
  }

  void reap() {
    std::vector<std::shared_ptr<Connection>> dead;
    {
      std::lock_guard lock(conn_mutex);
      for (auto it = connections.begin(); it != connections.end();) {
        if (!(*it)->alive()) {
          dead.push_back(*it);
          it = connections.erase(it);
        } else {
          ++it;
        }
      }
    }
    for (auto& c : dead) {
      c->join();
      spdlog::info("viewer disconnected (session {})", c->session());
    }
  }

  void drain_inbox(Engine& engine) {
    std::deque<std::pair<std::string, std::string>> batch;
    {
      std::lock_guard lock(inbox_mutex);
      batch.swap(inbox);
    }
    for (auto& [session, payload] : batch) {
      try {
        const Inbound in = decode_inbound(payload, session, engine.world().time);
        if (const auto* fb = std::get_if<FeedbackEvent>(&in)) {
          engine.apply(*fb);
          spdlog::info("feedback {} from {}", to_string(fb->kind), session);
        } else {
          engine.set_qoe(patched(engine.qoe(), std::get<QoEPatch>(in)));
        }
        publish_config(engine.qoe());
      } catch (const std::exception& e) {
        unicast(session, error_message(e.what()));
      }
    }
  }
};

Service::Service(EngineConfig config, ServiceOptions options) : impl_(std::make_unique<Impl>()) {
  validate(config);
  impl_->config = std::move(config);
  impl_->options = std::move(options);
}

Service::~Service() {
  stop();
  if (impl_->acceptor.joinable()) impl_->acceptor.join();
  std::vector<std::shared_ptr<Connection>> all;
  {
    std::lock_guard lock(impl_->conn_mutex);
    all.swap(impl_->connections);
  }
  for (auto& c : all) {
    c->close_after_flush();
    c->join();
  }
  if (impl_->listen_fd >= 0) ::close(impl_->listen_fd);
}

int Service::start() {
  auto& s = *impl_;
  s.listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (s.listen_fd < 0) throw std::runtime_error("socket() failed");
  const int one = 1;
  ::setsockopt(s.listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(s.options.port));
  if (::inet_pton(AF_INET, s.options.host.c_str(), &addr.sin_addr) != 1) {
    throw ConfigError("serve.host", "not an IPv4 address: " + s.options.host);
  }
  if (::bind(s.listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw std::runtime_error(fmt::format("cannot bind {}:{}", s.options.host, s.options.port));
  }
  if (::listen(s.listen_fd, 16) != 0) throw std::runtime_error("listen() failed");
  socklen_t len = sizeof addr;
  ::getsockname(s.listen_fd, reinterpret_cast<sockaddr*>(&addr), &len);
  s.current_config = std::make_shared<const json>(config_message(s.config.qoe));
  s.running = true;
  s.acceptor = std::thread([&s] { s.accept_loop(); });
  const int port = ntohs(addr.sin_port);
  spdlog::info("serving on {}:{}", s.options.host, port);
  return port;
}

void Service::run() {
  auto& s = *impl_;
  if (!s.running) start();
  while (s.running && clients() < s.options.wait_clients) std::this_thread::sleep_for(std::chrono::milliseconds(5));

  Engine engine(s.config);
  const double rate = s.config.world.tick_rate;
  const auto limit = s.options.duration ? std::llround(*s.options.duration * rate) : -1;
  const auto start = std::chrono::steady_clock::now();
  std::int64_t tick = 0;
  while (s.running && (limit < 0 || tick < limit)) {
    s.drain_inbox(engine);
    const EngineTick t = engine.tick();
    ++tick;
    s.ticks = tick;
    s.now = engine.world().time;

    if (t.announced) s.broadcast(event_message(*t.announced), false);
    if (t.shot) s.broadcast(shot_message(*t.shot), false);
    for (const auto& p : t.prompts) s.broadcast(prompt_message(p), false);
    if (t.config_changed) s.publish_config(engine.qoe());
    if (tick % 2 == 0) s.broadcast(snapshot_message(engine.world(), t.record), true);

    if (tick % 50 == 0) s.reap();
    if (s.options.time_scale > 0.0) {
      const auto due = start + std::chrono::duration<double>(static_cast<double>(tick) / rate / s.options.time_scale);
      std::this_thread::sleep_until(due);
    }
  }
  if (s.config.preferences_path) save(engine.preferences(), *s.config.preferences_path);
  s.running = false;
  // The stream is over: flush what each viewer has queued, then hang up.
  std::lock_guard lock(s.conn_mutex);
  for (auto& c : s.connections) c->close_after_flush();
}

void Service::stop() { impl_->running = false; }

int Service::clients() const {
  std::lock_guard lock(impl_->conn_mutex);
  int n = 0;
  for (const auto& c : impl_->connections) n += c->alive() ? 1 : 0;
  return n;
}

std::int64_t Service::ticks() const { return impl_->ticks.load(); }

}  // namespace announcer

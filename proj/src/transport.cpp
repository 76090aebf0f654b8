#include "bitweave/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <utility>

#include "json.hpp"

namespace bitweave {

namespace {

using nlohmann::json;

[[noreturn]] void throw_errno(const std::string& what) {
  throw TransportError(what + ": " + std::strerror(errno));
}

void send_all(int fd, const char* data, std::size_t n) {
  std::size_t sent = 0;
  while (sent < n) {
    const ssize_t r = ::send(fd, data + sent, n - sent, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw_errno("send failed");
    }
    sent += static_cast<std::size_t>(r);
  }
}

/// Reads exactly n bytes. Returns false only on EOF before the first byte.
bool recv_all(int fd, char* data, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, data + got, n - got, 0);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw_errno("recv failed");
    }
    if (r == 0) {
      if (got == 0) return false;
      throw TransportError("connection closed mid-frame");
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

int tcp_listen(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE | AI_NUMERICSERV;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res) != 0)
    throw TransportError("cannot resolve listen address " + host);
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 1) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw TransportError("cannot bind " + host + ":" + service);
  return fd;
}

int bound_port(int fd) {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0)
    throw_errno("getsockname failed");
  return static_cast<int>(ntohs(addr.sin_port));
}

int tcp_connect(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_NUMERICSERV;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0)
    throw TransportError("cannot resolve " + host);
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw TransportError("cannot connect to " + host + ":" + service);
  return fd;
}

json config_json(const WireConfig& cfg) {
  return json{{"rank", cfg.rank},
              {"repeats", cfg.repeats},
              {"warmup", cfg.warmup},
              {"threads", cfg.threads},
              {"seed", cfg.seed}};
}

/// Envelope check: a frame that fails this is malformed and the connection
/// must close; anything past it can earn a structured error response.
bool valid_envelope(const json& msg) {
  return msg.is_object() && msg.contains("v") && msg["v"].is_number_integer() && msg["v"] == 1 &&
         msg.contains("type") && msg["type"].is_string() && msg.contains("id") &&
         msg["id"].is_number_unsigned();
}

json error_response(std::uint64_t id, const std::string& type, const std::string& message) {
  return json{{"v", 1},     {"type", type},      {"id", id},
              {"status", "error"}, {"message", message}};
}

}  // namespace

FramedSocket& FramedSocket::operator=(FramedSocket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

void FramedSocket::send_text(const std::string& payload) {
  if (fd_ < 0) throw TransportError("socket is closed");
  if (payload.size() > kMaxFrameBytes) throw TransportError("frame too large to send");
  const auto n = static_cast<std::uint32_t>(payload.size());
  char header[4] = {static_cast<char>(n >> 24), static_cast<char>(n >> 16),
                    static_cast<char>(n >> 8), static_cast<char>(n)};
  send_all(fd_, header, sizeof header);
  send_all(fd_, payload.data(), payload.size());
}

std::optional<std::string> FramedSocket::recv_text() {
  if (fd_ < 0) throw TransportError("socket is closed");
  unsigned char header[4];
  if (!recv_all(fd_, reinterpret_cast<char*>(header), sizeof header)) return std::nullopt;
  const std::uint32_t n = (static_cast<std::uint32_t>(header[0]) << 24) |
                          (static_cast<std::uint32_t>(header[1]) << 16) |
                          (static_cast<std::uint32_t>(header[2]) << 8) |
                          static_cast<std::uint32_t>(header[3]);
  if (n > kMaxFrameBytes) throw TransportError("frame exceeds the size limit");
  std::string payload(n, '\0');
  if (n > 0 && !recv_all(fd_, payload.data(), n))
    throw TransportError("connection closed mid-frame");
  return payload;
}

void FramedSocket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

EvalServer::EvalServer(Environment& env, std::string tensor_id, std::vector<Index> dims,
                       WireConfig config, const std::string& host, int port)
    : env_(env), tensor_id_(std::move(tensor_id)), dims_(std::move(dims)), config_(config) {
  listen_fd_ = tcp_listen(host, port);
  port_ = bound_port(listen_fd_);
}

EvalServer::~EvalServer() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void EvalServer::request_stop() {
  stop_.store(true);
  if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
  const int active = active_fd_.load();
  if (active >= 0) ::shutdown(active, SHUT_RDWR);
}

void EvalServer::run() {
  while (!stop_.load()) {
    const int conn = ::accept(listen_fd_, nullptr, nullptr);
    if (conn < 0) {
      if (errno == EINTR) continue;
      break;   // listen socket shut down
    }
    active_fd_.store(conn);
    FramedSocket sock(conn);
    bool shutdown_requested = false;
    try {
      shutdown_requested = handle_connection(sock);
    } catch (const TransportError&) {
      // Framing violation or connection loss: drop the client, keep serving.
    }
    active_fd_.store(-1);
    if (shutdown_requested) stop_.store(true);
  }
  // Stop accepting for good; otherwise the kernel would keep queueing
  // connections that nobody will ever answer.
  const int fd = listen_fd_;
  listen_fd_ = -1;
  if (fd >= 0) ::close(fd);
}

bool EvalServer::handle_connection(FramedSocket& sock) {
  while (!stop_.load()) {
    const auto text = sock.recv_text();
    if (!text) return false;   // orderly close

    const json msg = json::parse(*text, nullptr, false);
    if (msg.is_discarded() || !valid_envelope(msg)) return false;   // malformed: close
    const std::uint64_t id = msg["id"].get<std::uint64_t>();
    const std::string type = msg["type"].get<std::string>();

    if (type == "HELLO") {
      json reply{{"v", 1},
                 {"type", "HELLO"},
                 {"id", id},
                 {"status", "ok"},
                 {"tensor", tensor_id_},
                 {"budget", env_.budget().per_mode},
                 {"baseline_seconds", env_.baseline_seconds()},
                 {"baseline_plan", format_plan(env_.baseline_plan())},
                 {"config", config_json(config_)}};
      if (!dims_.empty()) reply["dims"] = dims_;
      sock.send_text(reply.dump());
      continue;
    }

    if (type == "SHUTDOWN") {
      sock.send_text(json{{"v", 1}, {"type", "SHUTDOWN"}, {"id", id}, {"status", "ok"}}.dump());
      return true;
    }

    if (type != "EVAL") {
      sock.send_text(error_response(id, type, "unknown message type").dump());
      continue;
    }

    if (msg.contains("tensor") && msg["tensor"].is_string() &&
        msg["tensor"].get<std::string>() != tensor_id_) {
      sock.send_text(error_response(id, "EVAL", "tensor id mismatch").dump());
      continue;
    }
    if (msg.contains("config") && msg["config"].is_object()) {
      // The cache is keyed on the plan alone, so per-request overrides would
      // poison it; stated settings must match the server's exactly.
      const json mine = config_json(config_);
      std::string clash;
      for (const auto& [key, value] : msg["config"].items()) {
        if (!mine.contains(key) || mine[key] != value) {
          clash = key;
          break;
        }
      }
      if (!clash.empty()) {
        sock.send_text(
            error_response(id, "EVAL", "config override not supported, field: " + clash).dump());
        continue;
      }
    }
    if (!msg.contains("plan") || !msg["plan"].is_string()) {
      sock.send_text(error_response(id, "EVAL", "missing plan string").dump());
      continue;
    }

    EncodingPlan plan;
    try {
      plan = parse_plan(msg["plan"].get<std::string>());
      require_valid_plan(plan, env_.budget());
    } catch (const std::exception& e) {
      sock.send_text(error_response(id, "EVAL", e.what()).dump());
      continue;
    }

    EvalRecord rec;
    try {
      rec = env_.evaluate(plan);
    } catch (const std::exception& e) {
      sock.send_text(error_response(id, "EVAL", e.what()).dump());
      continue;
    }
    json reply{{"v", 1},
               {"type", "EVAL"},
               {"id", id},
               {"status", rec.timed_out ? "timeout" : "ok"},
               {"seconds", rec.seconds},
               {"baseline_seconds", env_.baseline_seconds()},
               {"speedup", rec.speedup},
               {"cached", rec.cached},
               {"message", ""}};
    sock.send_text(reply.dump());
  }
  return false;
}

EvalClient::EvalClient(std::string host, int port) : host_(std::move(host)), port_(port) {
  connect_and_hello();
  reconnects_ = 0;   // the initial connection is not a reconnect
}

EvalClient::~EvalClient() = default;

void EvalClient::connect_and_hello() {
  sock_ = std::make_unique<FramedSocket>(tcp_connect(host_, port_));
  ++reconnects_;

  const std::uint64_t id = next_id_++;
  const json req{{"v", 1}, {"type", "HELLO"}, {"id", id}};
  sock_->send_text(req.dump());
  const auto text = sock_->recv_text();
  if (!text) throw TransportError("server closed the connection during the handshake");
  const json msg = json::parse(*text, nullptr, false);
  if (msg.is_discarded() || !valid_envelope(msg) || msg["type"] != "HELLO")
    throw TransportError("malformed handshake response");
  if (msg["id"].get<std::uint64_t>() != id) throw TransportError("response id mismatch");

  ServerInfo info;
  info.tensor_id = msg.value("tensor", std::string{});
  if (msg.contains("dims")) info.dims = msg["dims"].get<std::vector<Index>>();
  if (!msg.contains("budget")) throw TransportError("handshake response lacks a bit budget");
  info.budget.per_mode = msg["budget"].get<std::vector<int>>();
  info.baseline_seconds = msg.value("baseline_seconds", 0.0);
  info.baseline_plan = msg.value("baseline_plan", std::string{});
  if (msg.contains("config")) {
    const json& cfg = msg["config"];
    info.config.rank = cfg.value("rank", info.config.rank);
    info.config.repeats = cfg.value("repeats", info.config.repeats);
    info.config.warmup = cfg.value("warmup", info.config.warmup);
    info.config.threads = cfg.value("threads", info.config.threads);
    info.config.seed = cfg.value("seed", info.config.seed);
  }
  info_ = std::move(info);
}

std::string EvalClient::roundtrip(const std::string& request) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      if (!sock_) connect_and_hello();
      sock_->send_text(request);
      const auto text = sock_->recv_text();
      if (!text) throw TransportError("server closed the connection");
      return *text;
    } catch (const TransportError&) {
      sock_.reset();
      if (attempt == 1) throw;
    }
  }
  throw TransportError("unreachable");
}

EvalOutcome EvalClient::evaluate(const EncodingPlan& plan) { return evaluate(format_plan(plan)); }

EvalOutcome EvalClient::evaluate(const std::string& plan_text) {
  const std::uint64_t id = next_id_++;
  const json req{
      {"v", 1}, {"type", "EVAL"}, {"id", id}, {"tensor", info_.tensor_id}, {"plan", plan_text}};
  const std::string text = roundtrip(req.dump());

  const json msg = json::parse(text, nullptr, false);
  if (msg.is_discarded() || !valid_envelope(msg) || msg["type"] != "EVAL")
    throw TransportError("malformed evaluation response");
  if (msg["id"].get<std::uint64_t>() != id) throw TransportError("response id mismatch");

  EvalOutcome out;
  out.id = id;
  out.status = msg.value("status", std::string{"error"});
  out.seconds = msg.value("seconds", 0.0);
  out.baseline_seconds = msg.value("baseline_seconds", 0.0);
  out.speedup = msg.value("speedup", 0.0);
  out.cached = msg.value("cached", false);
  out.message = msg.value("message", std::string{});
  return out;
}

void EvalClient::shutdown_server() {
  const std::uint64_t id = next_id_++;
  const json req{{"v", 1}, {"type", "SHUTDOWN"}, {"id", id}};
  const std::string text = roundtrip(req.dump());
  const json msg = json::parse(text, nullptr, false);
  if (msg.is_discarded() || !valid_envelope(msg) || msg["type"] != "SHUTDOWN" ||
      msg["id"].get<std::uint64_t>() != id)
    throw TransportError("malformed shutdown response");
}

RemoteScorer::RemoteScorer(const std::string& host, int port) : client_(host, port) {
  const ServerInfo& info = client_.info();
  budget_ = info.budget;
  if (budget_.n_modes() == 0) throw TransportError("server reported an empty bit budget");
  baseline_plan_ = parse_plan(info.baseline_plan);
  require_valid_plan(baseline_plan_, budget_);
  baseline_s_ = info.baseline_seconds;
}

EvalRecord RemoteScorer::score(const EncodingPlan& plan) {
  const EvalOutcome out = client_.evaluate(plan);
  if (out.status == "error") throw DomainError("remote evaluation failed: " + out.message);
  EvalRecord rec;
  rec.seconds = out.seconds;
  if (out.status == "timeout") {
    rec.timed_out = true;   // the local floor policy takes over
  } else {
    rec.speedup = out.speedup;
  }
  return rec;
}

}  // namespace bitweave

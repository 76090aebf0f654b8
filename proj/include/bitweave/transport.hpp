#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bitweave/environment.hpp"

namespace bitweave {

/// Socket- or protocol-level failure (connection loss, framing, bad ids).
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Frames bigger than this are treated as hostile and close the connection.
inline constexpr std::uint32_t kMaxFrameBytes = 1u << 20;

/// Length-prefixed text frames over a connected TCP socket: 4-byte
/// big-endian payload size, then the UTF-8 payload. Owns the descriptor.
class FramedSocket {
 public:
  explicit FramedSocket(int fd) : fd_(fd) {}
  ~FramedSocket() { close(); }
  FramedSocket(const FramedSocket&) = delete;
  FramedSocket& operator=(const FramedSocket&) = delete;
  FramedSocket(FramedSocket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  FramedSocket& operator=(FramedSocket&& other) noexcept;

  void send_text(const std::string& payload);
  /// One whole frame; empty optional on an orderly close between frames.
  std::optional<std::string> recv_text();
  void close();
  int fd() const { return fd_; }

 private:
  int fd_ = -1;
};

/// Benchmark settings pinned by a server; clients may assert but not change
/// them, since the cache is keyed on the plan alone.
struct WireConfig {
  int rank = 16;
  int repeats = 10;
  int warmup = 1;
  int threads = 0;
  std::uint64_t seed = 0x5EED;
};

/// What a HELLO exchange reveals about the serving side.
struct ServerInfo {
  std::string tensor_id;
  std::vector<Index> dims;       // empty when the server has no real tensor
  BitBudget budget;
  double baseline_seconds = 0.0;
  std::string baseline_plan;
  WireConfig config;
};

/// One evaluation round trip, exactly as serialized on the wire.
struct EvalOutcome {
  std::uint64_t id = 0;
  std::string status;            // "ok", "timeout", or "error"
  double seconds = 0.0;          // candidate total seconds
  double baseline_seconds = 0.0;
  double speedup = 0.0;
  bool cached = false;
  std::string message;
};

/// Serves one environment over TCP: single connection at a time, one
/// request in flight, evaluations strictly serialized. HELLO exchanges
/// capabilities, EVAL scores plans (cache first), SHUTDOWN ends the server.
/// A malformed frame closes the connection; an invalid plan only earns an
/// error response.
class EvalServer {
 public:
  EvalServer(Environment& env, std::string tensor_id, std::vector<Index> dims,
             WireConfig config, const std::string& host, int port);
  ~EvalServer();

  int port() const { return port_; }
  /// Accept loop; returns after a SHUTDOWN request or request_stop().
  void run();
  /// Unblocks run() from another thread.
  void request_stop();

 private:
  bool handle_connection(FramedSocket& sock);

  Environment& env_;
  std::string tensor_id_;
  std::vector<Index> dims_;
  WireConfig config_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stop_{false};
  std::atomic<int> active_fd_{-1};
};

/// Synchronous client: connects and replays HELLO on construction and after
/// any connection loss, matches response ids to request ids.
class EvalClient {
 public:
  EvalClient(std::string host, int port);
  ~EvalClient();

  const ServerInfo& info() const { return info_; }
  EvalOutcome evaluate(const EncodingPlan& plan);
  EvalOutcome evaluate(const std::string& plan_text);
  void shutdown_server();
  /// Connections re-established so far (0 on an uninterrupted session).
  int reconnects() const { return reconnects_; }

 private:
  void connect_and_hello();
  std::string roundtrip(const std::string& request);

  std::string host_;
  int port_;
  std::unique_ptr<FramedSocket> sock_;
  ServerInfo info_;
  std::uint64_t next_id_ = 1;
  int reconnects_ = 0;
};

/// Plugs a remote server into the local environment stack. Timeout statuses
/// surface as timed-out records so the local floor policy applies; error
/// statuses throw.
class RemoteScorer : public PlanScorer {
 public:
  RemoteScorer(const std::string& host, int port);

  const BitBudget& budget() const override { return budget_; }
  double baseline_seconds() const override { return baseline_s_; }
  const EncodingPlan& baseline_plan() const override { return baseline_plan_; }
  EvalRecord score(const EncodingPlan& plan) override;

  EvalClient& client() { return client_; }

 private:
  EvalClient client_;
  BitBudget budget_;
  EncodingPlan baseline_plan_;
  double baseline_s_ = 0.0;
};

}  // namespace bitweave

#pragma once

#include <array>
#include <atomic>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "sqcrypt/cotp.hpp"

// Loopback TCP transport for oracle queries.
//
// Frame: u32 big-endian payload length ∥ 16-byte session id ∥ payload.
namespace sqcrypt::transport {

using SessionId = std::array<std::uint8_t, 16>;

inline constexpr std::size_t kHeaderBytes = 4 + 16;
inline constexpr std::size_t kMaxPayload = std::size_t{16} << 20;

struct Frame {
  SessionId session{};
  Bytes payload;
  friend bool operator==(const Frame&, const Frame&) = default;
};

Bytes frame(const Frame& f);  // FrameTooLarge
Frame unframe(ByteView b);    // FrameTooLarge, MalformedMessage

// Incremental decoder for a byte stream carrying frames from many sessions.
class FrameDecoder {
 public:
  void feed(ByteView bytes);  // FrameTooLarge on an oversized header
  // Next complete frame in arrival order.
  std::optional<Frame> next();
  // Next complete payload for one session; other sessions keep their queues.
  std::optional<Bytes> nextFor(const SessionId& s);
  std::size_t buffered() const { return buf_.size(); }

 private:
  void drain();

  Bytes buf_;
  std::deque<Frame> ready_;
};

SessionId randomSessionId(Csprng& rng);

// Serves an oracle on 127.0.0.1 with one thread per connection.
class SocketOracleServer {
 public:
  explicit SocketOracleServer(std::shared_ptr<const cotp::Oracle> oracle);
  ~SocketOracleServer();
  SocketOracleServer(const SocketOracleServer&) = delete;
  SocketOracleServer& operator=(const SocketOracleServer&) = delete;

  std::uint16_t port() const { return port_; }
  std::uint64_t framesServed() const { return served_.load(); }
  void stop();

 private:
  void acceptLoop();
  void serve(int fd);

  std::shared_ptr<const cotp::Oracle> oracle_;
  int listenFd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> served_{0};
  std::thread acceptor_;
  std::mutex mu_;
  std::vector<int> clients_;
  std::vector<std::thread> workers_;
};

// Oracle client over one TCP connection; safe to share between threads.
class SocketChannel final : public cotp::OracleChannel {
 public:
  SocketChannel(std::uint16_t port, SessionId session);
  ~SocketChannel() override;

  std::optional<cotp::OracleAnswer> query(const cotp::OracleQuery& q) override;  // TransportFailure

 private:
  int fd_ = -1;
  SessionId session_;
  std::mutex mu_;
  FrameDecoder decoder_;
};

// Blocking helpers on a connected socket; TransportFailure on error or EOF.
void sendAll(int fd, ByteView b);
Frame readFrame(int fd, FrameDecoder& decoder, const SessionId* session = nullptr);

}  // namespace sqcrypt::transport

#include "sqcrypt/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

namespace sqcrypt::transport {

namespace {

std::uint32_t readBe32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

[[noreturn]] void ioFail(const char* what) {
  throw Error(Errc::TransportFailure, std::string(what) + ": " + std::strerror(errno));
}

void setNoDelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

Bytes frame(const Frame& f) {
  if (f.payload.size() > kMaxPayload) throw Error(Errc::FrameTooLarge, "frame payload exceeds 16 MiB");
  const auto n = static_cast<std::uint32_t>(f.payload.size());
  Bytes out;
  out.reserve(kHeaderBytes + n);
  out.push_back(static_cast<std::uint8_t>(n >> 24));
  out.push_back(static_cast<std::uint8_t>(n >> 16));
  out.push_back(static_cast<std::uint8_t>(n >> 8));
  out.push_back(static_cast<std::uint8_t>(n));
  out.insert(out.end(), f.session.begin(), f.session.end());
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  return out;
}

Frame unframe(ByteView b) {
  if (b.size() < kHeaderBytes) throw Error(Errc::MalformedMessage, "short frame");
  const std::uint32_t n = readBe32(b.data());
  if (n > kMaxPayload) throw Error(Errc::FrameTooLarge, "frame payload exceeds 16 MiB");
  if (b.size() != kHeaderBytes + n) throw Error(Errc::MalformedMessage, "frame length mismatch");
  Frame f;
  std::copy_n(b.begin() + 4, 16, f.session.begin());
  f.payload.assign(b.begin() + kHeaderBytes, b.end());
  return f;
}

void FrameDecoder::feed(ByteView bytes) {
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
  drain();
}

void FrameDecoder::drain() {
  std::size_t off = 0;
  while (buf_.size() - off >= kHeaderBytes) {
    const std::uint32_t n = readBe32(buf_.data() + off);
    if (n > kMaxPayload) {
      buf_.clear();
      throw Error(Errc::FrameTooLarge, "frame payload exceeds 16 MiB");
    }
    if (buf_.size() - off < kHeaderBytes + n) break;
    Frame f;
    std::copy_n(buf_.begin() + static_cast<std::ptrdiff_t>(off + 4), 16, f.session.begin());
    f.payload.assign(buf_.begin() + static_cast<std::ptrdiff_t>(off + kHeaderBytes),
                     buf_.begin() + static_cast<std::ptrdiff_t>(off + kHeaderBytes + n));
    ready_.push_back(std::move(f));
    off += kHeaderBytes + n;
  }
  buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(off));
}

std::optional<Frame> FrameDecoder::next() {
  if (ready_.empty()) return std::nullopt;
  Frame f = std::move(ready_.front());
  ready_.pop_front();
  return f;
}

std::optional<Bytes> FrameDecoder::nextFor(const SessionId& s) {
  auto it = std::find_if(ready_.begin(), ready_.end(), [&](const Frame& f) { return f.session == s; });
  if (it == ready_.end()) return std::nullopt;
  Bytes p = std::move(it->payload);
  ready_.erase(it);
  return p;
}

SessionId randomSessionId(Csprng& rng) {
  SessionId s{};
  rng.fill(s);
  return s;
}

void sendAll(int fd, ByteView b) {
  std::size_t off = 0;
  while (off < b.size()) {
    const ssize_t k = ::send(fd, b.data() + off, b.size() - off, MSG_NOSIGNAL);
    if (k < 0) {
      if (errno == EINTR) continue;
      ioFail("send");
    }
    off += static_cast<std::size_t>(k);
  }
}

Frame readFrame(int fd, FrameDecoder& decoder, const SessionId* session) {
  std::array<std::uint8_t, 64 * 1024> chunk{};
  for (;;) {
    if (session) {
      if (auto p = decoder.nextFor(*session)) return Frame{*session, std::move(*p)};
    } else if (auto f = decoder.next()) {
      return std::move(*f);
    }
    const ssize_t k = ::recv(fd, chunk.data(), chunk.size(), 0);
    if (k == 0) throw Error(Errc::TransportFailure, "connection closed");
    if (k < 0) {
      if (errno == EINTR) continue;
      ioFail("recv");
    }
    decoder.feed(ByteView(chunk.data(), static_cast<std::size_t>(k)));
  }
}

SocketOracleServer::SocketOracleServer(std::shared_ptr<const cotp::Oracle> oracle) : oracle_(std::move(oracle)) {
  listenFd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listenFd_ < 0) ioFail("socket");
  int one = 1;
  ::setsockopt(listenFd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(listenFd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(listenFd_);
    ioFail("bind");
  }
  if (::listen(listenFd_, 16) != 0) {
    ::close(listenFd_);
    ioFail("listen");
  }
  socklen_t len = sizeof addr;
  ::getsockname(listenFd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { acceptLoop(); });
}

SocketOracleServer::~SocketOracleServer() { stop(); }

void SocketOracleServer::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listenFd_, SHUT_RDWR);
  ::close(listenFd_);
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    for (int fd : clients_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
}

void SocketOracleServer::acceptLoop() {
  while (!stopping_.load()) {
    const int fd = ::accept(listenFd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    setNoDelay(fd);
    std::lock_guard lock(mu_);
    if (stopping_.load()) {
      ::close(fd);
      return;
    }
    clients_.push_back(fd);
    workers_.emplace_back([this, fd] { serve(fd); });
  }
}

void SocketOracleServer::serve(int fd) {
  FrameDecoder decoder;
  try {
    for (;;) {
      Frame req = readFrame(fd, decoder);
      Frame resp{req.session, oracle_->queryWire(req.payload)};
      sendAll(fd, frame(resp));
      served_.fetch_add(1);
    }
  } catch (const Error&) {
    // Peer closed, or sent an oversized frame; drop the connection.
  }
  std::lock_guard lock(mu_);
  clients_.erase(std::remove(clients_.begin(), clients_.end(), fd), clients_.end());
  ::close(fd);
}

SocketChannel::SocketChannel(std::uint16_t port, SessionId session) : session_(session) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) ioFail("socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd_);
    ioFail("connect");
  }
  setNoDelay(fd_);
}

SocketChannel::~SocketChannel() {
  if (fd_ >= 0) ::close(fd_);
}

std::optional<cotp::OracleAnswer> SocketChannel::query(const cotp::OracleQuery& q) {
  std::lock_guard lock(mu_);
  sendAll(fd_, frame(Frame{session_, q.encode()}));
  const Frame resp = readFrame(fd_, decoder_, &session_);
  try {
    return cotp::decodeResponse(resp.payload);
  } catch (const Error&) {
    throw Error(Errc::TransportFailure, "undecodable oracle response");
  }
}

}  // namespace sqcrypt::transport

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <string>

namespace splitreloc {

// Thin RAII wrapper over a connected TCP socket. Failures raise
// Errc::connection_error.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }

  void send_all(const void* data, size_t len);
  // Reads exactly len bytes; raises on EOF or error. When a receive timeout
  // is set, `cancel` is polled between waits and raises when it flips.
  void recv_exact(void* data, size_t len, const std::atomic<bool>* cancel = nullptr);
  // Like recv_exact, but a clean EOF before the first byte returns false.
  bool recv_exact_or_eof(void* data, size_t len,
                         const std::atomic<bool>* cancel = nullptr);

  // Bounds each blocking recv so cancellation stays responsive.
  void set_recv_timeout(double seconds);

  // Unblocks any reader/writer, then releases the descriptor.
  void shutdown_and_close();
  void close();

 private:
  int fd_ = -1;
};

Socket tcp_connect(const std::string& host, uint16_t port);

class Listener {
 public:
  // port 0 binds an ephemeral port; see port().
  Listener(const std::string& host, uint16_t port);
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  uint16_t port() const { return port_; }
  // Blocks; returns an invalid socket once the listener is closed.
  Socket accept();
  // Wakes any blocked accept() and marks the listener closed. Safe to call
  // from another thread; descriptors are released by the destructor, which
  // must run after the accepting thread has stopped using this object.
  void close();

 private:
  int fd_ = -1;
  int wake_fd_[2] = {-1, -1};  // self-pipe to interrupt accept()
  std::atomic<bool> closed_{false};
  uint16_t port_ = 0;
};

}  // namespace splitreloc

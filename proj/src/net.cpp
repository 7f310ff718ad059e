#include "splitreloc/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "splitreloc/errors.hpp"

namespace splitreloc {

namespace {

std::string errno_text(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

}  // namespace

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = o.fd_;
    o.fd_ = -1;
  }
  return *this;
}

void Socket::send_all(const void* data, size_t len) {
  const uint8_t* p = static_cast<const uint8_t*>(data);
  while (len > 0) {
    ssize_t n = ::send(fd_, p, len, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      raise(Errc::connection_error, errno_text("send"));
    }
    p += n;
    len -= static_cast<size_t>(n);
  }
}

void Socket::recv_exact(void* data, size_t len, const std::atomic<bool>* cancel) {
  if (!recv_exact_or_eof(data, len, cancel)) {
    raise(Errc::connection_error, "connection closed by peer");
  }
}

bool Socket::recv_exact_or_eof(void* data, size_t len,
                               const std::atomic<bool>* cancel) {
  uint8_t* p = static_cast<uint8_t*>(data);
  size_t got = 0;
  while (got < len) {
    ssize_t n = ::recv(fd_, p + got, len - got, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        if (cancel && cancel->load()) {
          raise(Errc::connection_error, "recv canceled");
        }
        continue;
      }
      raise(Errc::connection_error, errno_text("recv"));
    }
    if (n == 0) {
      if (got == 0) return false;
      raise(Errc::connection_error, "connection closed mid-frame");
    }
    got += static_cast<size_t>(n);
  }
  return true;
}

void Socket::set_recv_timeout(double seconds) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(seconds);
  tv.tv_usec = static_cast<suseconds_t>((seconds - static_cast<double>(tv.tv_sec)) * 1e6);
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
}

void Socket::shutdown_and_close() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  close();
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Socket tcp_connect(const std::string& host, uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res);
  if (rc != 0) {
    raise(Errc::connection_error,
          "resolve " + host + ": " + std::string(gai_strerror(rc)));
  }
  int fd = -1;
  int saved_errno = 0;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) {
      saved_errno = errno;
      continue;
    }
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    saved_errno = errno;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) {
    errno = saved_errno;
    raise(Errc::connection_error, errno_text(("connect " + host).c_str()));
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return Socket(fd);
}

Listener::Listener(const std::string& host, uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(),
                         std::to_string(port).c_str(), &hints, &res);
  if (rc != 0) {
    raise(Errc::connection_error,
          "resolve " + host + ": " + std::string(gai_strerror(rc)));
  }
  int saved_errno = 0;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd_ < 0) {
      saved_errno = errno;
      continue;
    }
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd_, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd_, 16) == 0) {
      sockaddr_storage sa{};
      socklen_t sl = sizeof(sa);
      if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &sl) == 0) {
        if (sa.ss_family == AF_INET) {
          port_ = ntohs(reinterpret_cast<sockaddr_in*>(&sa)->sin_port);
        } else if (sa.ss_family == AF_INET6) {
          port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&sa)->sin6_port);
        }
      }
      break;
    }
    saved_errno = errno;
    ::close(fd_);
    fd_ = -1;
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) {
    errno = saved_errno;
    raise(Errc::connection_error, errno_text("bind/listen"));
  }
  if (::pipe(wake_fd_) != 0) {
    int e = errno;
    ::close(fd_);
    fd_ = -1;
    errno = e;
    raise(Errc::connection_error, errno_text("pipe"));
  }
}

Listener::~Listener() {
  close();
  if (fd_ >= 0) ::close(fd_);
  for (int fd : wake_fd_) {
    if (fd >= 0) ::close(fd);
  }
}

Socket Listener::accept() {
  while (!closed_.load()) {
    pollfd fds[2] = {{fd_, POLLIN, 0}, {wake_fd_[0], POLLIN, 0}};
    int rc = ::poll(fds, 2, -1);
    if (rc < 0) {
      if (errno == EINTR) continue;
      return Socket();
    }
    if (fds[1].revents != 0) return Socket();  // woken by close()
    if ((fds[0].revents & POLLIN) == 0) continue;
    int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return Socket(fd);
    }
    if (errno == EINTR || errno == ECONNABORTED) continue;
    return Socket();
  }
  return Socket();
}

void Listener::close() {
  if (closed_.exchange(true)) return;
  char byte = 1;
  // best-effort wake; the descriptor stays valid until the destructor
  ssize_t ignored = ::write(wake_fd_[1], &byte, 1);
  (void)ignored;
}

}  // namespace splitreloc

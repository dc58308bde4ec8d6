#include "splatsim/proto/server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>
#include <streambuf>
#include <thread>

#include "splatsim/common/error.hpp"
#include "splatsim/common/log.hpp"

namespace splatsim::proto {
namespace {

std::string errno_text() { return std::strerror(errno); }

bool send_all(int fd, const char* data, std::size_t size) {
  while (size > 0) {
    const ssize_t n = ::send(fd, data, size, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    data += n;
    size -= static_cast<std::size_t>(n);
  }
  return true;
}

/// Bidirectional stream buffer over a connected socket.
class SocketBuf : public std::streambuf {
 public:
  explicit SocketBuf(int fd) : fd_(fd) {
    setg(in_.data(), in_.data(), in_.data());
    setp(out_.data(), out_.data() + out_.size());
  }

 protected:
  int_type underflow() override {
    ssize_t n;
    do n = ::recv(fd_, in_.data(), in_.size(), 0);
    while (n < 0 && errno == EINTR);
    if (n <= 0) return traits_type::eof();
    setg(in_.data(), in_.data(), in_.data() + n);
    return traits_type::to_int_type(in_[0]);
  }
  int_type overflow(int_type ch) override {
    if (sync() != 0) return traits_type::eof();
    if (!traits_type::eq_int_type(ch, traits_type::eof())) {
      *pptr() = traits_type::to_char_type(ch);
      pbump(1);
    }
    return traits_type::not_eof(ch);
  }
  int sync() override {
    const auto size = static_cast<std::size_t>(pptr() - pbase());
    if (size > 0 && !send_all(fd_, pbase(), size)) return -1;
    setp(out_.data(), out_.data() + out_.size());
    return 0;
  }

 private:
  int fd_;
  std::array<char, 1 << 16> in_{};
  std::array<char, 1 << 16> out_{};
};

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &found); rc != 0 || !found)
    throw IoError("cannot resolve " + host + ": " + gai_strerror(rc));
  sockaddr_in addr{};
  std::memcpy(&addr, found->ai_addr, sizeof(addr));
  ::freeaddrinfo(found);
  addr.sin_port = htons(port);
  return addr;
}

}  // namespace

ReadStatus read_line(std::istream& in, std::string& line, std::size_t max_line) {
  line.clear();
  auto* buf = in.rdbuf();
  bool any = false, too_long = false;
  for (;;) {
    const auto ch = buf->sbumpc();
    if (std::char_traits<char>::eq_int_type(ch, std::char_traits<char>::eof())) {
      in.setstate(std::ios::eofbit);
      if (!any) return ReadStatus::Eof;
      break;
    }
    any = true;
    const char c = std::char_traits<char>::to_char_type(ch);
    if (c == '\n') break;
    if (too_long) continue;
    if (line.size() >= max_line) {
      too_long = true;
      line.clear();
      continue;
    }
    line.push_back(c);
  }
  if (too_long) return ReadStatus::TooLong;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return ReadStatus::Line;
}

std::size_t serve_stream(std::istream& in, std::ostream& out, LineHandler& handler, std::size_t max_line) {
  std::size_t responses = 0;
  std::string line;
  while (!handler.closed()) {
    const auto status = read_line(in, line, max_line);
    if (status == ReadStatus::Eof) break;
    if (status == ReadStatus::Line &&
        std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }))
      continue;
    out << (status == ReadStatus::TooLong ? handler.too_long() : handler.handle_line(line)) << '\n';
    out.flush();
    if (!out) break;
    ++responses;
  }
  return responses;
}

TcpServer::TcpServer(HandlerFactory factory, std::uint16_t port, const std::string& host, std::size_t max_line)
    : factory_(std::move(factory)), max_line_(max_line) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw IoError("socket: " + errno_text());
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  auto addr = resolve(host, port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(listen_fd_, 16) != 0) {
    const auto msg = errno_text();
    ::close(listen_fd_);
    throw IoError("cannot listen on " + host + ":" + std::to_string(port) + ": " + msg);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::run() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      if (!stopping_) warn("accept failed: " + errno_text());
      break;
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard lock(mutex_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    open_fds_.push_back(fd);
    ++active_;
    std::thread([this, fd] { serve_connection(fd); }).detach();
  }
}

void TcpServer::serve_connection(int fd) {
  try {
    auto handler = factory_();
    SocketBuf buf(fd);
    std::istream in(&buf);
    std::ostream out(&buf);
    serve_stream(in, out, *handler, max_line_);
  } catch (const std::exception& e) {
    warn(std::string("connection ended with error: ") + e.what());
  }
  ++served_;
  std::lock_guard lock(mutex_);
  open_fds_.erase(std::find(open_fds_.begin(), open_fds_.end(), fd));
  ::close(fd);
  if (--active_ == 0) idle_.notify_all();
}

void TcpServer::stop() {
  std::unique_lock lock(mutex_);
  if (!stopping_.exchange(true) && listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  for (const int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
  idle_.wait(lock, [this] { return active_ == 0; });
}

TcpClient::TcpClient(const std::string& host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw IoError("socket: " + errno_text());
  auto addr = resolve(host, port);
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const auto msg = errno_text();
    ::close(fd_);
    throw IoError("cannot connect to " + host + ":" + std::to_string(port) + ": " + msg);
  }
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

TcpClient::~TcpClient() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpClient::send_line(const std::string& line) {
  const std::string framed = line + '\n';
  if (!send_all(fd_, framed.data(), framed.size())) throw IoError("send failed: " + errno_text());
}

std::string TcpClient::read_line() {
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    std::array<char, 1 << 16> chunk{};
    ssize_t n;
    do n = ::recv(fd_, chunk.data(), chunk.size(), 0);
    while (n < 0 && errno == EINTR);
    if (n <= 0) throw IoError("connection closed");
    buffer_.append(chunk.data(), static_cast<std::size_t>(n));
  }
}

}  // namespace splatsim::proto

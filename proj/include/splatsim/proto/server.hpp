#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "splatsim/proto/session.hpp"

namespace splatsim::proto {

enum class ReadStatus { Line, TooLong, Eof };

/// Reads up to '\n' (stripped, as is a trailing '\r'). An over-long line is consumed up to
/// its newline and reported as TooLong. A final unterminated line still counts.
ReadStatus read_line(std::istream& in, std::string& line, std::size_t max_line = kDefaultMaxLine);

/// Serves `handler` until end of input or close. Blank lines are skipped. Returns the
/// number of responses written.
std::size_t serve_stream(std::istream& in, std::ostream& out, LineHandler& handler,
                         std::size_t max_line = kDefaultMaxLine);

using HandlerFactory = std::function<std::unique_ptr<LineHandler>()>;

/// Line server over TCP. Each accepted connection gets its own handler from the factory and
/// its own thread.
class TcpServer {
 public:
  /// Binds and listens immediately; port 0 picks an ephemeral port. Throws IoError.
  TcpServer(HandlerFactory factory, std::uint16_t port, const std::string& host = "127.0.0.1",
            std::size_t max_line = kDefaultMaxLine);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  [[nodiscard]] std::uint16_t port() const { return port_; }
  /// Accept loop; returns after stop().
  void run();
  /// Closes the listener and every open connection, then waits for connection threads.
  void stop();
  [[nodiscard]] std::size_t connections_served() const { return served_; }

 private:
  void serve_connection(int fd);

  HandlerFactory factory_;
  std::size_t max_line_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<std::size_t> served_{0};
  std::mutex mutex_;
  std::condition_variable idle_;
  std::vector<int> open_fds_;
  std::size_t active_ = 0;
};

/// Blocking line client.
class TcpClient {
 public:
  /// Throws IoError when the connection fails.
  TcpClient(const std::string& host, std::uint16_t port);
  ~TcpClient();
  TcpClient(const TcpClient&) = delete;
  TcpClient& operator=(const TcpClient&) = delete;

  void send_line(const std::string& line);
  /// Throws IoError on a closed connection.
  std::string read_line();
  std::string request(const std::string& line) {
    send_line(line);
    return read_line();
  }
  nlohmann::json request(const nlohmann::json& message) { return nlohmann::json::parse(request(message.dump())); }

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace splatsim::proto

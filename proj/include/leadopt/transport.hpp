#pragma once

#include <chrono>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <sys/types.h>

namespace leadopt {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One request line out, one response line back. Implementations must be
// safe to call from several threads.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual std::string exchange(const std::string& line) = 0;
};

// Long-lived child process (`/bin/sh -c command`) talking over a socket pair
// bound to its stdin/stdout. Calls are serialized.
class SubprocessTransport final : public LineTransport {
 public:
  explicit SubprocessTransport(std::string command,
                               std::chrono::milliseconds timeout = std::chrono::seconds(30));
  ~SubprocessTransport() override;
  SubprocessTransport(const SubprocessTransport&) = delete;
  SubprocessTransport& operator=(const SubprocessTransport&) = delete;

  std::string exchange(const std::string& line) override;
  const std::string& command() const noexcept { return command_; }

 private:
  void start();
  void stop() noexcept;

  std::string command_;
  std::chrono::milliseconds timeout_;
  std::mutex mutex_;
  int fd_ = -1;
  pid_t pid_ = -1;
  std::string pending_;
};

// In-process endpoint, used by tests and by embedders.
class FunctionTransport final : public LineTransport {
 public:
  explicit FunctionTransport(std::function<std::string(const std::string&)> fn) : fn_(std::move(fn)) {}
  std::string exchange(const std::string& line) override { return fn_(line); }

 private:
  std::function<std::string(const std::string&)> fn_;
};

}  // namespace leadopt

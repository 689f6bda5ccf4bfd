#pragma once

// External segmenters run as child processes speaking newline-delimited JSON
// over stdin/stdout.
//
//   request:  {"id": str, "image": path, "width": int, "height": int,
//              "clicks": [{"x": int, "y": int, "positive": bool}],
//              "prev_mask": [runs...] | null}
//   response: {"id": str, "mask": [runs...]}  or  {"id": str, "error": str}
//
// Masks use rle_encode. Every failure surfaces as an adapter-error.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rclicks/error.hpp"
#include "rclicks/rle.hpp"
#include "rclicks/segmenter.hpp"

extern char** environ;

namespace rclicks {

namespace detail {

inline bool is_executable(const std::filesystem::path& p) {
  struct stat st {};
  return ::stat(p.c_str(), &st) == 0 && S_ISREG(st.st_mode) && ::access(p.c_str(), X_OK) == 0;
}

}  // namespace detail

/// Checks that the first word of a shell command names an executable file,
/// either as a path or through PATH. Raises startup-error otherwise.
inline std::filesystem::path resolve_adapter_command(const std::string& command) {
  std::istringstream words(command);
  std::string program;
  words >> program;
  if (program.empty()) fail(ErrorKind::kStartupError, "adapter command is empty");
  if (program.find('/') != std::string::npos) {
    if (detail::is_executable(program)) return program;
    fail(ErrorKind::kStartupError, "adapter program '" + program + "' is not an executable file");
  }
  const char* path_env = std::getenv("PATH");
  std::istringstream dirs(path_env ? path_env : "/usr/bin:/bin");
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    const auto candidate = std::filesystem::path(dir.empty() ? "." : dir) / program;
    if (detail::is_executable(candidate)) return candidate;
  }
  fail(ErrorKind::kStartupError, "adapter program '" + program + "' not found on PATH");
}

class SubprocessSegmenter final : public Segmenter {
 public:
  explicit SubprocessSegmenter(const std::string& command,
                               std::chrono::milliseconds timeout = std::chrono::seconds(120))
      : timeout_(timeout) {
    // A dead adapter must show up as a failed write, not kill the benchmark.
    ::signal(SIGPIPE, SIG_IGN);
    int in_pipe[2], out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) fail(ErrorKind::kAdapterError, "pipe failed");
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      fail(ErrorKind::kAdapterError, "pipe failed");
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
    const char* argv[] = {"sh", "-c", command.c_str(), nullptr};
    const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, nullptr, const_cast<char**>(argv), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    if (rc != 0) {
      ::close(to_child_);
      ::close(from_child_);
      fail(ErrorKind::kAdapterError, std::string("cannot spawn adapter: ") + std::strerror(rc));
    }
  }

  SubprocessSegmenter(const SubprocessSegmenter&) = delete;
  SubprocessSegmenter& operator=(const SubprocessSegmenter&) = delete;

  ~SubprocessSegmenter() override {
    ::close(to_child_);  // EOF asks the adapter to exit
    ::close(from_child_);
    int status = 0;
    for (int i = 0; i < 100; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
  }

  BinaryMask predict(const SegmentRequest& r) override {
    nlohmann::ordered_json req;
    req["id"] = r.id;
    req["image"] = r.image.string();
    req["width"] = r.width;
    req["height"] = r.height;
    auto clicks = nlohmann::ordered_json::array();
    for (const auto& c : r.clicks) clicks.push_back({{"x", c.x}, {"y", c.y}, {"positive", c.positive()}});
    req["clicks"] = std::move(clicks);
    req["prev_mask"] = r.prev_mask ? nlohmann::ordered_json(rle_encode(*r.prev_mask)) : nullptr;
    write_line(req.dump());

    const std::string line = read_line();
    nlohmann::json resp;
    try {
      resp = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kAdapterError, "malformed adapter response: " + std::string(e.what()));
    }
    if (!resp.is_object() || !resp.contains("id") || resp["id"] != r.id) {
      fail(ErrorKind::kAdapterError, "adapter response id does not match request '" + r.id + "'");
    }
    if (resp.contains("error")) {
      fail(ErrorKind::kAdapterError, "adapter reported: " + resp["error"].dump());
    }
    try {
      return rle_decode(resp.at("mask").get<std::vector<std::uint64_t>>(), r.width, r.height);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kAdapterError, "adapter mask is not a run list: " + std::string(e.what()));
    } catch (const Error& e) {
      fail(ErrorKind::kAdapterError, e.what());
    }
  }

 private:
  void write_line(const std::string& text) {
    std::string data = text + "\n";
    std::size_t done = 0;
    while (done < data.size()) {
      const ssize_t n = ::write(to_child_, data.data() + done, data.size() - done);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) fail(ErrorKind::kAdapterError, "adapter closed its input");
      done += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) fail(ErrorKind::kAdapterError, "adapter timed out");
      pollfd pfd{from_child_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (ready < 0 && errno == EINTR) continue;
      if (ready == 0) fail(ErrorKind::kAdapterError, "adapter timed out");
      char chunk[65536];
      const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) fail(ErrorKind::kAdapterError, "adapter exited without answering");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::chrono::milliseconds timeout_;
  std::string buffer_;
};

}  // namespace rclicks

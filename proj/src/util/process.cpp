// Copyright 2026 The Edgeflow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "edgeflow/util/process.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <thread>

#include "edgeflow/error.hpp"
#include "edgeflow/util/util.hpp"

namespace edgeflow {

namespace {

int decode_status(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

void redirect(const std::filesystem::path& path, int target_fd) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd >= 0) {
    ::dup2(fd, target_fd);
    ::close(fd);
  }
}

}  // namespace

ChildProcess ChildProcess::spawn(const std::vector<std::string>& argv,
                                 const SpawnOptions& opts) {
  if (argv.empty()) throw Error(Errc::invalid_argument, "empty command");
  if (opts.pipe_stdio) {
    // Writing to a child that already exited must fail, not kill us.
    static const bool ignored = [] { return ::signal(SIGPIPE, SIG_IGN) != SIG_ERR; }();
    (void)ignored;
  }
  int in_pipe[2] = {-1, -1};
  int out_pipe[2] = {-1, -1};
  if (opts.pipe_stdio) {
    if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0) {
      throw Error(Errc::io_error, "pipe failed");
    }
  }

  std::vector<std::string> env_strings;
  for (char** e = environ; *e != nullptr; ++e) {
    std::string_view kv(*e);
    auto key = kv.substr(0, kv.find('='));
    if (!opts.env.contains(std::string(key))) env_strings.emplace_back(kv);
  }
  for (const auto& [k, v] : opts.env) env_strings.push_back(k + "=" + v);
  std::vector<char*> envp;
  for (auto& s : env_strings) envp.push_back(s.data());
  envp.push_back(nullptr);
  std::vector<std::string> args = argv;
  std::vector<char*> argp;
  for (auto& s : args) argp.push_back(s.data());
  argp.push_back(nullptr);

  pid_t pid = ::fork();
  if (pid < 0) throw Error(Errc::io_error, "fork failed");
  if (pid == 0) {
    if (opts.new_session) ::setsid();
    ::signal(SIGPIPE, SIG_DFL);
    if (opts.pipe_stdio) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
    } else {
      int devnull = ::open("/dev/null", O_RDONLY);
      if (devnull >= 0) {
        ::dup2(devnull, STDIN_FILENO);
        ::close(devnull);
      }
    }
    if (opts.stdout_file) redirect(*opts.stdout_file, STDOUT_FILENO);
    if (opts.stderr_file) redirect(*opts.stderr_file, STDERR_FILENO);
    if (opts.cwd && ::chdir(opts.cwd->c_str()) != 0) ::_exit(126);
    ::execvpe(argp[0], argp.data(), envp.data());
    ::_exit(127);
  }

  ChildProcess child;
  child.pid_ = pid;
  if (opts.pipe_stdio) {
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    child.stdin_fd_ = in_pipe[1];
    child.stdout_fd_ = out_pipe[0];
  }
  return child;
}

ChildProcess::~ChildProcess() {
  if (pid_ > 0 && !exit_code_) {
    ::kill(pid_, SIGKILL);
    wait();
  }
  reset();
}

ChildProcess::ChildProcess(ChildProcess&& other) noexcept
    : pid_(other.pid_),
      stdin_fd_(other.stdin_fd_),
      stdout_fd_(other.stdout_fd_),
      exit_code_(other.exit_code_) {
  other.pid_ = -1;
  other.stdin_fd_ = -1;
  other.stdout_fd_ = -1;
}

ChildProcess& ChildProcess::operator=(ChildProcess&& other) noexcept {
  if (this != &other) {
    if (pid_ > 0 && !exit_code_) {
      ::kill(pid_, SIGKILL);
      wait();
    }
    reset();
    pid_ = other.pid_;
    stdin_fd_ = other.stdin_fd_;
    stdout_fd_ = other.stdout_fd_;
    exit_code_ = other.exit_code_;
    other.pid_ = -1;
    other.stdin_fd_ = -1;
    other.stdout_fd_ = -1;
  }
  return *this;
}

void ChildProcess::reset() {
  if (stdin_fd_ >= 0) ::close(stdin_fd_);
  if (stdout_fd_ >= 0) ::close(stdout_fd_);
  stdin_fd_ = stdout_fd_ = -1;
}

std::optional<int> ChildProcess::poll() {
  if (exit_code_ || pid_ <= 0) return exit_code_;
  int status = 0;
  pid_t r = ::waitpid(pid_, &status, WNOHANG);
  if (r == pid_) exit_code_ = decode_status(status);
  return exit_code_;
}

std::optional<int> ChildProcess::wait_for(std::chrono::milliseconds timeout) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    if (auto code = poll()) return code;
    if (std::chrono::steady_clock::now() >= deadline) return std::nullopt;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

int ChildProcess::wait() {
  if (exit_code_ || pid_ <= 0) return exit_code_.value_or(-1);
  int status = 0;
  while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
  }
  exit_code_ = decode_status(status);
  return *exit_code_;
}

void ChildProcess::signal(int sig) {
  if (pid_ > 0 && !exit_code_) ::kill(pid_, sig);
}

pid_t ChildProcess::release() {
  pid_t p = pid_;
  pid_ = -1;
  reset();
  return p;
}

bool ChildProcess::write_all(std::string_view bytes) {
  while (!bytes.empty()) {
    ssize_t n = ::write(stdin_fd_, bytes.data(), bytes.size());
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

bool ChildProcess::read_exact(char* out, std::size_t n) {
  while (n > 0) {
    ssize_t r = ::read(stdout_fd_, out, n);
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) return false;
    out += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

void ChildProcess::close_stdin() {
  if (stdin_fd_ >= 0) ::close(stdin_fd_);
  stdin_fd_ = -1;
}

ProcessResult run_process(const std::vector<std::string>& argv,
                          const SpawnOptions& opts,
                          std::chrono::milliseconds timeout,
                          std::size_t stderr_tail_bytes) {
  SpawnOptions o = opts;
  std::filesystem::path err_path;
  if (!o.stderr_file) {
    err_path = std::filesystem::temp_directory_path() /
               ("edgeflow-stderr-" + std::to_string(::getpid()) + "-" +
                std::to_string(steady_ms()));
    o.stderr_file = err_path;
  }
  ProcessResult result;
  auto child = ChildProcess::spawn(argv, o);
  auto code = child.wait_for(timeout);
  if (!code) {
    result.timed_out = true;
    child.signal(SIGKILL);
    result.exit_code = child.wait();
  } else {
    result.exit_code = *code;
  }
  std::error_code ec;
  if (std::filesystem::exists(*o.stderr_file, ec)) {
    std::string err = read_file(*o.stderr_file);
    if (err.size() > stderr_tail_bytes) {
      err = err.substr(err.size() - stderr_tail_bytes);
    }
    result.stderr_tail = std::move(err);
  }
  if (!err_path.empty()) std::filesystem::remove(err_path, ec);
  return result;
}

std::filesystem::path self_executable() {
  return std::filesystem::read_symlink("/proc/self/exe");
}

}  // namespace edgeflow

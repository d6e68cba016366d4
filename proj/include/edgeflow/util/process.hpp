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

#pragma once

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edgeflow {

struct SpawnOptions {
  std::map<std::string, std::string> env;  // added to the inherited env
  std::optional<std::filesystem::path> cwd;
  std::optional<std::filesystem::path> stdout_file;  // default: inherit
  std::optional<std::filesystem::path> stderr_file;
  bool pipe_stdio = false;  // stdin/stdout become pipes owned by ChildProcess
  bool new_session = false;
};

// Owns a forked child. Destruction kills and reaps a still-running child.
class ChildProcess {
 public:
  ChildProcess() = default;
  static ChildProcess spawn(const std::vector<std::string>& argv,
                            const SpawnOptions& opts = {});
  ~ChildProcess();
  ChildProcess(ChildProcess&& other) noexcept;
  ChildProcess& operator=(ChildProcess&& other) noexcept;
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  pid_t pid() const { return pid_; }
  bool valid() const { return pid_ > 0; }

  // Non-blocking; returns the exit code once the child has exited
  // (128 + signal for signalled children).
  std::optional<int> poll();
  std::optional<int> wait_for(std::chrono::milliseconds timeout);
  int wait();
  void signal(int sig);
  // Leave the child running; the handle forgets it.
  pid_t release();

  bool write_all(std::string_view bytes);
  bool read_exact(char* out, std::size_t n);
  void close_stdin();

 private:
  void reset();

  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  std::optional<int> exit_code_;
};

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string stderr_tail;
};

// Runs to completion (or timeout, after which the child is killed).
ProcessResult run_process(const std::vector<std::string>& argv,
                          const SpawnOptions& opts,
                          std::chrono::milliseconds timeout,
                          std::size_t stderr_tail_bytes = 4096);

std::filesystem::path self_executable();

}  // namespace edgeflow

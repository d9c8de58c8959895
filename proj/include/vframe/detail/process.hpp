#pragma once

// Minimal POSIX subprocess runner: argv in, exit status and merged
// stdout/stderr text out. No shell is involved, so paths need no quoting.

#include <cerrno>
#include <cstring>
#include <string>
#include <vector>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include "vframe/datamodel.hpp"

namespace vframe::detail {

struct ProcessResult {
  int exit_code = 0;
  bool launched = true;  // false when the executable could not be started
  std::string output;
};

inline ProcessResult run_process(const std::vector<std::string>& argv) {
  if (argv.empty()) throw InputError("run_process: empty argv");
  int out_pipe[2];
  int err_pipe[2];  // carries errno from a failed exec
  if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0)
    throw InputError(std::string("pipe: ") + std::strerror(errno));
  fcntl(err_pipe[1], F_SETFD, FD_CLOEXEC);

  pid_t pid = fork();
  if (pid < 0) throw InputError(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(out_pipe[1], STDERR_FILENO);
    close(out_pipe[0]);
    close(out_pipe[1]);
    close(err_pipe[0]);
    std::vector<char*> args;
    for (const std::string& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    execvp(args[0], args.data());
    int e = errno;
    [[maybe_unused]] auto n = write(err_pipe[1], &e, sizeof e);
    _exit(127);
  }
  close(out_pipe[1]);
  close(err_pipe[1]);

  ProcessResult result;
  char buf[4096];
  ssize_t got;
  while ((got = read(out_pipe[0], buf, sizeof buf)) > 0) result.output.append(buf, got);
  close(out_pipe[0]);

  int exec_errno = 0;
  if (read(err_pipe[0], &exec_errno, sizeof exec_errno) == sizeof exec_errno) {
    result.launched = false;
    result.output = std::strerror(exec_errno);
  }
  close(err_pipe[0]);

  int status = 0;
  waitpid(pid, &status, 0);
  if (WIFEXITED(status))
    result.exit_code = WEXITSTATUS(status);
  else
    result.exit_code = 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
  return result;
}

}  // namespace vframe::detail

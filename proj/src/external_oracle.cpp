#include "headprune/external_oracle.hpp"

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include "headprune/errors.hpp"

namespace headprune {
namespace {

nlohmann::json parse_frame(const std::optional<std::string>& line, const char* context) {
  if (!line) throw OracleError(std::string("evaluator closed its output during ") + context);
  try {
    auto j = nlohmann::json::parse(*line);
    if (!j.is_object() || !j.contains("op") || !j["op"].is_string()) {
      throw OracleError(std::string("malformed frame during ") + context + ": " + *line);
    }
    return j;
  } catch (const nlohmann::json::exception&) {
    throw OracleError(std::string("evaluator sent invalid JSON during ") + context + ": " + *line);
  }
}

[[noreturn]] void raise_error_frame(const nlohmann::json& frame) {
  std::string message = "evaluator reported an error";
  if (frame.contains("message") && frame["message"].is_string()) {
    message += ": " + frame["message"].get<std::string>();
  }
  throw OracleError(message);
}

}  // namespace

ProcessChannel::ProcessChannel(const std::string& command) {
  // A dead child must surface as EPIPE, not kill the engine.
  std::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2];
  int out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) throw OracleError("pipe() failed");
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw OracleError("pipe() failed");
  }
  pid_ = fork();
  if (pid_ < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    throw OracleError("fork() failed");
  }
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = fdopen(out_pipe[0], "r");
  if (!from_child_) {
    ::close(out_pipe[0]);
    throw OracleError("fdopen() failed");
  }
}

ProcessChannel::~ProcessChannel() {
  close_output();
  if (from_child_) std::fclose(from_child_);
  wait();
}

void ProcessChannel::send(const std::string& line) {
  if (to_child_ < 0) throw OracleError("evaluator input already closed");
  std::string buf = line + '\n';
  const char* p = buf.data();
  std::size_t left = buf.size();
  while (left > 0) {
    const ssize_t n = ::write(to_child_, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw OracleError(std::string("write to evaluator failed: ") + std::strerror(errno));
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

std::optional<std::string> ProcessChannel::receive() {
  if (!from_child_) return std::nullopt;
  char* raw = nullptr;
  std::size_t cap = 0;
  const ssize_t n = getline(&raw, &cap, from_child_);
  if (n < 0) {
    std::free(raw);
    return std::nullopt;
  }
  std::string line(raw, static_cast<std::size_t>(n));
  std::free(raw);
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
  return line;
}

void ProcessChannel::close_output() {
  if (to_child_ >= 0) {
    ::close(to_child_);
    to_child_ = -1;
  }
}

int ProcessChannel::wait() {
  if (pid_ <= 0) return -1;
  int status = 0;
  while (waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
  }
  pid_ = -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string hello_frame() { return R"({"op":"hello"})"; }

std::string evaluate_frame(std::uint64_t id, const PruneMask& mask) {
  nlohmann::ordered_json frame;
  frame["op"] = "evaluate";
  frame["id"] = id;
  frame["mask"] = nlohmann::json(mask);
  return frame.dump();
}

std::string bye_frame() { return R"({"op":"bye"})"; }

OracleInfo external_handshake(LineChannel& channel) {
  channel.send(hello_frame());
  const auto reply = parse_frame(channel.receive(), "handshake");
  const auto op = reply["op"].get<std::string>();
  if (op == "error") raise_error_frame(reply);
  if (op != "hello") throw OracleError("expected hello reply, got op '" + op + "'");

  for (const char* key : {"layers", "heads"}) {
    if (!reply.contains(key) || !reply[key].is_number_integer()) {
      throw OracleError(std::string("handshake is missing integer field '") + key + "'");
    }
  }
  if (!reply.contains("baseline") || !reply["baseline"].is_number()) {
    throw OracleError("handshake is missing numeric field 'baseline'");
  }
  const auto layers = reply["layers"].get<long long>();
  const auto heads = reply["heads"].get<long long>();
  if (layers < 1 || heads < 1 || layers > 1 << 20 || heads > 1 << 20) {
    throw OracleError("handshake geometry " + std::to_string(layers) + "x" +
                      std::to_string(heads) + " is invalid");
  }
  OracleInfo info;
  info.geometry.layers = static_cast<int>(layers);
  info.geometry.heads_per_layer = static_cast<int>(heads);
  info.baseline_accuracy = reply["baseline"].get<double>();
  validate(info);
  return info;
}

ExternalOracle::ExternalOracle(std::unique_ptr<LineChannel> channel)
    : channel_(std::move(channel)) {
  info_ = external_handshake(*channel_);
}

std::shared_ptr<ExternalOracle> ExternalOracle::spawn(const std::string& command) {
  return std::make_shared<ExternalOracle>(std::make_unique<ProcessChannel>(command));
}

ExternalOracle::~ExternalOracle() {
  try {
    shutdown();
  } catch (...) {
    // The evaluator may already be gone; nothing left to report to.
  }
}

void ExternalOracle::shutdown() {
  if (!open_) return;
  open_ = false;
  channel_->send(bye_frame());
  channel_->close_output();
}

double ExternalOracle::accuracy(const PruneMask& mask) {
  if (!open_) throw OracleError("external oracle already shut down");
  const std::uint64_t id = next_id_++;
  channel_->send(evaluate_frame(id, mask));
  const auto reply = parse_frame(channel_->receive(), "evaluation");
  const auto op = reply["op"].get<std::string>();
  if (op == "error") raise_error_frame(reply);
  if (op != "result") throw OracleError("expected result frame, got op '" + op + "'");
  if (!reply.contains("id") || !reply["id"].is_number_unsigned() ||
      reply["id"].get<std::uint64_t>() != id) {
    throw OracleError("evaluator replied out of order; expected id " + std::to_string(id));
  }
  if (!reply.contains("accuracy") || !reply["accuracy"].is_number()) {
    throw OracleError("result frame is missing numeric 'accuracy'");
  }
  return reply["accuracy"].get<double>();
}

}  // namespace headprune

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "headprune/oracle.hpp"

namespace headprune {

/// A bidirectional line-oriented transport. Lines exclude the trailing '\n'.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void send(const std::string& line) = 0;
  /// std::nullopt on end of stream.
  virtual std::optional<std::string> receive() = 0;
  /// Signals that no more lines will be sent.
  virtual void close_output() {}
};

/// Child process started with `/bin/sh -c command`, talking over its
/// stdin/stdout. Stderr is inherited.
class ProcessChannel final : public LineChannel {
 public:
  explicit ProcessChannel(const std::string& command);
  ~ProcessChannel() override;

  ProcessChannel(const ProcessChannel&) = delete;
  ProcessChannel& operator=(const ProcessChannel&) = delete;

  void send(const std::string& line) override;
  std::optional<std::string> receive() override;
  void close_output() override;

  /// Waits for the child to exit and returns its status code (-1 if killed).
  int wait();

 private:
  int pid_ = -1;
  int to_child_ = -1;
  std::FILE* from_child_ = nullptr;
};

// Wire frames, one JSON object per line.
std::string hello_frame();
std::string evaluate_frame(std::uint64_t id, const PruneMask& mask);
std::string bye_frame();

/// Sends the hello frame and validates the reply. Throws OracleError on a
/// malformed reply, an empty geometry, or a baseline outside [0, 100].
OracleInfo external_handshake(LineChannel& channel);

/// Oracle backed by an external evaluator speaking the stdio protocol.
/// Requests are serialized; ids start at 1 and strictly increase.
class ExternalOracle final : public AccuracyOracle {
 public:
  explicit ExternalOracle(std::unique_ptr<LineChannel> channel);
  /// Spawns `command` and performs the handshake.
  static std::shared_ptr<ExternalOracle> spawn(const std::string& command);
  ~ExternalOracle() override;

  const OracleInfo& info() const noexcept override { return info_; }
  double accuracy(const PruneMask& mask) override;
  bool concurrent() const noexcept override { return false; }

  /// Sends bye and closes the evaluator's stdin. Idempotent.
  void shutdown();

 private:
  std::unique_ptr<LineChannel> channel_;
  OracleInfo info_;
  std::uint64_t next_id_ = 1;
  bool open_ = true;
};

}  // namespace headprune

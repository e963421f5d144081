#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace tracexp {

// Errors are split into two families so the CLI can map them onto distinct
// exit codes: DataError for anything wrong with inputs or invariants, and
// TransportError for failures talking to a remote judge.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

// --- trace_model -----------------------------------------------------------

class MalformedRecord : public DataError {
 public:
  MalformedRecord(std::size_t line_no, std::string reason)
      : DataError("malformed record at line " + std::to_string(line_no) + ": " +
                  reason),
        line_no_(line_no),
        reason_(std::move(reason)) {}

  std::size_t line_no() const { return line_no_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t line_no_;
  std::string reason_;
};

class DuplicateRunId : public DataError {
 public:
  explicit DuplicateRunId(std::string run_id)
      : DataError("duplicate run_id: " + run_id), run_id_(std::move(run_id)) {}
  const std::string& run_id() const { return run_id_; }

 private:
  std::string run_id_;
};

// --- synth_env -------------------------------------------------------------

class InvalidFaultSpec : public DataError {
 public:
  using DataError::DataError;
};

class OrdinalOutOfRange : public DataError {
 public:
  using DataError::DataError;
};

// --- rubric_judge ----------------------------------------------------------

class JudgeTransport : public TransportError {
 public:
  JudgeTransport(int status, const std::string& detail)
      : TransportError("judge transport failure (status " +
                       std::to_string(status) + "): " + detail),
        status_(status) {}
  // HTTP status, or -1 when no response was received.
  int status() const { return status_; }

 private:
  int status_;
};

class JudgeParse : public DataError {
 public:
  explicit JudgeParse(const std::string& reason)
      : DataError("unparseable judge reply: " + reason) {}
};

class MissingOutcome : public DataError {
 public:
  explicit MissingOutcome(std::string run_id)
      : DataError("no outcome for run_id: " + run_id), run_id_(std::move(run_id)) {}
  const std::string& run_id() const { return run_id_; }

 private:
  std::string run_id_;
};

// --- outcome_stats / bridge ------------------------------------------------

class EmptyMatrix : public DataError {
 public:
  EmptyMatrix() : DataError("flag matrix is empty") {}
};

class DegenerateOutcomeClass : public DataError {
 public:
  using DataError::DataError;
};

class CorpusMismatch : public DataError {
 public:
  using DataError::DataError;
};

// --- static_xai ------------------------------------------------------------

class EmptyVocabulary : public DataError {
 public:
  EmptyVocabulary()
      : DataError("document-frequency bounds exclude every term") {}
};

class SingleClassInput : public DataError {
 public:
  SingleClassInput()
      : DataError("training labels contain a single class") {}
};

class DimensionMismatch : public DataError {
 public:
  DimensionMismatch(std::size_t expected, std::size_t got)
      : DataError("dimension mismatch: expected " + std::to_string(expected) +
                  ", got " + std::to_string(got)) {}
};

class DegenerateInstance : public DataError {
 public:
  DegenerateInstance() : DataError("instance has no active features") {}
};

class LengthMismatch : public DataError {
 public:
  using DataError::DataError;
};

// Rank correlation is undefined when a ranking is constant.
class UndefinedCorrelation : public DataError {
 public:
  using DataError::DataError;
};

// --- mep -------------------------------------------------------------------

class InvariantViolation : public DataError {
 public:
  using DataError::DataError;
};

class DanglingStepReference : public DataError {
 public:
  explicit DanglingStepReference(long long step)
      : DataError("step reference does not resolve: " + std::to_string(step)) {}
};

class SchemaVersionMismatch : public DataError {
 public:
  using DataError::DataError;
};

class MalformedPacket : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace tracexp

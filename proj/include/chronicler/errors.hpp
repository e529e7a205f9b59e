#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace chronicler {

// Typed error codes surfaced through Error. CLI exit codes map onto the
// category of the code (see tools/main.cpp).
enum class Errc {
  EmptyCorpus,
  UnreadableFile,
  ChunkingFailed,
  InvalidPattern,
  ExtractionFailed,
  Transport,            // transient transport fault, retryable
  GatewayUnavailable,   // retries exhausted
  AuthError,
  HttpError,
  MissingTemplate,
  UnboundPlaceholder,
  Ambiguous,
  CorruptIndex,
  UnsupportedVersion,
  UnknownEra,
  OrdinalOutOfRange,
  NoSuchFigure,
  ReviewStoreError,
  InvalidTicket,
  ConfigError,
  IoError,
  InvalidData,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code),
        message_(std::move(message)) {}

  Errc code() const { return code_; }
  const std::string& message() const { return message_; }

  // Optional payload, e.g. candidate names for Ambiguous/NoSuchFigure.
  Error& with_candidates(std::vector<std::string> candidates) {
    candidates_ = std::move(candidates);
    return *this;
  }
  const std::vector<std::string>& candidates() const { return candidates_; }

 private:
  Errc code_;
  std::string message_;
  std::vector<std::string> candidates_;
};

}  // namespace chronicler

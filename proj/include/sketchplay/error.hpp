#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sketchplay {

enum class ErrorCode {
  InvalidInput,
  Parse,
  Numeric,
  InvalidDistribution,
  Degenerate,
  PointAtInfinity,
  EmptyDataset,
  InvalidTheme,
  TurnViolation,
  Channel,
  EmptyContext,
  NotAVoter,
  SessionClosed,
  NoPendingSuggestion,
  SuggestionPending,
  Replay,
  NotFound,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid_input";
    case ErrorCode::Parse: return "parse_error";
    case ErrorCode::Numeric: return "numeric_error";
    case ErrorCode::InvalidDistribution: return "invalid_distribution";
    case ErrorCode::Degenerate: return "degenerate_configuration";
    case ErrorCode::PointAtInfinity: return "point_at_infinity";
    case ErrorCode::EmptyDataset: return "empty_dataset";
    case ErrorCode::InvalidTheme: return "invalid_theme";
    case ErrorCode::TurnViolation: return "turn_violation";
    case ErrorCode::Channel: return "channel_error";
    case ErrorCode::EmptyContext: return "empty_context";
    case ErrorCode::NotAVoter: return "not_a_voter";
    case ErrorCode::SessionClosed: return "session_closed";
    case ErrorCode::NoPendingSuggestion: return "no_pending_suggestion";
    case ErrorCode::SuggestionPending: return "suggestion_pending";
    case ErrorCode::Replay: return "replay_error";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::Io: return "io_error";
  }
  return "unknown";
}

/// Every failure in the library surfaces as this exception. `detail` carries
/// machine-readable context (an expected player, an event index, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace sketchplay

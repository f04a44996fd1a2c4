#pragma once

#include <stdexcept>
#include <string>

namespace fslab {

enum class ErrorKind {
  InvalidParams,
  NoBracket,
  NonConvergence,
  StationOutOfRange,
  InvalidBeta,
  IncompatibleData,
  PicardDivergence,
  FlowReversal,
  InsufficientHistory,
  DegenerateBackground,
  OrderUnavailable,
  IllConditionedCorrection,
  MissingOrder,
  InsufficientStations,
  BadWeight,
  NonPositiveQuantity,
  Io,
};

const char *error_kind_name(ErrorKind k);

// Single exception type; the kind carries the failure class.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what),
        kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

inline const char *error_kind_name(ErrorKind k) {
  switch (k) {
  case ErrorKind::InvalidParams: return "InvalidParams";
  case ErrorKind::NoBracket: return "NoBracket";
  case ErrorKind::NonConvergence: return "NonConvergence";
  case ErrorKind::StationOutOfRange: return "StationOutOfRange";
  case ErrorKind::InvalidBeta: return "InvalidBeta";
  case ErrorKind::IncompatibleData: return "IncompatibleData";
  case ErrorKind::PicardDivergence: return "PicardDivergence";
  case ErrorKind::FlowReversal: return "FlowReversal";
  case ErrorKind::InsufficientHistory: return "InsufficientHistory";
  case ErrorKind::DegenerateBackground: return "DegenerateBackground";
  case ErrorKind::OrderUnavailable: return "OrderUnavailable";
  case ErrorKind::IllConditionedCorrection: return "IllConditionedCorrection";
  case ErrorKind::MissingOrder: return "MissingOrder";
  case ErrorKind::InsufficientStations: return "InsufficientStations";
  case ErrorKind::BadWeight: return "BadWeight";
  case ErrorKind::NonPositiveQuantity: return "NonPositiveQuantity";
  case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

} // namespace fslab

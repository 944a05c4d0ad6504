#include "mmm/error.hpp"

namespace mmm {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonUniformTimeStep: return "NonUniformTimeStep";
    case ErrorCode::NegativeSpend: return "NegativeSpend";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ZeroMeanColumn: return "ZeroMeanColumn";
    case ErrorCode::CorrelationScreenFailed: return "CorrelationScreenFailed";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SpecMismatch: return "SpecMismatch";
    case ErrorCode::NonFiniteDensityAtInit: return "NonFiniteDensityAtInit";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::ZeroResponseTotal: return "ZeroResponseTotal";
    case ErrorCode::AllZeroResponse: return "AllZeroResponse";
    case ErrorCode::DegenerateDesign: return "DegenerateDesign";
    case ErrorCode::NonUnitOmega: return "NonUnitOmega";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace mmm

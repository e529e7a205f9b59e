#include "chronicler/errors.hpp"

namespace chronicler {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::UnreadableFile: return "UnreadableFile";
    case Errc::ChunkingFailed: return "ChunkingFailed";
    case Errc::InvalidPattern: return "InvalidPattern";
    case Errc::ExtractionFailed: return "ExtractionFailed";
    case Errc::Transport: return "Transport";
    case Errc::GatewayUnavailable: return "GatewayUnavailable";
    case Errc::AuthError: return "AuthError";
    case Errc::HttpError: return "HttpError";
    case Errc::MissingTemplate: return "MissingTemplate";
    case Errc::UnboundPlaceholder: return "UnboundPlaceholder";
    case Errc::Ambiguous: return "Ambiguous";
    case Errc::CorruptIndex: return "CorruptIndex";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::UnknownEra: return "UnknownEra";
    case Errc::OrdinalOutOfRange: return "OrdinalOutOfRange";
    case Errc::NoSuchFigure: return "NoSuchFigure";
    case Errc::ReviewStoreError: return "ReviewStoreError";
    case Errc::InvalidTicket: return "InvalidTicket";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
    case Errc::InvalidData: return "InvalidData";
  }
  return "Unknown";
}

}  // namespace chronicler

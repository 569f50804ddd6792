#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "authcoin/bytes.hpp"

namespace authcoin {

enum class ErrorCode {
  parse,
  invariant_violation,
  unsupported_key_size,
  malformed_key,
  decryption_failure,
  invalid_record,
  empty_pending,
  invalid_block,
  broken_link,
  insufficient_work,
  io_error,
  corrupt_file,
  not_authorized,
  unknown_key,
  unknown_signature,
  formal_validation_failed,
  self_verification,
  unsupported_combination,
  wrong_state,
  not_eligible,
  var_closed,
  invalid_config,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for every domain failure. Optional context fields
/// are filled where the failing operation has them (record id, block height).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

  const std::optional<Digest>& subject() const { return subject_; }
  const std::optional<Height>& height() const { return height_; }

  Error&& with_subject(const Digest& d) && {
    subject_ = d;
    return std::move(*this);
  }
  Error&& with_height(Height h) && {
    height_ = h;
    return std::move(*this);
  }

 private:
  ErrorCode code_;
  std::optional<Digest> subject_;
  std::optional<Height> height_;
};

}  // namespace authcoin

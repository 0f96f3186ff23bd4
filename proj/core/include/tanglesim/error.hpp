#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tanglesim {

enum class Errc {
  unknown_parent,
  duplicate_parent,
  bad_parent_count,
  invalid_timing,
  unknown_tx,
  not_enough_tips,
  no_compatible_pair,
  at_tip,
  not_conflicting,
  too_large,
  invalid_config,
  invalid_scenario,
  insufficient_history,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace tanglesim

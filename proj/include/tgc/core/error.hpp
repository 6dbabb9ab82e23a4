#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tgc {

/// Base of every error the library throws. `kind()` is a stable, machine
/// parsable class name that the CLI prints on failure.
class Error : public std::runtime_error {
 public:
  Error(std::string_view kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] std::string_view kind() const noexcept { return kind_; }

 private:
  std::string_view kind_;
};

#define TGC_DEFINE_ERROR(Name, tag)                                    \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(tag, what) {}       \
  };

TGC_DEFINE_ERROR(DimensionError, "dimension_error")
TGC_DEFINE_ERROR(InputError, "input_error")
TGC_DEFINE_ERROR(FormatError, "format_error")
TGC_DEFINE_ERROR(PreconditionError, "precondition_error")
TGC_DEFINE_ERROR(ContractError, "contract_error")
TGC_DEFINE_ERROR(NumericError, "numeric_error")
TGC_DEFINE_ERROR(ConfigError, "config_error")
TGC_DEFINE_ERROR(IoError, "io_error")

#undef TGC_DEFINE_ERROR

}  // namespace tgc

#pragma once

#include <stdexcept>
#include <string>

namespace dxt {

/// Base of every library error. Carries the name of the module that raised it
/// so the command line can report "module: message".
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(message), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

#define DXT_DEFINE_ERROR(Name)        \
  class Name : public Error {         \
   public:                            \
    using Error::Error;               \
  }

DXT_DEFINE_ERROR(ConfigError);
DXT_DEFINE_ERROR(BoundsError);
DXT_DEFINE_ERROR(ArchError);
DXT_DEFINE_ERROR(ShapeError);
DXT_DEFINE_ERROR(LayerError);
DXT_DEFINE_ERROR(CacheError);
DXT_DEFINE_ERROR(FormatError);
DXT_DEFINE_ERROR(IoError);
DXT_DEFINE_ERROR(EmptyGroupError);
DXT_DEFINE_ERROR(DegenerateGroupError);
DXT_DEFINE_ERROR(DataError);
DXT_DEFINE_ERROR(NotFoundError);

#undef DXT_DEFINE_ERROR

}  // namespace dxt

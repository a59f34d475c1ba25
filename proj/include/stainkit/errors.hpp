#pragma once

#include <stdexcept>
#include <string>

namespace stainkit {

/// Base of every error raised by the toolkit. `name()` is the stable error
/// identifier printed by the CLI (e.g. "ChannelCountError").
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& message)
      : std::runtime_error(message), name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

#define STAINKIT_DEFINE_ERROR(Type)                                  \
  class Type : public Error {                                        \
   public:                                                           \
    explicit Type(const std::string& message) : Error(#Type, message) {} \
  }

STAINKIT_DEFINE_ERROR(ChannelCountError);
STAINKIT_DEFINE_ERROR(DomainError);
STAINKIT_DEFINE_ERROR(DimensionError);
STAINKIT_DEFINE_ERROR(InvalidStainMatrix);
STAINKIT_DEFINE_ERROR(SingularStainMatrix);
STAINKIT_DEFINE_ERROR(InsufficientTissue);
STAINKIT_DEFINE_ERROR(DegenerateStainDistribution);
STAINKIT_DEFINE_ERROR(EmptyInput);
STAINKIT_DEFINE_ERROR(ConfigError);
STAINKIT_DEFINE_ERROR(DegenerateImage);
STAINKIT_DEFINE_ERROR(InsufficientTissueArea);
STAINKIT_DEFINE_ERROR(InvalidAnnotation);
STAINKIT_DEFINE_ERROR(ParseError);
STAINKIT_DEFINE_ERROR(IoError);

#undef STAINKIT_DEFINE_ERROR

}  // namespace stainkit

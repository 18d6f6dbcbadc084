#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sumspec {

// Base for all library errors. Pipeline stages may attach a stage tag so
// callers can tell where a propagated failure originated.
class Error : public std::runtime_error {
public:
  explicit Error(std::string message)
      : std::runtime_error(message), message_(std::move(message)) {}

  const std::string& stage() const { return stage_; }

  void set_stage(const std::string& stage) {
    if (!stage_.empty()) return;  // keep the innermost attribution
    stage_ = stage;
    tagged_ = "[" + stage_ + "] " + message_;
  }

  const char* what() const noexcept override {
    return tagged_.empty() ? message_.c_str() : tagged_.c_str();
  }

private:
  std::string message_;
  std::string stage_;
  std::string tagged_;
};

#define SUMSPEC_DEFINE_ERROR(Name)                    \
  class Name : public Error {                         \
  public:                                             \
    explicit Name(std::string m) : Error(std::move(m)) {} \
  }

SUMSPEC_DEFINE_ERROR(IndexOutOfRange);
SUMSPEC_DEFINE_ERROR(SelfLoop);
SUMSPEC_DEFINE_ERROR(SizeMismatch);
SUMSPEC_DEFINE_ERROR(AllRowsDropped);
SUMSPEC_DEFINE_ERROR(InvalidDistribution);
SUMSPEC_DEFINE_ERROR(IdentifiabilityViolation);
SUMSPEC_DEFINE_ERROR(EmptyCommunity);
SUMSPEC_DEFINE_ERROR(ConvergenceFailure);
SUMSPEC_DEFINE_ERROR(KTooLarge);
SUMSPEC_DEFINE_ERROR(DegenerateInput);
SUMSPEC_DEFINE_ERROR(NoNonzeroRows);
SUMSPEC_DEFINE_ERROR(ConfigError);
SUMSPEC_DEFINE_ERROR(IoError);

#undef SUMSPEC_DEFINE_ERROR

}  // namespace sumspec

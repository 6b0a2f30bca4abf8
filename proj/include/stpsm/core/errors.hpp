#pragma once

#include <stdexcept>
#include <string>

namespace stpsm {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define STPSM_DEFINE_ERROR(Name)                  \
  class Name : public Error {                     \
   public:                                        \
    explicit Name(const std::string& what)        \
        : Error(std::string(#Name ": ") + what) {} \
  }

// core
STPSM_DEFINE_ERROR(DegenerateShape);
STPSM_DEFINE_ERROR(IndexOutOfRange);
STPSM_DEFINE_ERROR(DimensionMismatch);
STPSM_DEFINE_ERROR(InvalidArgument);
STPSM_DEFINE_ERROR(IoError);

// surfaces
STPSM_DEFINE_ERROR(OutOfBounds);
STPSM_DEFINE_ERROR(ProjectionFailure);
STPSM_DEFINE_ERROR(InvalidSpec);

// psm
STPSM_DEFINE_ERROR(DegenerateConfiguration);
STPSM_DEFINE_ERROR(NonFiniteObjective);

// lds
STPSM_DEFINE_ERROR(SingularInnovation);
STPSM_DEFINE_ERROR(SingularPrediction);
STPSM_DEFINE_ERROR(NonFinite);

// eval
STPSM_DEFINE_ERROR(ShapeMismatch);
STPSM_DEFINE_ERROR(InvalidFraction);
STPSM_DEFINE_ERROR(DegenerateEnsemble);

#undef STPSM_DEFINE_ERROR

/// Raised by the EM M-step when a per-time sufficient statistic cannot be
/// inverted even after the ridge is applied.
class RankDeficientStatistics : public Error {
 public:
  RankDeficientStatistics(int time_index, const std::string& what)
      : Error("RankDeficientStatistics at t=" + std::to_string(time_index + 1) + ": " + what),
        time_index_(time_index) {}
  int time_index() const noexcept { return time_index_; }

 private:
  int time_index_;
};

}  // namespace stpsm

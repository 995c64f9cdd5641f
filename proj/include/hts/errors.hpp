#pragma once

#include <stdexcept>
#include <string>

namespace hts {

// Every domain failure carries a stable machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what) : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define HTS_DEFINE_ERROR(Name)                                              \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(#Name, what) {}          \
  };

HTS_DEFINE_ERROR(ParseError)
HTS_DEFINE_ERROR(UnglueableEdge)
HTS_DEFINE_ERROR(DegenerateTriangle)
HTS_DEFINE_ERROR(BadConeAngle)
HTS_DEFINE_ERROR(SingularMatrix)
HTS_DEFINE_ERROR(BudgetExceeded)
HTS_DEFINE_ERROR(NotApplicable)
HTS_DEFINE_ERROR(RankDeficient)
HTS_DEFINE_ERROR(NullHomotopic)
HTS_DEFINE_ERROR(BadCurveWord)
HTS_DEFINE_ERROR(SharedArcUnresolved)
HTS_DEFINE_ERROR(WidthViolation)
HTS_DEFINE_ERROR(HorizontalPiece)
HTS_DEFINE_ERROR(HorizontalGeodesic)
HTS_DEFINE_ERROR(HigherOrderZero)
HTS_DEFINE_ERROR(DeltaOutOfRange)
HTS_DEFINE_ERROR(QuadratureBudget)
HTS_DEFINE_ERROR(BadThresholds)
HTS_DEFINE_ERROR(NonIntegerWeights)
HTS_DEFINE_ERROR(PreconditionViolation)

#undef HTS_DEFINE_ERROR

}  // namespace hts

#pragma once

#include <stdexcept>
#include <string>

namespace ecgnet {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define ECGNET_DEFINE_ERROR(Name)                 \
  struct Name : Error {                           \
    explicit Name(const std::string& msg = #Name) \
        : Error(std::string(#Name) + ": " + msg) {} \
  }

// dsp
ECGNET_DEFINE_ERROR(EmptySignal);
ECGNET_DEFINE_ERROR(BandTooWide);
ECGNET_DEFINE_ERROR(LengthMismatch);

// nn
ECGNET_DEFINE_ERROR(ShapeMismatch);
ECGNET_DEFINE_ERROR(InvalidLevel);
ECGNET_DEFINE_ERROR(BadMagic);
ECGNET_DEFINE_ERROR(VersionUnsupported);
ECGNET_DEFINE_ERROR(TruncatedFile);

// optim
ECGNET_DEFINE_ERROR(LabelOutOfRange);
ECGNET_DEFINE_ERROR(NonFiniteGradient);
ECGNET_DEFINE_ERROR(EmptyDataset);
ECGNET_DEFINE_ERROR(DivergenceDetected);

// data
ECGNET_DEFINE_ERROR(InvalidDuration);
ECGNET_DEFINE_ERROR(NotPowerOfTwoLength);
ECGNET_DEFINE_ERROR(RaggedCsvRow);
ECGNET_DEFINE_ERROR(BadLabel);

// fusion
ECGNET_DEFINE_ERROR(SegmentCountMismatch);
ECGNET_DEFINE_ERROR(NotOnSimplex);

#undef ECGNET_DEFINE_ERROR

}  // namespace ecgnet

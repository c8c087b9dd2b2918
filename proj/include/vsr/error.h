// include/vsr/error.h

// Copyright 2026 The vsrlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef VSR_ERROR_H_
#define VSR_ERROR_H_

#include <stdexcept>
#include <string>

namespace vsr {

// Base class of every error raised by the library. The CLI maps these to
// exit status 1; anything else escaping main is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define VSR_DEFINE_ERROR(Name)             \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

VSR_DEFINE_ERROR(IoError);
VSR_DEFINE_ERROR(IngestError);
VSR_DEFINE_ERROR(IntegrityError);
VSR_DEFINE_ERROR(ConfigError);
VSR_DEFINE_ERROR(DegenerateSplitError);
VSR_DEFINE_ERROR(DegenerateGeometryError);
VSR_DEFINE_ERROR(InsufficientDataError);
VSR_DEFINE_ERROR(ShapeError);
VSR_DEFINE_ERROR(TrainingDivergedError);
VSR_DEFINE_ERROR(SequenceTooShortError);
VSR_DEFINE_ERROR(IncompatibleStreamsError);
VSR_DEFINE_ERROR(PipelineOrderError);
VSR_DEFINE_ERROR(LexiconError);
VSR_DEFINE_ERROR(OovError);
VSR_DEFINE_ERROR(AlignmentInfeasibleError);
VSR_DEFINE_ERROR(EmptyBeamError);
VSR_DEFINE_ERROR(UndefinedWerError);

#undef VSR_DEFINE_ERROR

}  // namespace vsr

#endif  // VSR_ERROR_H_
